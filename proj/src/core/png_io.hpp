#pragma once

#include <filesystem>

#include "core/image.hpp"

namespace mvg4d {

/// Writes 8-bit RGB. Values are clamped to [0,1] and quantized round-half-up
/// (byte = floor(v * 255 + 0.5)).
void write_png(const Image& image, const std::filesystem::path& path);

/// Reads an 8-bit RGB PNG; anything else is a FormatError. Bytes map to
/// doubles as b / 255.
Image read_png(const std::filesystem::path& path);

} // namespace mvg4d

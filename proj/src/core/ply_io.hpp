#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/scene.hpp"

namespace mvg4d {

/// Splat interchange PLY: binary little-endian, one vertex element with
/// float properties in exactly this order:
///   x y z nx ny nz f_dc_0 f_dc_1 f_dc_2 opacity scale_0 scale_1 scale_2
///   rot_0 rot_1 rot_2 rot_3
/// Normals are written as zeros. Colors are stored as SH DC coefficients,
/// f_dc = (c - 0.5) / 0.28209479177387814. Opacity is the logit, scales are
/// logs, the quaternion is (w, x, y, z).
inline constexpr double kShDcFactor = 0.28209479177387814;

std::vector<std::uint8_t> export_ply(const GaussianCloud& cloud);
GaussianCloud import_ply(const std::vector<std::uint8_t>& bytes);

void save_ply(const GaussianCloud& cloud, const std::filesystem::path& path);
GaussianCloud load_ply(const std::filesystem::path& path);

} // namespace mvg4d

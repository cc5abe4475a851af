#include "core/ply_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "core/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "splat PLY io assumes a little-endian host");

namespace mvg4d {

namespace {

constexpr std::array<const char*, 17> kProperties = {
    "x",       "y",       "z",       "nx",      "ny",      "nz",
    "f_dc_0",  "f_dc_1",  "f_dc_2",  "opacity", "scale_0", "scale_1",
    "scale_2", "rot_0",   "rot_1",   "rot_2",   "rot_3"};

void append_float(std::vector<std::uint8_t>& out, float v) {
    std::uint8_t raw[4];
    std::memcpy(raw, &v, 4);
    out.insert(out.end(), raw, raw + 4);
}

/// Reads one header line ending in '\n'; advances offset past it.
std::string read_line(const std::vector<std::uint8_t>& bytes, std::size_t& offset) {
    std::size_t start = offset;
    while (offset < bytes.size() && bytes[offset] != '\n') {
        ++offset;
    }
    if (offset >= bytes.size()) {
        throw FormatError("unterminated PLY header line at byte offset " + std::to_string(start));
    }
    std::string line(bytes.begin() + start, bytes.begin() + offset);
    ++offset; // consume '\n'
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return line;
}

} // namespace

std::vector<std::uint8_t> export_ply(const GaussianCloud& cloud) {
    if (cloud.empty()) {
        throw InvalidArgumentError("refusing to export an empty cloud");
    }

    std::string header = "ply\nformat binary_little_endian 1.0\nelement vertex " +
                         std::to_string(cloud.size()) + "\n";
    for (const char* p : kProperties) {
        header += "property float ";
        header += p;
        header += "\n";
    }
    header += "end_header\n";

    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + cloud.size() * kProperties.size() * 4);
    for (const auto& g : cloud.gaussians) {
        for (int i = 0; i < 3; ++i) {
            append_float(out, static_cast<float>(g.position[i]));
        }
        for (int i = 0; i < 3; ++i) {
            append_float(out, 0.0f); // normals unused
        }
        for (int i = 0; i < 3; ++i) {
            append_float(out, static_cast<float>((g.color[i] - 0.5) / kShDcFactor));
        }
        append_float(out, static_cast<float>(g.opacity_logit));
        for (int i = 0; i < 3; ++i) {
            append_float(out, static_cast<float>(g.log_scale[i]));
        }
        for (int i = 0; i < 4; ++i) {
            append_float(out, static_cast<float>(g.rotation[i]));
        }
    }
    return out;
}

GaussianCloud import_ply(const std::vector<std::uint8_t>& bytes) {
    std::size_t offset = 0;

    if (read_line(bytes, offset) != "ply") {
        throw FormatError("missing 'ply' magic at byte offset 0");
    }
    {
        std::size_t at = offset;
        std::string format = read_line(bytes, offset);
        if (format == "format ascii 1.0") {
            throw FormatError("ASCII PLY is not supported (byte offset " + std::to_string(at) +
                              ")");
        }
        if (format != "format binary_little_endian 1.0") {
            throw FormatError("unsupported PLY format line '" + format + "' at byte offset " +
                              std::to_string(at));
        }
    }

    std::size_t count = 0;
    {
        std::size_t at = offset;
        std::string element = read_line(bytes, offset);
        const std::string prefix = "element vertex ";
        if (element.rfind(prefix, 0) != 0) {
            throw FormatError("expected '" + prefix + "N' at byte offset " + std::to_string(at) +
                              ", got '" + element + "'");
        }
        count = std::stoull(element.substr(prefix.size()));
    }

    for (const char* p : kProperties) {
        std::size_t at = offset;
        std::string line = read_line(bytes, offset);
        std::string expected = std::string("property float ") + p;
        if (line != expected) {
            throw FormatError("unexpected property order at byte offset " + std::to_string(at) +
                              ": expected '" + expected + "', got '" + line + "'");
        }
    }
    {
        std::size_t at = offset;
        if (read_line(bytes, offset) != "end_header") {
            throw FormatError("expected 'end_header' at byte offset " + std::to_string(at));
        }
    }

    const std::size_t stride = kProperties.size() * 4;
    if (bytes.size() - offset < count * stride) {
        throw FormatError("truncated PLY payload: need " + std::to_string(count * stride) +
                          " bytes from offset " + std::to_string(offset) + ", have " +
                          std::to_string(bytes.size() - offset));
    }

    GaussianCloud cloud;
    cloud.gaussians.resize(count);
    const std::uint8_t* p = bytes.data() + offset;
    for (std::size_t i = 0; i < count; ++i) {
        float v[17];
        std::memcpy(v, p + i * stride, stride);
        Gaussian3D& g = cloud.gaussians[i];
        g.position = {v[0], v[1], v[2]};
        g.color = {v[6] * kShDcFactor + 0.5, v[7] * kShDcFactor + 0.5, v[8] * kShDcFactor + 0.5};
        g.opacity_logit = v[9];
        g.log_scale = {v[10], v[11], v[12]};
        g.rotation = {v[13], v[14], v[15], v[16]};
    }
    return cloud;
}

void save_ply(const GaussianCloud& cloud, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes = export_ply(cloud);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

GaussianCloud load_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }
    std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (!in.read(reinterpret_cast<char*>(bytes.data()), size)) {
        throw IoError("failed reading " + path.string());
    }
    return import_ply(bytes);
}

} // namespace mvg4d

#include "core/image_matrix.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/png_io.hpp"
#include "core/rasterizer.hpp"
#include "core/rng.hpp"

namespace mvg4d {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;
constexpr const char* kCellTemplate = "cells/v{v:03}_t{t:03}.png";

std::string zero_pad3(int v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d", v);
    return buf;
}

std::string expand_cell_template(std::string tmpl, int v, int t) {
    auto replace = [&tmpl](const std::string& token, const std::string& value) {
        auto pos = tmpl.find(token);
        if (pos == std::string::npos) {
            throw FormatError("cell template is missing the " + token + " token");
        }
        tmpl.replace(pos, token.size(), value);
    };
    replace("{v:03}", zero_pad3(v));
    replace("{t:03}", zero_pad3(t));
    return tmpl;
}

void validate_times(const std::vector<double>& times) {
    if (times.empty()) {
        throw InvalidArgumentError("matrix needs at least one timestamp");
    }
    if (times[0] != 0.0) {
        throw InvalidArgumentError("times[0] must be 0 (canonical frame)");
    }
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        if (!(times[i] < times[i + 1])) {
            throw InvalidArgumentError("times must be strictly increasing (violated at index " +
                                       std::to_string(i + 1) + ")");
        }
    }
    for (double t : times) {
        if (!(t >= 0.0 && t <= 1.0)) {
            throw InvalidArgumentError("times must lie in [0,1]");
        }
    }
}

} // namespace

ImageMatrix synthesize_matrix(const AnimatedSceneSpec& spec,
                              const std::vector<SphericalPose>& rig,
                              const std::vector<double>& times,
                              const CameraIntrinsics& intrinsics,
                              const Eigen::Vector3d& background, std::uint64_t seed,
                              double noise_sigma) {
    if (rig.empty()) {
        throw InvalidArgumentError("matrix needs at least one view");
    }
    validate_times(times);

    ImageMatrix matrix;
    matrix.views = rig;
    matrix.times = times;
    matrix.intrinsics = intrinsics;
    matrix.background = background;

    const int num_times = static_cast<int>(times.size());
    matrix.cells.resize(rig.size() * times.size());

    // One deformed cloud per timestamp, shared across views.
    std::vector<GaussianCloud> frames(times.size());
    for (std::size_t t = 0; t < times.size(); ++t) {
        frames[t] = evaluate_scene(spec, times[t]);
    }

    for (std::size_t cell = 0; cell < matrix.cells.size(); ++cell) {
        int v = static_cast<int>(cell) / num_times;
        int t = static_cast<int>(cell) % num_times;
        Image img = render(frames[t], rig[v], intrinsics, background).image;
        if (noise_sigma > 0.0) {
            Rng rng(mix_seed(seed, cell));
            for (double& value : img.values()) {
                value = std::clamp(value + noise_sigma * rng.normal(), 0.0, 1.0);
            }
        }
        matrix.cells[cell] = std::move(img);
    }
    return matrix;
}

void save_matrix(const ImageMatrix& matrix, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "cells", ec);
    if (ec) {
        throw IoError("cannot create " + (dir / "cells").string() + ": " + ec.message());
    }

    json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["num_views"] = matrix.num_views();
    manifest["num_times"] = matrix.num_times();
    manifest["width"] = matrix.intrinsics.width;
    manifest["height"] = matrix.intrinsics.height;
    manifest["focal"] = matrix.intrinsics.focal;
    manifest["near"] = matrix.intrinsics.near_clip;
    manifest["far"] = matrix.intrinsics.far_clip;
    manifest["background"] = {matrix.background[0], matrix.background[1], matrix.background[2]};
    json views = json::array();
    for (const auto& pose : matrix.views) {
        views.push_back({{"theta", pose.theta}, {"phi", pose.phi}, {"radius", pose.radius}});
    }
    manifest["views"] = std::move(views);
    manifest["times"] = matrix.times;
    manifest["cell_template"] = kCellTemplate;

    std::ofstream out(dir / "manifest.json");
    if (!out) {
        throw IoError("cannot write " + (dir / "manifest.json").string());
    }
    out << manifest.dump(2) << "\n";

    for (int v = 0; v < matrix.num_views(); ++v) {
        for (int t = 0; t < matrix.num_times(); ++t) {
            write_png(matrix.cell(v, t), dir / expand_cell_template(kCellTemplate, v, t));
        }
    }
}

ImageMatrix load_matrix(const std::filesystem::path& dir_or_manifest) {
    std::filesystem::path manifest_path = dir_or_manifest;
    if (std::filesystem::is_directory(manifest_path)) {
        manifest_path /= "manifest.json";
    }
    std::filesystem::path dir = manifest_path.parent_path();

    std::ifstream in(manifest_path);
    if (!in) {
        throw IoError("cannot open " + manifest_path.string());
    }
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw FormatError(manifest_path.string() + ": invalid JSON: " + e.what());
    }

    ImageMatrix matrix;
    try {
        int schema = manifest.at("schema_version").get<int>();
        if (schema != kSchemaVersion) {
            throw FormatError(manifest_path.string() + ": unsupported schema_version " +
                              std::to_string(schema));
        }
        matrix.intrinsics =
            make_intrinsics(manifest.at("width").get<int>(), manifest.at("height").get<int>(),
                            manifest.at("focal").get<double>(), manifest.at("near").get<double>(),
                            manifest.at("far").get<double>());
        auto bg = manifest.at("background");
        if (!bg.is_array() || bg.size() != 3) {
            throw FormatError(manifest_path.string() + ": background must be 3 floats");
        }
        matrix.background = {bg[0].get<double>(), bg[1].get<double>(), bg[2].get<double>()};

        for (const auto& v : manifest.at("views")) {
            matrix.views.push_back(make_pose(v.at("theta").get<double>(),
                                             v.at("phi").get<double>(),
                                             v.at("radius").get<double>()));
        }
        matrix.times = manifest.at("times").get<std::vector<double>>();

        int declared_views = manifest.at("num_views").get<int>();
        int declared_times = manifest.at("num_times").get<int>();
        if (declared_views != matrix.num_views()) {
            throw FormatError(manifest_path.string() + ": num_views declares " +
                              std::to_string(declared_views) + " but " +
                              std::to_string(matrix.num_views()) + " pose entries are present");
        }
        if (declared_times != matrix.num_times()) {
            throw FormatError(manifest_path.string() + ": num_times declares " +
                              std::to_string(declared_times) + " but " +
                              std::to_string(matrix.num_times()) + " timestamps are present");
        }
    } catch (const json::exception& e) {
        throw FormatError(manifest_path.string() + ": manifest schema error: " + e.what());
    }

    if (matrix.views.empty()) {
        throw FormatError(manifest_path.string() + ": manifest lists no views");
    }
    try {
        validate_times(matrix.times);
    } catch (const Error& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }

    std::string tmpl = manifest.value("cell_template", kCellTemplate);
    matrix.cells.resize(matrix.views.size() * matrix.times.size());
    for (int v = 0; v < matrix.num_views(); ++v) {
        for (int t = 0; t < matrix.num_times(); ++t) {
            std::filesystem::path cell_path = dir / expand_cell_template(tmpl, v, t);
            if (!std::filesystem::exists(cell_path)) {
                throw FormatError("missing cell image " + cell_path.string() + " (view " +
                                  std::to_string(v) + ", time " + std::to_string(t) + ")");
            }
            Image img = read_png(cell_path);
            if (img.width() != matrix.intrinsics.width ||
                img.height() != matrix.intrinsics.height) {
                throw FormatError("cell " + cell_path.string() + " is " +
                                  std::to_string(img.width()) + "x" +
                                  std::to_string(img.height()) + ", manifest declares " +
                                  std::to_string(matrix.intrinsics.width) + "x" +
                                  std::to_string(matrix.intrinsics.height));
            }
            matrix.cell(v, t) = std::move(img);
        }
    }
    return matrix;
}

} // namespace mvg4d

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "core/camera.hpp"
#include "core/image.hpp"
#include "core/scene.hpp"

namespace mvg4d {

/// The V views x T timestamps supervision grid. Rows are views, columns are
/// timestamps; cell (v, t) lives at index v * T + t. Immutable after
/// construction. times are strictly increasing with times[0] == 0 (the
/// canonical frame).
struct ImageMatrix {
    std::vector<SphericalPose> views;
    std::vector<double> times;
    std::vector<Image> cells; // row-major, V * T entries
    CameraIntrinsics intrinsics;
    Eigen::Vector3d background = Eigen::Vector3d::Zero();

    int num_views() const { return static_cast<int>(views.size()); }
    int num_times() const { return static_cast<int>(times.size()); }

    Image& cell(int v, int t) { return cells[static_cast<std::size_t>(v) * times.size() + t]; }
    const Image& cell(int v, int t) const {
        return cells[static_cast<std::size_t>(v) * times.size() + t];
    }
};

/// Renders every (view, time) cell of the ground-truth scene. noise_sigma
/// adds per-pixel Gaussian noise (then clamps to [0,1]) to mimic imperfect
/// supervision; 0 disables it. Pure function of its arguments.
ImageMatrix synthesize_matrix(const AnimatedSceneSpec& spec,
                              const std::vector<SphericalPose>& rig,
                              const std::vector<double>& times,
                              const CameraIntrinsics& intrinsics,
                              const Eigen::Vector3d& background, std::uint64_t seed,
                              double noise_sigma = 0.0);

/// Directory layout: manifest.json + cells/v{v:03}_t{t:03}.png (8-bit RGB).
/// Save then load reproduces poses and timestamps exactly and images up to
/// 8-bit quantization.
void save_matrix(const ImageMatrix& matrix, const std::filesystem::path& dir);

/// Accepts either the directory or the manifest path itself. Schema
/// violations raise FormatError naming the offending cell or field.
ImageMatrix load_matrix(const std::filesystem::path& dir_or_manifest);

} // namespace mvg4d

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "core/camera.hpp"
#include "core/image.hpp"
#include "core/scene.hpp"

namespace mvg4d {

// Splatting constants (established practice; fixed and documented here).
inline constexpr double kCovarianceDilation = 0.3; // px^2 added to the 2D covariance diagonal
inline constexpr double kSupportCutoff = 4.5;      // power cutoff = (3 sigma)^2 / 2
inline constexpr double kMinTransmittance = 1e-4;  // front-to-back early-out
inline constexpr double kMinDeterminant = 1e-12;   // degenerate 2D covariance guard
inline constexpr int kTileSize = 16;

struct RenderResult {
    Image image;
    std::vector<int> visibility_count; // pixels each Gaussian contributed to
    int degenerate_skipped = 0;        // diagnostics: splats dropped for a degenerate 2D covariance
};

/// Gradients of a scalar loss with respect to every Gaussian parameter.
/// Rotation gradients are taken with respect to the raw stored quaternion
/// (the renderer normalizes internally, and that chain is included).
struct CloudGradients {
    std::vector<Eigen::Vector3d> d_position;
    std::vector<Eigen::Vector4d> d_rotation;
    std::vector<Eigen::Vector3d> d_log_scale;
    std::vector<double> d_opacity_logit;
    std::vector<Eigen::Vector3d> d_color;

    void resize_zero(std::size_t n);
    void add(const CloudGradients& other);
    std::size_t size() const { return d_position.size(); }
};

struct BackwardResult {
    CloudGradients grads;
    /// Per Gaussian: norm of the accumulated positional gradient in NDC
    /// units. Feeds densification statistics.
    std::vector<double> screen_grad_norm;
    std::vector<int> visibility_count;
};

/// Differentiable forward render: EWA projection of each Gaussian to a 2D
/// screen Gaussian, front-to-back alpha compositing in depth order (stable
/// index tiebreak), remaining transmittance blended with the background.
/// Tile-parallel internally; output is bit-identical for any thread count.
RenderResult render(const GaussianCloud& cloud, const SphericalPose& pose,
                    const CameraIntrinsics& intrinsics, const Eigen::Vector3d& background);

/// Naive per-pixel path over the full depth-sorted list. Kept as the tiling
/// oracle: bit-identical to render().
RenderResult render_reference(const GaussianCloud& cloud, const SphericalPose& pose,
                              const CameraIntrinsics& intrinsics,
                              const Eigen::Vector3d& background);

/// Exact gradients of <d_image, image> with respect to every Gaussian
/// parameter. Culled or invisible Gaussians receive exactly zero.
BackwardResult render_backward(const GaussianCloud& cloud, const SphericalPose& pose,
                               const CameraIntrinsics& intrinsics,
                               const Eigen::Vector3d& background, const Image& d_image);

} // namespace mvg4d

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace mvg4d {

/// One anisotropic splat. Parameters live in their optimization-friendly
/// spaces: scales in log space, opacity as a logit, rotation as a raw
/// quaternion that is renormalized after every optimizer step. Colors are
/// clamped to [0,1] at render time only.
struct Gaussian3D {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector4d rotation = {1.0, 0.0, 0.0, 0.0}; // (w, x, y, z)
    Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
    double opacity_logit = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Constant(0.5);
};

/// Ordered Gaussian list; indices identify Gaussians for optimizer moments,
/// so ordering only changes through densify/prune.
struct GaussianCloud {
    std::vector<Gaussian3D> gaussians;

    std::size_t size() const { return gaussians.size(); }
    bool empty() const { return gaussians.empty(); }
    Gaussian3D& operator[](std::size_t i) { return gaussians[i]; }
    const Gaussian3D& operator[](std::size_t i) const { return gaussians[i]; }
};

/// Isotropic cloud at uniform random positions in [-extent, extent]^3,
/// identity rotations, sigmoid(opacity) = 0.1, mid-gray colors. Scales are
/// equal on all axes and sized to the mean inter-Gaussian spacing
/// extent * count^(-1/3).
GaussianCloud init_random_cloud(std::size_t count, double extent, std::uint64_t seed);

/// Rigid motion over normalized time; identity at t = 0. Position path:
/// p -> R(t * angle) (p - pivot) + pivot + t * translation.
struct RigidMotion {
    Eigen::Vector3d translation = Eigen::Vector3d::Zero(); // displacement at t = 1
    Eigen::Vector3d rotation_axis = Eigen::Vector3d::UnitZ();
    double rotation_angle = 0.0; // radians swept over t in [0,1]
    Eigen::Vector3d pivot = Eigen::Vector3d::Zero();
};

/// Ground-truth animated scene: base cloud plus per-group rigid motion.
/// `group` assigns each Gaussian to a motion; empty means everything follows
/// motions[0].
struct AnimatedSceneSpec {
    GaussianCloud base;
    std::vector<RigidMotion> motions = {RigidMotion{}};
    std::vector<int> group;
    Eigen::Vector3d background = Eigen::Vector3d::Zero();
};

/// Applies the motion program at normalized time t in [0,1]. The base cloud
/// is untouched; t = 0 returns it unchanged.
GaussianCloud evaluate_scene(const AnimatedSceneSpec& spec, double t);

} // namespace mvg4d

#include "core/camera.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "core/errors.hpp"

namespace mvg4d {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle_positive(double angle) {
    double a = std::fmod(angle, kTwoPi);
    if (a < 0.0) {
        a += kTwoPi;
    }
    // fmod can land exactly on 2*pi after the correction of tiny negatives.
    if (a >= kTwoPi) {
        a -= kTwoPi;
    }
    return a;
}
} // namespace

double wrap_angle_signed(double angle) {
    double a = std::fmod(angle, kTwoPi);
    if (a > kPi) {
        a -= kTwoPi;
    } else if (a <= -kPi) {
        a += kTwoPi;
    }
    return a;
}

SphericalPose make_pose(double theta, double phi, double radius) {
    if (!std::isfinite(theta) || !std::isfinite(phi) || !std::isfinite(radius)) {
        throw InvalidArgumentError("pose components must be finite");
    }
    if (radius <= 0.0) {
        throw InvalidArgumentError("pose radius must be positive, got " + std::to_string(radius));
    }
    SphericalPose pose;
    pose.theta = std::clamp(theta, kPoleEpsilon, kPi - kPoleEpsilon);
    pose.phi = wrap_angle_positive(phi);
    pose.radius = radius;
    return pose;
}

CameraIntrinsics make_intrinsics(int width, int height, double focal, double near_clip,
                                 double far_clip) {
    if (width < 1 || height < 1) {
        throw InvalidArgumentError("image dimensions must be at least 1x1");
    }
    if (!(focal > 0.0) || !std::isfinite(focal)) {
        throw InvalidArgumentError("focal length must be positive");
    }
    if (!(0.0 < near_clip && near_clip < far_clip)) {
        throw InvalidArgumentError("clip planes must satisfy 0 < near < far");
    }
    return CameraIntrinsics{width, height, focal, near_clip, far_clip};
}

RelativePose relative_pose(const SphericalPose& a, const SphericalPose& b) {
    return RelativePose{b.theta - a.theta, wrap_angle_signed(b.phi - a.phi),
                        b.radius - a.radius};
}

SphericalPose apply_relative(const SphericalPose& a, const RelativePose& d) {
    double radius = a.radius + d.d_radius;
    if (radius <= 0.0) {
        throw InvalidArgumentError("relative pose yields non-positive radius " +
                                   std::to_string(radius));
    }
    return make_pose(a.theta + d.d_theta, a.phi + d.d_phi, radius);
}

RigidTransform to_world_from_camera(const SphericalPose& pose) {
    const double st = std::sin(pose.theta);
    const double ct = std::cos(pose.theta);
    const double sp = std::sin(pose.phi);
    const double cp = std::cos(pose.phi);

    Eigen::Vector3d center = pose.radius * Eigen::Vector3d(st * cp, st * sp, ct);

    // Camera -z points at the origin; up derived from world +z by
    // Gram-Schmidt against the viewing axis.
    Eigen::Vector3d z_axis = center.normalized();
    Eigen::Vector3d world_up(0.0, 0.0, 1.0);
    Eigen::Vector3d y_axis = (world_up - world_up.dot(z_axis) * z_axis).normalized();
    Eigen::Vector3d x_axis = y_axis.cross(z_axis);

    RigidTransform transform;
    transform.rotation.col(0) = x_axis;
    transform.rotation.col(1) = y_axis;
    transform.rotation.col(2) = z_axis;
    transform.translation = center;
    return transform;
}

std::vector<SphericalPose> matrix_rig(int num_views, double elevation, double radius) {
    if (num_views < 1) {
        throw InvalidArgumentError("rig needs at least one view");
    }
    std::vector<SphericalPose> poses;
    poses.reserve(num_views);
    const double theta = kPi / 2.0 - elevation;
    for (int i = 0; i < num_views; ++i) {
        poses.push_back(make_pose(theta, kTwoPi * i / num_views, radius));
    }
    return poses;
}

} // namespace mvg4d

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mvg4d {

/// Spherical convention: theta is the polar angle measured from +z, phi the
/// azimuth from +x in the xy plane, world up is +z. Cameras always face the
/// origin.
struct SphericalPose {
    double theta = 0.0;  // [kPoleEpsilon, pi - kPoleEpsilon]
    double phi = 0.0;    // [0, 2*pi)
    double radius = 1.0; // > 0
};

/// Look-at up vectors degenerate at the poles; theta is clamped away from
/// them by this margin.
inline constexpr double kPoleEpsilon = 1e-4;

/// Validates and canonicalizes (clamps theta, wraps phi). Throws
/// InvalidArgumentError for non-finite angles or radius <= 0.
SphericalPose make_pose(double theta, double phi, double radius);

struct RelativePose {
    double d_theta = 0.0;
    double d_phi = 0.0; // wrapped to (-pi, pi]
    double d_radius = 0.0;
};

/// Pinhole camera, square pixels, principal point at the image center.
struct CameraIntrinsics {
    int width = 0;
    int height = 0;
    double focal = 0.0; // pixels
    double near_clip = 0.0;
    double far_clip = 0.0;
};

CameraIntrinsics make_intrinsics(int width, int height, double focal, double near_clip,
                                 double far_clip);

/// World-from-camera rigid transform. Columns of `rotation` are the camera
/// axes in world coordinates; the camera looks down its -z axis.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero(); // camera center
};

/// Wraps an angle to (-pi, pi].
double wrap_angle_signed(double angle);

/// Componentwise pose difference b - a with d_phi wrapped.
RelativePose relative_pose(const SphericalPose& a, const SphericalPose& b);

/// Inverse of relative_pose: apply_relative(a, relative_pose(a, b)) == b up
/// to angle wrapping. Throws if the resulting radius is not positive.
SphericalPose apply_relative(const SphericalPose& a, const RelativePose& d);

RigidTransform to_world_from_camera(const SphericalPose& pose);

/// Evenly spaced azimuths at fixed elevation and radius; pose i has
/// phi = 2*pi*i/num_views.
std::vector<SphericalPose> matrix_rig(int num_views, double elevation, double radius);

} // namespace mvg4d

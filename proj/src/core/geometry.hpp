#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace mvg4d {

// Quaternions are stored (w, x, y, z), scalar first.

inline Eigen::Vector4d quat_identity() { return {1.0, 0.0, 0.0, 0.0}; }

inline Eigen::Vector4d quat_multiply(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
    return {
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    };
}

inline Eigen::Vector4d quat_from_axis_angle(const Eigen::Vector3d& axis, double angle) {
    if (angle == 0.0) {
        return quat_identity();
    }
    Eigen::Vector3d u = axis.normalized();
    double half = 0.5 * angle;
    double s = std::sin(half);
    return {std::cos(half), s * u[0], s * u[1], s * u[2]};
}

/// Rotation matrix from a unit quaternion.
inline Eigen::Matrix3d quat_to_matrix(const Eigen::Vector4d& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Eigen::Matrix3d r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

/// Backward of quat_to_matrix: maps dL/dR to dL/d(unit quaternion).
inline Eigen::Vector4d quat_to_matrix_backward(const Eigen::Vector4d& q,
                                               const Eigen::Matrix3d& d_r) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Eigen::Vector4d g;
    g[0] = 2.0 * (-z * d_r(0, 1) + y * d_r(0, 2) + z * d_r(1, 0) - x * d_r(1, 2) -
                  y * d_r(2, 0) + x * d_r(2, 1));
    g[1] = 2.0 * (y * d_r(0, 1) + z * d_r(0, 2) + y * d_r(1, 0) - w * d_r(1, 2) +
                  z * d_r(2, 0) + w * d_r(2, 1)) -
           4.0 * x * (d_r(1, 1) + d_r(2, 2));
    g[2] = 2.0 * (x * d_r(0, 1) + w * d_r(0, 2) + x * d_r(1, 0) + z * d_r(1, 2) -
                  w * d_r(2, 0) + z * d_r(2, 1)) -
           4.0 * y * (d_r(0, 0) + d_r(2, 2));
    g[3] = 2.0 * (-w * d_r(0, 1) + x * d_r(0, 2) + w * d_r(1, 0) + y * d_r(1, 2) +
                  x * d_r(2, 0) + y * d_r(2, 1)) -
           4.0 * z * (d_r(0, 0) + d_r(1, 1));
    return g;
}

/// Backward of v -> v/|v|: maps dL/d(unit) to dL/d(raw).
inline Eigen::Vector4d normalize_backward(const Eigen::Vector4d& raw,
                                          const Eigen::Vector4d& d_unit) {
    double n = raw.norm();
    Eigen::Vector4d u = raw / n;
    return (d_unit - u * u.dot(d_unit)) / n;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

} // namespace mvg4d

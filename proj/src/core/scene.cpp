#include "core/scene.hpp"

#include <cmath>
#include <string>

#include "core/errors.hpp"
#include "core/geometry.hpp"
#include "core/rng.hpp"

namespace mvg4d {

GaussianCloud init_random_cloud(std::size_t count, double extent, std::uint64_t seed) {
    if (count == 0) {
        throw InvalidArgumentError("cloud needs at least one Gaussian");
    }
    if (!std::isfinite(extent) || extent <= 0.0) {
        throw InvalidArgumentError("extent must be positive and finite");
    }

    Rng rng(seed);
    const double iso_log_scale = std::log(extent * std::pow(static_cast<double>(count), -1.0 / 3.0));
    const double opacity = logit(0.1);

    GaussianCloud cloud;
    cloud.gaussians.resize(count);
    for (auto& g : cloud.gaussians) {
        g.position = {rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                      rng.uniform(-extent, extent)};
        g.rotation = quat_identity();
        g.log_scale = Eigen::Vector3d::Constant(iso_log_scale);
        g.opacity_logit = opacity;
        g.color = Eigen::Vector3d::Constant(0.5);
    }
    return cloud;
}

GaussianCloud evaluate_scene(const AnimatedSceneSpec& spec, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw InvalidArgumentError("scene time must lie in [0,1], got " + std::to_string(t));
    }
    if (spec.motions.empty()) {
        throw InvalidArgumentError("scene spec has no motion program");
    }
    if (!spec.group.empty() && spec.group.size() != spec.base.size()) {
        throw InvalidArgumentError("group assignment size does not match cloud size");
    }

    GaussianCloud out = spec.base;
    if (t == 0.0) {
        return out; // canonical frame, bit-identical to base
    }

    struct MotionAtT {
        Eigen::Matrix3d rotation;
        Eigen::Vector4d rotation_quat;
        Eigen::Vector3d pivot;
        Eigen::Vector3d offset; // pivot + t * translation
        bool rotates;
    };
    std::vector<MotionAtT> evaluated;
    evaluated.reserve(spec.motions.size());
    for (const auto& m : spec.motions) {
        MotionAtT e;
        e.rotation_quat = quat_from_axis_angle(m.rotation_axis, m.rotation_angle * t);
        e.rotation = quat_to_matrix(e.rotation_quat);
        e.pivot = m.pivot;
        e.offset = m.pivot + t * m.translation;
        e.rotates = m.rotation_angle * t != 0.0;
        evaluated.push_back(e);
    }

    for (std::size_t i = 0; i < out.size(); ++i) {
        int gi = spec.group.empty() ? 0 : spec.group[i];
        if (gi < 0 || static_cast<std::size_t>(gi) >= evaluated.size()) {
            throw InvalidArgumentError("gaussian " + std::to_string(i) +
                                       " references unknown motion group " + std::to_string(gi));
        }
        const MotionAtT& m = evaluated[gi];
        Gaussian3D& g = out[i];
        if (m.rotates) {
            g.position = m.rotation * (g.position - m.pivot) + m.offset;
            g.rotation = quat_multiply(m.rotation_quat, g.rotation);
        } else {
            g.position = g.position - m.pivot + m.offset;
        }
    }
    return out;
}

} // namespace mvg4d

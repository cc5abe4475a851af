#include "core/rasterizer.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/geometry.hpp"
#include "core/parallel.hpp"

namespace mvg4d {

void CloudGradients::resize_zero(std::size_t n) {
    d_position.assign(n, Eigen::Vector3d::Zero());
    d_rotation.assign(n, Eigen::Vector4d::Zero());
    d_log_scale.assign(n, Eigen::Vector3d::Zero());
    d_opacity_logit.assign(n, 0.0);
    d_color.assign(n, Eigen::Vector3d::Zero());
}

void CloudGradients::add(const CloudGradients& other) {
    for (std::size_t i = 0; i < size(); ++i) {
        d_position[i] += other.d_position[i];
        d_rotation[i] += other.d_rotation[i];
        d_log_scale[i] += other.d_log_scale[i];
        d_opacity_logit[i] += other.d_opacity_logit[i];
        d_color[i] += other.d_color[i];
    }
}

namespace {

struct ProjectedSplat {
    int index = 0; // position in the input cloud
    double depth = 0.0;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero(); // pixel coordinates
    Eigen::Matrix2d inv_cov = Eigen::Matrix2d::Zero();
    double opacity = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero(); // clamped
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;            // inclusive pixel bbox

    // Intermediates for the backward chain.
    Eigen::Vector4d unit_quat = Eigen::Vector4d::Zero();
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    Eigen::Vector3d scales = Eigen::Vector3d::Zero();
    Eigen::Vector3d t_cam = Eigen::Vector3d::Zero();
    Eigen::Matrix<double, 2, 3> jac = Eigen::Matrix<double, 2, 3>::Zero();
    Eigen::Matrix3d cov_cam = Eigen::Matrix3d::Zero();
    Eigen::Vector3d raw_color = Eigen::Vector3d::Zero();
};

struct Frame {
    Eigen::Matrix3d cam_from_world; // rotation
    Eigen::Vector3d center;         // camera position in world
    double cx, cy;
};

Frame make_frame(const SphericalPose& pose, const CameraIntrinsics& intr) {
    RigidTransform world_from_cam = to_world_from_camera(pose);
    Frame f;
    f.cam_from_world = world_from_cam.rotation.transpose();
    f.center = world_from_cam.translation;
    f.cx = 0.5 * intr.width;
    f.cy = 0.5 * intr.height;
    return f;
}

/// Projects one Gaussian. Returns false if culled by depth, invisible, or
/// degenerate (degenerate additionally bumps the tally).
bool project_splat(const Gaussian3D& g, int index, const Frame& frame,
                   const CameraIntrinsics& intr, ProjectedSplat& out, bool& degenerate) {
    degenerate = false;

    Eigen::Vector3d t = frame.cam_from_world * (g.position - frame.center);
    double depth = -t.z();
    if (!(depth > intr.near_clip && depth < intr.far_clip)) {
        return false;
    }

    double norm = g.rotation.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw NumericError("gaussian " + std::to_string(index) + " has a degenerate quaternion");
    }
    Eigen::Vector4d u = g.rotation / norm;
    Eigen::Matrix3d rot = quat_to_matrix(u);
    Eigen::Vector3d s = g.log_scale.array().exp();
    Eigen::Matrix3d m = rot * s.asDiagonal();
    Eigen::Matrix3d cov3 = m * m.transpose();
    Eigen::Matrix3d cov_cam = frame.cam_from_world * cov3 * frame.cam_from_world.transpose();

    const double f = intr.focal;
    const double inv_d = 1.0 / depth;
    Eigen::Matrix<double, 2, 3> jac;
    jac << f * inv_d, 0.0, f * t.x() * inv_d * inv_d,
        0.0, -f * inv_d, -f * t.y() * inv_d * inv_d;

    Eigen::Matrix2d cov2 = jac * cov_cam * jac.transpose();
    cov2(0, 0) += kCovarianceDilation;
    cov2(1, 1) += kCovarianceDilation;

    double det = cov2(0, 0) * cov2(1, 1) - cov2(0, 1) * cov2(1, 0);
    if (det <= kMinDeterminant) {
        degenerate = true;
        return false;
    }

    Eigen::Vector2d mean(frame.cx + f * t.x() * inv_d, frame.cy - f * t.y() * inv_d);

    double hx = 3.0 * std::sqrt(cov2(0, 0));
    double hy = 3.0 * std::sqrt(cov2(1, 1));
    int x0 = std::max(0, static_cast<int>(std::ceil(mean.x() - hx - 0.5)));
    int x1 = std::min(intr.width - 1, static_cast<int>(std::floor(mean.x() + hx - 0.5)));
    int y0 = std::max(0, static_cast<int>(std::ceil(mean.y() - hy - 0.5)));
    int y1 = std::min(intr.height - 1, static_cast<int>(std::floor(mean.y() + hy - 0.5)));
    if (x0 > x1 || y0 > y1) {
        return false; // off screen
    }

    double inv_det = 1.0 / det;
    Eigen::Matrix2d inv_cov;
    inv_cov << cov2(1, 1) * inv_det, -cov2(0, 1) * inv_det,
        -cov2(1, 0) * inv_det, cov2(0, 0) * inv_det;

    out.index = index;
    out.depth = depth;
    out.mean = mean;
    out.inv_cov = inv_cov;
    out.opacity = sigmoid(g.opacity_logit);
    out.raw_color = g.color;
    out.color = g.color.cwiseMax(0.0).cwiseMin(1.0);
    out.x0 = x0;
    out.x1 = x1;
    out.y0 = y0;
    out.y1 = y1;
    out.unit_quat = u;
    out.rot = rot;
    out.scales = s;
    out.t_cam = t;
    out.jac = jac;
    out.cov_cam = cov_cam;
    return true;
}

struct Scene2D {
    std::vector<ProjectedSplat> splats; // sorted by (depth, original index)
    int degenerate_skipped = 0;
};

Scene2D project_scene(const GaussianCloud& cloud, const Frame& frame,
                      const CameraIntrinsics& intr) {
    if (cloud.empty()) {
        throw InvalidArgumentError("cannot render an empty cloud");
    }
    Scene2D scene;
    scene.splats.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        ProjectedSplat s;
        bool degenerate = false;
        if (project_splat(cloud[static_cast<std::size_t>(i)], static_cast<int>(i), frame, intr,
                          s, degenerate)) {
            scene.splats.push_back(std::move(s));
        } else if (degenerate) {
            ++scene.degenerate_skipped;
        }
    }
    std::sort(scene.splats.begin(), scene.splats.end(),
              [](const ProjectedSplat& a, const ProjectedSplat& b) {
                  if (a.depth != b.depth) {
                      return a.depth < b.depth;
                  }
                  return a.index < b.index;
              });
    return scene;
}

struct Contribution {
    int order_pos;
    double alpha;
    double transmittance; // before this contribution
};

/// Composites one pixel over splats[order[0..count)] (already depth
/// ordered). Shared by the tiled and reference paths so both produce the
/// exact same float sequence.
Eigen::Vector3d composite_pixel(const ProjectedSplat* splats, const int* order, int count,
                                int pix_x, int pix_y, const Eigen::Vector3d& background,
                                int* visibility_by_order_pos, std::vector<Contribution>* capture,
                                double* final_transmittance) {
    const double px = pix_x + 0.5;
    const double py = pix_y + 0.5;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    double transmittance = 1.0;
    for (int j = 0; j < count; ++j) {
        const ProjectedSplat& s = splats[order[j]];
        if (pix_x < s.x0 || pix_x > s.x1 || pix_y < s.y0 || pix_y > s.y1) {
            continue;
        }
        const double dx = px - s.mean.x();
        const double dy = py - s.mean.y();
        const double power = 0.5 * (s.inv_cov(0, 0) * dx * dx + s.inv_cov(1, 1) * dy * dy) +
                             s.inv_cov(0, 1) * dx * dy;
        if (!(power <= kSupportCutoff)) {
            continue;
        }
        if (transmittance < kMinTransmittance) {
            break;
        }
        const double alpha = s.opacity * std::exp(-power);
        if (visibility_by_order_pos != nullptr) {
            ++visibility_by_order_pos[j];
        }
        if (capture != nullptr) {
            capture->push_back({j, alpha, transmittance});
        }
        color += (transmittance * alpha) * s.color;
        transmittance *= 1.0 - alpha;
    }
    if (final_transmittance != nullptr) {
        *final_transmittance = transmittance;
    }
    color += transmittance * background;
    return color;
}

struct TileGrid {
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<std::vector<int>> bins; // sorted-splat indices per tile, ascending

    int count() const { return tiles_x * tiles_y; }
};

TileGrid bin_splats(const Scene2D& scene, const CameraIntrinsics& intr) {
    TileGrid grid;
    grid.tiles_x = (intr.width + kTileSize - 1) / kTileSize;
    grid.tiles_y = (intr.height + kTileSize - 1) / kTileSize;
    grid.bins.resize(static_cast<std::size_t>(grid.count()));
    for (int k = 0; k < static_cast<int>(scene.splats.size()); ++k) {
        const ProjectedSplat& s = scene.splats[k];
        int tx0 = s.x0 / kTileSize;
        int tx1 = s.x1 / kTileSize;
        int ty0 = s.y0 / kTileSize;
        int ty1 = s.y1 / kTileSize;
        for (int ty = ty0; ty <= ty1; ++ty) {
            for (int tx = tx0; tx <= tx1; ++tx) {
                grid.bins[static_cast<std::size_t>(ty) * grid.tiles_x + tx].push_back(k);
            }
        }
    }
    return grid;
}

RenderResult run_forward(const GaussianCloud& cloud, const SphericalPose& pose,
                         const CameraIntrinsics& intr, const Eigen::Vector3d& background,
                         bool tiled) {
    Frame frame = make_frame(pose, intr);
    Scene2D scene = project_scene(cloud, frame, intr);

    RenderResult result;
    result.image = Image(intr.width, intr.height);
    result.visibility_count.assign(cloud.size(), 0);
    result.degenerate_skipped = scene.degenerate_skipped;

    if (!tiled) {
        std::vector<int> order(scene.splats.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = static_cast<int>(i);
        }
        std::vector<int> tally(scene.splats.size(), 0);
        for (int y = 0; y < intr.height; ++y) {
            for (int x = 0; x < intr.width; ++x) {
                Eigen::Vector3d c = composite_pixel(scene.splats.data(), order.data(),
                                                    static_cast<int>(order.size()), x, y,
                                                    background, tally.data(), nullptr, nullptr);
                result.image.set_pixel(x, y, c);
            }
        }
        for (std::size_t j = 0; j < tally.size(); ++j) {
            result.visibility_count[static_cast<std::size_t>(scene.splats[j].index)] += tally[j];
        }
        return result;
    }

    TileGrid grid = bin_splats(scene, intr);
    std::vector<std::vector<int>> tile_tallies(static_cast<std::size_t>(grid.count()));

    parallel_for(static_cast<std::size_t>(grid.count()), [&](std::size_t tile) {
        int tx = static_cast<int>(tile) % grid.tiles_x;
        int ty = static_cast<int>(tile) / grid.tiles_x;
        const std::vector<int>& bin = grid.bins[tile];
        std::vector<int>& tally = tile_tallies[tile];
        tally.assign(bin.size(), 0);
        int x_end = std::min(intr.width, (tx + 1) * kTileSize);
        int y_end = std::min(intr.height, (ty + 1) * kTileSize);
        for (int y = ty * kTileSize; y < y_end; ++y) {
            for (int x = tx * kTileSize; x < x_end; ++x) {
                Eigen::Vector3d c = composite_pixel(scene.splats.data(), bin.data(),
                                                    static_cast<int>(bin.size()), x, y,
                                                    background, tally.data(), nullptr, nullptr);
                result.image.set_pixel(x, y, c);
            }
        }
    });

    for (std::size_t tile = 0; tile < tile_tallies.size(); ++tile) {
        const std::vector<int>& bin = grid.bins[tile];
        const std::vector<int>& tally = tile_tallies[tile];
        for (std::size_t j = 0; j < bin.size(); ++j) {
            result.visibility_count[static_cast<std::size_t>(
                scene.splats[static_cast<std::size_t>(bin[j])].index)] += tally[j];
        }
    }
    return result;
}

/// Per-splat gradient accumulators in screen space.
struct ScreenGrad {
    Eigen::Vector2d d_mean = Eigen::Vector2d::Zero();
    // dL/d(inv_cov) as a symmetric matrix; a01 holds the (0,1)=(1,0) entry.
    double d_a00 = 0.0, d_a01 = 0.0, d_a11 = 0.0;
    double d_opacity = 0.0; // on the activated opacity
    Eigen::Vector3d d_color = Eigen::Vector3d::Zero();
    int visibility = 0;

    void add(const ScreenGrad& o) {
        d_mean += o.d_mean;
        d_a00 += o.d_a00;
        d_a01 += o.d_a01;
        d_a11 += o.d_a11;
        d_opacity += o.d_opacity;
        d_color += o.d_color;
        visibility += o.visibility;
    }
};

} // namespace

RenderResult render(const GaussianCloud& cloud, const SphericalPose& pose,
                    const CameraIntrinsics& intrinsics, const Eigen::Vector3d& background) {
    return run_forward(cloud, pose, intrinsics, background, /*tiled=*/true);
}

RenderResult render_reference(const GaussianCloud& cloud, const SphericalPose& pose,
                              const CameraIntrinsics& intrinsics,
                              const Eigen::Vector3d& background) {
    return run_forward(cloud, pose, intrinsics, background, /*tiled=*/false);
}

BackwardResult render_backward(const GaussianCloud& cloud, const SphericalPose& pose,
                               const CameraIntrinsics& intrinsics,
                               const Eigen::Vector3d& background, const Image& d_image) {
    if (d_image.width() != intrinsics.width || d_image.height() != intrinsics.height) {
        throw InvalidArgumentError("d_image dimensions do not match intrinsics");
    }

    Frame frame = make_frame(pose, intrinsics);
    Scene2D scene = project_scene(cloud, frame, intrinsics);
    TileGrid grid = bin_splats(scene, intrinsics);

    // Stage A: per-tile screen-space gradients, pixels in row-major order
    // within each tile.
    std::vector<std::vector<ScreenGrad>> tile_grads(static_cast<std::size_t>(grid.count()));
    parallel_for(static_cast<std::size_t>(grid.count()), [&](std::size_t tile) {
        int tx = static_cast<int>(tile) % grid.tiles_x;
        int ty = static_cast<int>(tile) / grid.tiles_x;
        const std::vector<int>& bin = grid.bins[tile];
        std::vector<ScreenGrad>& local = tile_grads[tile];
        local.assign(bin.size(), ScreenGrad{});
        std::vector<Contribution> contribs;
        contribs.reserve(64);

        int x_end = std::min(intrinsics.width, (tx + 1) * kTileSize);
        int y_end = std::min(intrinsics.height, (ty + 1) * kTileSize);
        for (int y = ty * kTileSize; y < y_end; ++y) {
            for (int x = tx * kTileSize; x < x_end; ++x) {
                contribs.clear();
                double final_t = 1.0;
                composite_pixel(scene.splats.data(), bin.data(), static_cast<int>(bin.size()), x,
                                y, background, nullptr, &contribs, &final_t);
                if (contribs.empty()) {
                    continue;
                }
                const Eigen::Vector3d g = d_image.get_pixel(x, y);
                const double px = x + 0.5;
                const double py = y + 0.5;

                Eigen::Vector3d suffix = final_t * background;
                for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
                    const ProjectedSplat& s =
                        scene.splats[static_cast<std::size_t>(bin[it->order_pos])];
                    ScreenGrad& acc = local[static_cast<std::size_t>(it->order_pos)];
                    const double alpha = it->alpha;
                    const double trans = it->transmittance;

                    acc.d_color += (trans * alpha) * g;
                    ++acc.visibility;

                    double d_alpha = g.dot(trans * s.color - suffix / (1.0 - alpha));
                    acc.d_opacity += (alpha / s.opacity) * d_alpha;
                    double d_power = -alpha * d_alpha;

                    const double dx = px - s.mean.x();
                    const double dy = py - s.mean.y();
                    Eigen::Vector2d a_d(s.inv_cov(0, 0) * dx + s.inv_cov(0, 1) * dy,
                                        s.inv_cov(1, 0) * dx + s.inv_cov(1, 1) * dy);
                    acc.d_mean -= d_power * a_d;
                    acc.d_a00 += d_power * 0.5 * dx * dx;
                    acc.d_a01 += d_power * 0.5 * dx * dy;
                    acc.d_a11 += d_power * 0.5 * dy * dy;

                    suffix += (trans * alpha) * s.color;
                }
            }
        }
    });

    // Reduce tile-local gradients in fixed tile order.
    std::vector<ScreenGrad> accum(scene.splats.size());
    for (std::size_t tile = 0; tile < tile_grads.size(); ++tile) {
        const std::vector<int>& bin = grid.bins[tile];
        const std::vector<ScreenGrad>& local = tile_grads[tile];
        for (std::size_t j = 0; j < bin.size(); ++j) {
            accum[static_cast<std::size_t>(bin[j])].add(local[j]);
        }
    }

    // Stage B: chain screen-space gradients through projection and
    // covariance construction, per splat.
    BackwardResult result;
    result.grads.resize_zero(cloud.size());
    result.screen_grad_norm.assign(cloud.size(), 0.0);
    result.visibility_count.assign(cloud.size(), 0);

    parallel_for(scene.splats.size(), [&](std::size_t k) {
        const ProjectedSplat& s = scene.splats[k];
        const ScreenGrad& acc = accum[k];
        const std::size_t idx = static_cast<std::size_t>(s.index);
        result.visibility_count[idx] = acc.visibility;
        if (acc.visibility == 0) {
            return; // never contributed: gradients stay exactly zero
        }

        const Gaussian3D& gsn = cloud[idx];

        // inv_cov -> cov2 (the dilation is additive, so d cov2 = d cov2_raw).
        Eigen::Matrix2d d_a;
        d_a << acc.d_a00, acc.d_a01, acc.d_a01, acc.d_a11;
        Eigen::Matrix2d d_cov2 = -s.inv_cov * d_a * s.inv_cov;

        Eigen::Matrix3d d_cov_cam = s.jac.transpose() * d_cov2 * s.jac;
        Eigen::Matrix<double, 2, 3> d_jac = 2.0 * d_cov2 * s.jac * s.cov_cam;
        Eigen::Matrix3d d_cov3 =
            frame.cam_from_world.transpose() * d_cov_cam * frame.cam_from_world;

        Eigen::Matrix3d m = s.rot * s.scales.asDiagonal();
        Eigen::Matrix3d d_m = 2.0 * d_cov3 * m;
        Eigen::Matrix3d d_rot;
        Eigen::Vector3d d_log_scale;
        for (int j = 0; j < 3; ++j) {
            for (int i = 0; i < 3; ++i) {
                d_rot(i, j) = d_m(i, j) * s.scales[j];
            }
            double ds = s.rot.col(j).dot(d_m.col(j));
            d_log_scale[j] = ds * s.scales[j];
        }

        Eigen::Vector4d d_unit = quat_to_matrix_backward(s.unit_quat, d_rot);
        result.grads.d_rotation[idx] = normalize_backward(gsn.rotation, d_unit);
        result.grads.d_log_scale[idx] = d_log_scale;

        // Mean path plus the Jacobian's own dependence on the camera-space
        // mean.
        Eigen::Vector3d d_t = s.jac.transpose() * acc.d_mean;
        const double f = intrinsics.focal;
        const double inv_d = 1.0 / s.depth;
        const double inv_d2 = inv_d * inv_d;
        const double inv_d3 = inv_d2 * inv_d;
        d_t.x() += d_jac(0, 2) * f * inv_d2;
        d_t.y() += d_jac(1, 2) * (-f * inv_d2);
        d_t.z() += d_jac(0, 0) * f * inv_d2 + d_jac(0, 2) * 2.0 * f * s.t_cam.x() * inv_d3 +
                   d_jac(1, 1) * (-f * inv_d2) + d_jac(1, 2) * (-2.0 * f * s.t_cam.y() * inv_d3);
        result.grads.d_position[idx] = frame.cam_from_world.transpose() * d_t;

        double o = s.opacity;
        result.grads.d_opacity_logit[idx] = o * (1.0 - o) * acc.d_opacity;

        Eigen::Vector3d d_color = acc.d_color;
        for (int c = 0; c < 3; ++c) {
            if (s.raw_color[c] < 0.0 || s.raw_color[c] > 1.0) {
                d_color[c] = 0.0; // clamped at render time
            }
        }
        result.grads.d_color[idx] = d_color;

        Eigen::Vector2d ndc_grad(acc.d_mean.x() * 0.5 * intrinsics.width,
                                 acc.d_mean.y() * 0.5 * intrinsics.height);
        result.screen_grad_norm[idx] = ndc_grad.norm();
    });

    return result;
}

} // namespace mvg4d

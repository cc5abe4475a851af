#include "core/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "core/errors.hpp"
#include "core/geometry.hpp"

namespace mvg4d {

void AdamMoments::resize_zero(std::size_t n) {
    m_position.assign(n, Eigen::Vector3d::Zero());
    v_position.assign(n, Eigen::Vector3d::Zero());
    m_rotation.assign(n, Eigen::Vector4d::Zero());
    v_rotation.assign(n, Eigen::Vector4d::Zero());
    m_log_scale.assign(n, Eigen::Vector3d::Zero());
    v_log_scale.assign(n, Eigen::Vector3d::Zero());
    m_opacity.assign(n, 0.0);
    v_opacity.assign(n, 0.0);
    m_color.assign(n, Eigen::Vector3d::Zero());
    v_color.assign(n, Eigen::Vector3d::Zero());
}

void DensifyStats::resize_zero(std::size_t n) {
    grad_accum.assign(n, 0.0);
    observations.assign(n, 0);
}

TrainState make_train_state(GaussianCloud cloud, std::uint64_t seed) {
    TrainState state;
    state.moments.resize_zero(cloud.size());
    state.densify.resize_zero(cloud.size());
    state.cloud = std::move(cloud);
    state.rng_seed = seed;
    return state;
}

namespace {

// One scalar Adam update. t is the bias-correction timestep (>= 1).
inline double adam_update(double& m, double& v, double grad, double lr, long t) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad * grad;
    double m_hat = m / (1.0 - std::pow(kAdamBeta1, static_cast<double>(t)));
    double v_hat = v / (1.0 - std::pow(kAdamBeta2, static_cast<double>(t)));
    return -lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
}

void check_finite(const CloudGradients& grads) {
    for (std::size_t i = 0; i < grads.size(); ++i) {
        bool ok = grads.d_position[i].allFinite() && grads.d_rotation[i].allFinite() &&
                  grads.d_log_scale[i].allFinite() && std::isfinite(grads.d_opacity_logit[i]) &&
                  grads.d_color[i].allFinite();
        if (!ok) {
            throw NumericError("non-finite gradient for gaussian " + std::to_string(i));
        }
    }
}

/// Uniform sample inside the unit ball.
Eigen::Vector3d sample_unit_ball(Rng& rng) {
    Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
    double n = dir.norm();
    if (n == 0.0) {
        return Eigen::Vector3d::Zero();
    }
    double radius = std::cbrt(rng.uniform());
    return (radius / n) * dir;
}

} // namespace

void adam_step(TrainState& state, const CloudGradients& grads, const LearningRates& rates) {
    if (grads.size() != state.cloud.size() || state.moments.size() != state.cloud.size()) {
        throw InvalidArgumentError("gradient/moment shapes do not match the cloud");
    }
    check_finite(grads);

    const long t = state.step + 1;
    AdamMoments& mo = state.moments;
    for (std::size_t i = 0; i < state.cloud.size(); ++i) {
        Gaussian3D& g = state.cloud[i];
        for (int k = 0; k < 3; ++k) {
            g.position[k] += adam_update(mo.m_position[i][k], mo.v_position[i][k],
                                         grads.d_position[i][k], rates.position, t);
            g.log_scale[k] += adam_update(mo.m_log_scale[i][k], mo.v_log_scale[i][k],
                                          grads.d_log_scale[i][k], rates.log_scale, t);
            g.color[k] += adam_update(mo.m_color[i][k], mo.v_color[i][k], grads.d_color[i][k],
                                      rates.color, t);
        }
        for (int k = 0; k < 4; ++k) {
            g.rotation[k] += adam_update(mo.m_rotation[i][k], mo.v_rotation[i][k],
                                         grads.d_rotation[i][k], rates.rotation, t);
        }
        g.opacity_logit += adam_update(mo.m_opacity[i], mo.v_opacity[i], grads.d_opacity_logit[i],
                                       rates.opacity, t);
        double n = g.rotation.norm();
        if (!(n > 0.0)) {
            throw NumericError("rotation collapsed to zero for gaussian " + std::to_string(i));
        }
        g.rotation /= n;
    }
    ++state.step;
}

void accumulate_densify_stats(TrainState& state, const BackwardResult& backward) {
    if (backward.screen_grad_norm.size() != state.cloud.size()) {
        throw InvalidArgumentError("backward result does not match the cloud");
    }
    if (state.densify.grad_accum.size() != state.cloud.size()) {
        state.densify.resize_zero(state.cloud.size());
    }
    for (std::size_t i = 0; i < state.cloud.size(); ++i) {
        if (backward.visibility_count[i] > 0) {
            state.densify.grad_accum[i] += backward.screen_grad_norm[i];
            state.densify.observations[i] += 1;
        }
    }
}

void densify_and_prune(TrainState& state, const DensifyParams& params, Rng& rng) {
    const std::size_t n = state.cloud.size();
    if (state.densify.grad_accum.size() != n) {
        throw InvalidArgumentError("densify stats do not match the cloud");
    }

    enum class Action { keep, clone, split, prune };
    std::vector<Action> actions(n, Action::keep);
    for (std::size_t i = 0; i < n; ++i) {
        const Gaussian3D& g = state.cloud[i];
        if (sigmoid(g.opacity_logit) < params.opacity_floor) {
            actions[i] = Action::prune;
            continue;
        }
        int obs = state.densify.observations[i];
        double mean_grad = obs > 0 ? state.densify.grad_accum[i] / obs : 0.0;
        if (mean_grad > params.grad_threshold) {
            double max_scale = g.log_scale.array().exp().maxCoeff();
            actions[i] = max_scale < params.scale_threshold ? Action::clone : Action::split;
        }
    }

    GaussianCloud next;
    AdamMoments next_moments;
    std::vector<Gaussian3D> appended;

    auto keep_with_moments = [&](std::size_t i) {
        next.gaussians.push_back(state.cloud[i]);
        next_moments.m_position.push_back(state.moments.m_position[i]);
        next_moments.v_position.push_back(state.moments.v_position[i]);
        next_moments.m_rotation.push_back(state.moments.m_rotation[i]);
        next_moments.v_rotation.push_back(state.moments.v_rotation[i]);
        next_moments.m_log_scale.push_back(state.moments.m_log_scale[i]);
        next_moments.v_log_scale.push_back(state.moments.v_log_scale[i]);
        next_moments.m_opacity.push_back(state.moments.m_opacity[i]);
        next_moments.v_opacity.push_back(state.moments.v_opacity[i]);
        next_moments.m_color.push_back(state.moments.m_color[i]);
        next_moments.v_color.push_back(state.moments.v_color[i]);
    };

    for (std::size_t i = 0; i < n; ++i) {
        const Gaussian3D& g = state.cloud[i];
        switch (actions[i]) {
        case Action::prune:
            break;
        case Action::keep:
            keep_with_moments(i);
            break;
        case Action::clone: {
            keep_with_moments(i);
            Gaussian3D copy = g;
            Eigen::Matrix3d rot = quat_to_matrix(g.rotation.normalized());
            Eigen::Vector3d scales = g.log_scale.array().exp();
            copy.position += rot * scales.asDiagonal() * sample_unit_ball(rng);
            appended.push_back(copy);
            break;
        }
        case Action::split: {
            Eigen::Vector3d scales = g.log_scale.array().exp();
            int major = 0;
            scales.maxCoeff(&major);
            Eigen::Matrix3d rot = quat_to_matrix(g.rotation.normalized());
            Eigen::Vector3d axis = rot.col(major);
            const double shrink = std::log(1.6);
            for (double sign : {1.0, -1.0}) {
                Gaussian3D child = g;
                child.position += sign * 0.5 * scales[major] * axis;
                child.log_scale.array() -= shrink;
                appended.push_back(child);
            }
            break;
        }
        }
    }

    for (auto& g : appended) {
        next.gaussians.push_back(std::move(g));
        next_moments.m_position.push_back(Eigen::Vector3d::Zero());
        next_moments.v_position.push_back(Eigen::Vector3d::Zero());
        next_moments.m_rotation.push_back(Eigen::Vector4d::Zero());
        next_moments.v_rotation.push_back(Eigen::Vector4d::Zero());
        next_moments.m_log_scale.push_back(Eigen::Vector3d::Zero());
        next_moments.v_log_scale.push_back(Eigen::Vector3d::Zero());
        next_moments.m_opacity.push_back(0.0);
        next_moments.v_opacity.push_back(0.0);
        next_moments.m_color.push_back(Eigen::Vector3d::Zero());
        next_moments.v_color.push_back(Eigen::Vector3d::Zero());
    }

    if (next.empty()) {
        throw NumericError("densify pruned every Gaussian; opacity_floor must leave at least one");
    }

    state.cloud = std::move(next);
    state.moments = std::move(next_moments);
    state.densify.resize_zero(state.cloud.size());
}

StaticFitResult fit_static(const ImageMatrix& matrix, const FitStaticConfig& config) {
    if (config.sds_weight != 0.0 && !config.denoiser) {
        throw InvalidArgumentError("sds_weight is set but no denoiser was provided");
    }
    if (config.steps < 0) {
        throw InvalidArgumentError("steps must be non-negative");
    }

    TrainState state = make_train_state(
        init_random_cloud(static_cast<std::size_t>(config.initial_count), config.extent,
                          mix_seed(config.seed, 1)),
        config.seed);
    Rng densify_rng(mix_seed(config.seed, 2));

    StaticFitResult result;
    result.log.reserve(static_cast<std::size_t>(config.steps));

    const int num_views = matrix.num_views();
    const long densify_limit = static_cast<long>(config.densify_until * config.steps);

    using Clock = std::chrono::steady_clock;
    for (int step = 0; step < config.steps; ++step) {
        auto started = Clock::now();
        const int view = step % num_views;
        const Image& target = matrix.cell(view, 0);

        RenderResult fwd = render(state.cloud, matrix.views[view], matrix.intrinsics,
                                  matrix.background);

        MseResult mse = mse_loss_and_grad(fwd.image, target);
        if (!std::isfinite(mse.loss)) {
            throw NumericError("non-finite loss at step " + std::to_string(step) + " (view " +
                               std::to_string(view) + ", " +
                               std::to_string(state.cloud.size()) + " gaussians)");
        }

        Image d_image(fwd.image.width(), fwd.image.height());
        if (config.mse_weight != 0.0) {
            for (std::size_t i = 0; i < d_image.value_count(); ++i) {
                d_image.values()[i] = config.mse_weight * mse.d_image.values()[i];
            }
        }
        if (config.sds_weight != 0.0) {
            Image sds = sds_loss_grad(fwd.image, *config.denoiser, config.schedule, step, target,
                                      RelativePose{}, config.omega,
                                      mix_seed(config.seed, 16 + static_cast<std::uint64_t>(step)));
            for (std::size_t i = 0; i < d_image.value_count(); ++i) {
                d_image.values()[i] += config.sds_weight * sds.values()[i];
            }
        }

        BackwardResult bwd = render_backward(state.cloud, matrix.views[view], matrix.intrinsics,
                                             matrix.background, d_image);
        accumulate_densify_stats(state, bwd);
        adam_step(state, bwd.grads, config.rates);

        if (config.densify_interval > 0 && (step + 1) % config.densify_interval == 0 &&
            state.step <= densify_limit) {
            densify_and_prune(state, config.densify, densify_rng);
        }

        double psnr = mse.loss > 0.0 ? std::min(100.0, 10.0 * std::log10(1.0 / mse.loss)) : 100.0;
        double wall_ms =
            std::chrono::duration<double, std::milli>(Clock::now() - started).count();
        result.log.push_back({state.step, config.mse_weight * mse.loss, psnr,
                              state.cloud.size(), wall_ms});
    }

    result.cloud = std::move(state.cloud);
    return result;
}

void write_loss_csv(const std::vector<FitLogRow>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "step,loss,psnr,gaussian_count,wall_ms\n";
    char buf[160];
    for (const auto& row : log) {
        std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%zu,%.3f\n", row.step, row.loss,
                      row.psnr, row.gaussian_count, row.wall_ms);
        out << buf;
    }
}

} // namespace mvg4d

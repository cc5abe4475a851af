#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "core/camera.hpp"
#include "core/image.hpp"

namespace mvg4d {

/// Mean squared error over all pixel channels and its image-space gradient
/// d = 2 (rendered - target) / N.
struct MseResult {
    double loss = 0.0;
    Image d_image;
};
MseResult mse_loss_and_grad(const Image& rendered, const Image& target);

/// Diffusion-style noise level: alpha_bar follows a cosine schedule,
/// monotone decreasing with alpha_bar in (0,1) for t in (0,1).
double alpha_bar(double timestep);

/// Linear timestep decay from t_max at step 0 to t_min at total_steps.
struct SdsSchedule {
    double t_max = 0.98;
    double t_min = 0.02;
    int total_steps = 1;
};
SdsSchedule make_sds_schedule(double t_max, double t_min, int total_steps);
double schedule_timestep(const SdsSchedule& schedule, int step);

/// Noise predictor plugged into the SDS gradient. The reference image and
/// relative pose mirror the conditioning of a view-aware diffusion prior.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual Image predict_noise(const Image& noisy, double timestep, const Image& reference,
                                const RelativePose& relative) const = 0;
};

/// Predicts the exact noise that would reconstruct the reference image from
/// the noisy input: eps_hat = (z_t - sqrt(alpha_bar) * reference) /
/// sqrt(1 - alpha_bar). Reduces SDS to a scaled reconstruction gradient.
class OracleDenoiser final : public Denoiser {
public:
    Image predict_noise(const Image& noisy, double timestep, const Image& reference,
                        const RelativePose& relative) const override;
};

/// Predicts zero noise everywhere.
class ZeroDenoiser final : public Denoiser {
public:
    Image predict_noise(const Image& noisy, double timestep, const Image& reference,
                        const RelativePose& relative) const override;
};

std::shared_ptr<Denoiser> make_denoiser(const std::string& name);

using WeightFn = std::function<double(double)>;

/// Score distillation gradient in image space:
///   t       = linear schedule position for `step`
///   z_t     = sqrt(alpha_bar) * rendered + sqrt(1 - alpha_bar) * eps
///   d_image = omega(t) * (denoiser(z_t, ...) - eps)
/// The caller chains the result through render_backward.
Image sds_loss_grad(const Image& rendered, const Denoiser& denoiser, const SdsSchedule& schedule,
                    int step, const Image& reference, const RelativePose& relative,
                    const WeightFn& omega, std::uint64_t seed);

} // namespace mvg4d

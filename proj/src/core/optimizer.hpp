#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "core/image_matrix.hpp"
#include "core/losses.hpp"
#include "core/rasterizer.hpp"
#include "core/rng.hpp"
#include "core/scene.hpp"

namespace mvg4d {

struct LearningRates {
    double position = 2e-3;
    double rotation = 2e-3;
    double log_scale = 5e-3;
    double opacity = 5e-2;
    double color = 1e-2;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// First/second Adam moments, laid out parallel to the cloud. Resized in
/// lockstep with densify/prune; new Gaussians start with zeroed moments.
struct AdamMoments {
    std::vector<Eigen::Vector3d> m_position, v_position;
    std::vector<Eigen::Vector4d> m_rotation, v_rotation;
    std::vector<Eigen::Vector3d> m_log_scale, v_log_scale;
    std::vector<double> m_opacity, v_opacity;
    std::vector<Eigen::Vector3d> m_color, v_color;

    void resize_zero(std::size_t n);
    std::size_t size() const { return m_position.size(); }
};

/// Accumulated screen-space positional gradient magnitude (NDC units) and
/// observation counts driving densification.
struct DensifyStats {
    std::vector<double> grad_accum;
    std::vector<int> observations;

    void resize_zero(std::size_t n);
};

struct TrainState {
    GaussianCloud cloud;
    AdamMoments moments;
    DensifyStats densify;
    long step = 0;
    std::uint64_t rng_seed = 0;
};

TrainState make_train_state(GaussianCloud cloud, std::uint64_t seed);

/// One Adam update with per-parameter-group learning rates; quaternions are
/// renormalized afterwards. Non-finite gradients raise NumericError naming
/// the Gaussian.
void adam_step(TrainState& state, const CloudGradients& grads, const LearningRates& rates);

void accumulate_densify_stats(TrainState& state, const BackwardResult& backward);

struct DensifyParams {
    double grad_threshold = 2e-4;  // NDC units, on the mean per-observation gradient
    double scale_threshold = 0.01; // world units; clone below, split above
    double opacity_floor = 0.005;
};

/// Clones small over-threshold Gaussians (offset sampled inside the parent's
/// 1-sigma ellipsoid), splits large ones into two children at +-0.5 sigma
/// along the major axis with scales divided by 1.6, prunes Gaussians whose
/// opacity fell below the floor, then resets the stats. Survivors keep their
/// positions in the ordering; new Gaussians append with zeroed moments.
void densify_and_prune(TrainState& state, const DensifyParams& params, Rng& rng);

struct FitStaticConfig {
    int steps = 3000;
    int initial_count = 400;
    double extent = 1.0;
    LearningRates rates;
    double mse_weight = 1.0;
    double sds_weight = 0.0;
    std::shared_ptr<Denoiser> denoiser; // required when sds_weight != 0
    SdsSchedule schedule{0.98, 0.02, 3000};
    WeightFn omega; // null = constant 1
    int densify_interval = 100;
    double densify_until = 0.6; // fraction of steps
    DensifyParams densify;
    std::uint64_t seed = 0;
};

struct FitLogRow {
    long step = 0;
    double loss = 0.0;
    double psnr = 0.0;
    std::size_t gaussian_count = 0;
    double wall_ms = 0.0;
};

struct StaticFitResult {
    GaussianCloud cloud;
    std::vector<FitLogRow> log;
};

/// Fits a static cloud to the t = 0 column of the matrix. Views are visited
/// round-robin; densification runs every densify_interval steps during the
/// first densify_until fraction of training. Deterministic given the seed.
StaticFitResult fit_static(const ImageMatrix& matrix, const FitStaticConfig& config);

/// CSV with columns step,loss,psnr,gaussian_count,wall_ms.
void write_loss_csv(const std::vector<FitLogRow>& log, const std::filesystem::path& path);

} // namespace mvg4d

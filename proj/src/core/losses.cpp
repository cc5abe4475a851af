#include "core/losses.hpp"

#include <cmath>
#include <numbers>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace mvg4d {

MseResult mse_loss_and_grad(const Image& rendered, const Image& target) {
    require_same_shape(rendered, target, "mse_loss_and_grad");
    MseResult result;
    result.d_image = Image(rendered.width(), rendered.height());
    const double n = static_cast<double>(rendered.value_count());
    double sum = 0.0;
    for (std::size_t i = 0; i < rendered.value_count(); ++i) {
        double diff = rendered.values()[i] - target.values()[i];
        sum += diff * diff;
        result.d_image.values()[i] = 2.0 * diff / n;
    }
    result.loss = sum / n;
    return result;
}

double alpha_bar(double timestep) {
    double c = std::cos(0.5 * std::numbers::pi * timestep);
    return c * c;
}

SdsSchedule make_sds_schedule(double t_max, double t_min, int total_steps) {
    if (!(0.0 < t_min && t_min < t_max && t_max < 1.0)) {
        throw InvalidArgumentError("SDS schedule requires 0 < t_min < t_max < 1");
    }
    if (total_steps < 1) {
        throw InvalidArgumentError("SDS schedule requires total_steps >= 1");
    }
    return SdsSchedule{t_max, t_min, total_steps};
}

double schedule_timestep(const SdsSchedule& schedule, int step) {
    double frac = std::clamp(static_cast<double>(step) / schedule.total_steps, 0.0, 1.0);
    return schedule.t_max + (schedule.t_min - schedule.t_max) * frac;
}

Image OracleDenoiser::predict_noise(const Image& noisy, double timestep, const Image& reference,
                                    const RelativePose&) const {
    require_same_shape(noisy, reference, "oracle denoiser");
    const double root_ab = std::sqrt(alpha_bar(timestep));
    const double inv_root_1mab = 1.0 / std::sqrt(1.0 - alpha_bar(timestep));
    Image out(noisy.width(), noisy.height());
    for (std::size_t i = 0; i < noisy.value_count(); ++i) {
        out.values()[i] = (noisy.values()[i] - root_ab * reference.values()[i]) * inv_root_1mab;
    }
    return out;
}

Image ZeroDenoiser::predict_noise(const Image& noisy, double, const Image&,
                                  const RelativePose&) const {
    return Image(noisy.width(), noisy.height());
}

std::shared_ptr<Denoiser> make_denoiser(const std::string& name) {
    if (name == "oracle") {
        return std::make_shared<OracleDenoiser>();
    }
    if (name == "zero") {
        return std::make_shared<ZeroDenoiser>();
    }
    throw InvalidArgumentError("unknown denoiser '" + name + "' (available: oracle, zero)");
}

Image sds_loss_grad(const Image& rendered, const Denoiser& denoiser, const SdsSchedule& schedule,
                    int step, const Image& reference, const RelativePose& relative,
                    const WeightFn& omega, std::uint64_t seed) {
    const double t = schedule_timestep(schedule, step);
    const double ab = alpha_bar(t);
    const double root_ab = std::sqrt(ab);
    const double root_1mab = std::sqrt(1.0 - ab);

    Rng rng(seed);
    Image eps(rendered.width(), rendered.height());
    for (double& v : eps.values()) {
        v = rng.normal();
    }

    Image noisy(rendered.width(), rendered.height());
    for (std::size_t i = 0; i < rendered.value_count(); ++i) {
        noisy.values()[i] = root_ab * rendered.values()[i] + root_1mab * eps.values()[i];
    }

    Image predicted = denoiser.predict_noise(noisy, t, reference, relative);
    if (!predicted.same_shape(rendered)) {
        throw InvalidArgumentError("denoiser violated its contract: output is " +
                                   std::to_string(predicted.width()) + "x" +
                                   std::to_string(predicted.height()) + ", expected " +
                                   std::to_string(rendered.width()) + "x" +
                                   std::to_string(rendered.height()));
    }

    const double w = omega ? omega(t) : 1.0;
    Image d_image(rendered.width(), rendered.height());
    for (std::size_t i = 0; i < rendered.value_count(); ++i) {
        d_image.values()[i] = w * (predicted.values()[i] - eps.values()[i]);
    }
    return d_image;
}

} // namespace mvg4d

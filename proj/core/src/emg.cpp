#include "emgc/emg.hpp"

#include <cmath>
#include <numbers>

#include "emgc/special.hpp"

namespace emgc {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
const double kSqrtHalfPi = std::sqrt(std::numbers::pi / 2.0);

struct EmgTerms {
    double lambda;  // sigma / tau
    double d;       // (t - mu) / sigma
    double u;       // erfc argument (lambda - d) / sqrt(2)
};

EmgTerms terms(double t, const EmgParams& p) {
    EmgTerms k{};
    k.lambda = p.sigma / p.tau;
    k.d = (t - p.mu) / p.sigma;
    k.u = (k.lambda - k.d) / kSqrt2;
    return k;
}

// Below the continued-fraction range the combined exponent lambda^2/2 - lambda d equals
// u^2 - d^2/2 and cannot overflow, so exp * erfc is both cheaper and as accurate as
// going through erfcx.
constexpr double kErfcxSwitch = 10.0;

double value_from_terms(const EmgParams& p, const EmgTerms& k) {
    const double scale = p.h * k.lambda * kSqrtHalfPi;
    if (k.u < kErfcxSwitch)
        return scale * std::exp(0.5 * k.lambda * k.lambda - k.lambda * k.d) * std::erfc(k.u);
    return scale * std::exp(-0.5 * k.d * k.d) * erfcx(k.u);
}

}  // namespace

bool EmgParams::valid() const noexcept {
    return std::isfinite(h) && std::isfinite(mu) && std::isfinite(sigma) && std::isfinite(tau) &&
           h > 0.0 && sigma > 0.0 && tau > 0.0 && mu > 0.0 && mu < 1.0;
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

EmgParams constrain(const RawEmgParams& raw) noexcept {
    return {std::exp(raw.h_raw), sigmoid(raw.mu_raw), std::exp(raw.sigma_raw),
            std::exp(raw.tau_raw)};
}

RawEmgParams unconstrain(const EmgParams& p) noexcept {
    return {std::log(p.h), logit(p.mu), std::log(p.sigma), std::log(p.tau)};
}

double emg_eval(double t, const EmgParams& p) { return value_from_terms(p, terms(t, p)); }

double emg_eval_naive(double t, const EmgParams& p) {
    const double ratio = p.sigma / p.tau;
    return p.h * ratio * kSqrtHalfPi * std::exp(0.5 * ratio * ratio - (t - p.mu) / p.tau) *
           erfc((ratio - (t - p.mu) / p.sigma) / kSqrt2);
}

double mixture_eval(double t, std::span<const EmgParams> mixture) {
    double sum = 0.0;
    for (const auto& c : mixture) sum += emg_eval(t, c);
    return sum;
}

double emg_value_and_grad(double t, const EmgParams& p, EmgGradient& grad) {
    const EmgTerms k = terms(t, p);
    const double value = value_from_terms(p, k);
    // value * (-d/du log erfc(u)) / sqrt(2) collapses to the Gaussian factor below,
    // so no erfc ever lands in a denominator.
    const double gauss = p.h * k.lambda * std::exp(-0.5 * k.d * k.d);
    const double l2 = k.lambda * k.lambda;
    // Derivatives with respect to the raw parameters: d/dmu_raw = mu(1-mu) d/dmu,
    // d/dsigma_raw = sigma d/dsigma, d/dtau_raw = tau d/dtau.
    grad[0] = value;
    grad[1] = (value * k.lambda - gauss) / p.sigma * p.mu * (1.0 - p.mu);
    grad[2] = value * (1.0 + l2) - gauss * (k.lambda + k.d);
    grad[3] = value * (k.lambda * k.d - 1.0 - l2) + gauss * k.lambda;
    return value;
}

EmgGradient emg_grad(double t, const RawEmgParams& raw) {
    EmgGradient g{};
    emg_value_and_grad(t, constrain(raw), g);
    return g;
}

}  // namespace emgc

#pragma once

#include <array>
#include <span>
#include <vector>

namespace emgc {

/// One exponentially-modified Gaussian component in constrained space.
///
/// `h` is the amplitude, `mu` the peak position on the normalized time axis,
/// `sigma` the Gaussian width and `tau` the exponential decay constant.
/// A valid component has h, sigma, tau > 0 and 0 < mu < 1.
struct EmgParams {
    double h = 1.0;
    double mu = 0.5;
    double sigma = 0.1;
    double tau = 0.1;

    bool valid() const noexcept;
    friend bool operator==(const EmgParams&, const EmgParams&) = default;
};

/// Unconstrained optimizer-space view of an EmgParams.
/// h, sigma, tau = exp(raw); mu = sigmoid(raw).
struct RawEmgParams {
    double h_raw = 0.0;
    double mu_raw = 0.0;
    double sigma_raw = 0.0;
    double tau_raw = 0.0;

    friend bool operator==(const RawEmgParams&, const RawEmgParams&) = default;
};

/// Partial derivatives with respect to (h_raw, mu_raw, sigma_raw, tau_raw).
using EmgGradient = std::array<double, 4>;

/// Ordered list of components; evaluation sums left to right in stored order.
using Mixture = std::vector<EmgParams>;

double sigmoid(double x) noexcept;
double logit(double p) noexcept;

EmgParams constrain(const RawEmgParams& raw) noexcept;
RawEmgParams unconstrain(const EmgParams& p) noexcept;

/// EMG value at normalized time t, using the erfcx rewriting on the side
/// where the literal formula would overflow.
double emg_eval(double t, const EmgParams& p);

/// Literal closed form h*s/tau*sqrt(pi/2)*exp(s^2/(2tau^2) - (t-mu)/tau)*erfc(...).
/// Overflows for large sigma/tau; kept as the reference the stable form is tested against.
double emg_eval_naive(double t, const EmgParams& p);

double mixture_eval(double t, std::span<const EmgParams> mixture);

/// Analytic gradient of emg_eval(t, constrain(raw)) with respect to the raw parameters.
EmgGradient emg_grad(double t, const RawEmgParams& raw);

/// Value and raw-space gradient in one pass. Hot path of the fitter.
double emg_value_and_grad(double t, const EmgParams& p, EmgGradient& grad);

}  // namespace emgc

#include "emgc/special.hpp"

#include <cmath>
#include <numbers>

#include "emgc/error.hpp"

namespace emgc {
namespace {

constexpr double kContinuedFractionThreshold = 10.0;

// exp(x^2) with the rounding error of x*x folded back in.
double exp_square(double x) {
    const double hi = x * x;
    const double lo = std::fma(x, x, -hi);
    return std::exp(hi) * (1.0 + lo);
}

// Laplace continued fraction erfcx(x) = 1/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
// evaluated with the modified Lentz algorithm.
double erfcx_continued_fraction(double x) {
    constexpr double tiny = 1e-300;
    double f = x;
    double c = x;
    double d = 0.0;
    for (int n = 1; n < 200; ++n) {
        const double a = 0.5 * n;
        d = x + a * d;
        if (d == 0.0) d = tiny;
        c = x + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::numbers::inv_sqrtpi / f;
}

}  // namespace

double erfc(double x) {
    if (!std::isfinite(x)) throw DomainError("erfc: non-finite argument");
    return std::erfc(x);
}

double erfcx(double x) {
    if (!std::isfinite(x)) throw DomainError("erfcx: non-finite argument");
    if (x < 0.0) {
        // erfc(x) = 2 - erfc(-x)
        return 2.0 * exp_square(x) - erfcx(-x);
    }
    if (x < kContinuedFractionThreshold) return exp_square(x) * std::erfc(x);
    return erfcx_continued_fraction(x);
}

}  // namespace emgc

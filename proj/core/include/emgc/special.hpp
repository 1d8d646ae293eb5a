#pragma once

namespace emgc {

/// Complementary error function, 2/sqrt(pi) * integral_x^inf exp(-t^2) dt.
/// Throws DomainError for non-finite input.
double erfc(double x);

/// Scaled complementary error function exp(x^2) * erfc(x).
///
/// Stays finite for large positive x (tested up to 1e8), where erfc alone
/// underflows. For x < -26.6 the result overflows to +inf.
/// Throws DomainError for non-finite input.
double erfcx(double x);

}  // namespace emgc

#pragma once

namespace pcuq {

/// ln Gamma(x) for x > 0 (Lanczos, g = 7, nine coefficients). Throws
/// std::domain_error for x <= 0.
double log_gamma(double x);

/// psi(x) = d/dx ln Gamma(x), x > 0.
double digamma(double x);

/// psi'(x), x > 0.
double trigamma(double x);

}  // namespace pcuq

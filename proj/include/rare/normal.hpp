#pragma once

namespace rare {

/// Standard normal CDF.
double std_normal_cdf(double z);

/// Standard normal density.
double std_normal_pdf(double z);

/// P(X <= a, Y <= b) for a standard bivariate normal with correlation r,
/// computed with Drezner-Wesolowsky Gauss-Legendre quadrature (Genz's
/// variant, including the high-|r| reformulation). Absolute error is well
/// below 1e-7. Throws InvalidInput if |r| > 1 or r is NaN.
double bivariate_normal_cdf(double a, double b, double r);

/// Phi2(s, -s, tau - 1), the forward-looking point variance for a point with
/// standardized margin s whose residual variance fraction is tau in [0, 1].
/// Evaluated as (1/2pi) * integral_{-pi/2}^{asin(tau-1)} exp(-s^2/(1 - sin u)) du.
double point_variance_after(double s, double tau);

/// point_variance_after(s, tau_new) - point_variance_after(s, tau_old) for
/// tau_new <= tau_old, integrated directly over the short angular interval.
double point_variance_change(double s, double tau_old, double tau_new);

/// asin(tau - 1) + pi/2, computed as 2 asin(sqrt(tau/2)) to stay accurate near 0.
double variance_angle(double tau);

/// (1/2pi) * integral_{lo}^{hi} exp(-s^2/(1 + cos v)) dv for 0 <= lo <= hi <= pi/2,
/// i.e. point_variance_after between the residual fractions with those angles.
double variance_angle_integral(double s, double lo, double hi);

}  // namespace rare

#include "rare/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <numbers>

#include "rare/errors.hpp"

namespace rare {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct GaussLegendre {
  const double* x;
  const double* w;
  int n;
};

// Half-rules on [0, 1]-symmetric nodes; paired below as 1 - x and 1 + x.
constexpr double kX6[] = {0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
constexpr double kW6[] = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
constexpr double kX12[] = {0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                           0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
constexpr double kW12[] = {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                           0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
constexpr double kX20[] = {0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                           0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                           0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                           0.07652652113349733};
constexpr double kW20[] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                           0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                           0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                           0.1527533871307259};

// 10-point rule on [-1, 1], nonnegative half.
constexpr std::array<double, 5> kX10 = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                                        0.8650633666889845, 0.9739065285171717};
constexpr std::array<double, 5> kW10 = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                                        0.1494513491505806, 0.0666713443086881};

GaussLegendre rule_for(double abs_r) {
  if (abs_r < 0.3) return {kX6, kW6, 3};
  if (abs_r < 0.75) return {kX12, kW12, 6};
  return {kX20, kW20, 10};
}

// P(X > h, Y > k).
double bvnu(double h, double k, double r) {
  if (h == INFINITY || k == INFINITY) return 0.0;
  if (h == -INFINITY) return k == -INFINITY ? 1.0 : std_normal_cdf(-k);
  if (k == -INFINITY) return std_normal_cdf(-h);
  if (r == 0.0) return std_normal_cdf(-h) * std_normal_cdf(-k);

  const GaussLegendre gl = rule_for(std::abs(r));
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    double hs = (h * h + k * k) / 2.0;
    double asr = std::asin(r) / 2.0;
    for (int i = 0; i < gl.n; ++i) {
      for (double x : {1.0 - gl.x[i], 1.0 + gl.x[i]}) {
        double sn = std::sin(asr * x);
        bvn += gl.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    bvn = bvn * asr / kTwoPi + std_normal_cdf(-h) * std_normal_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (std::abs(r) < 1.0) {
      double as = 1.0 - r * r;
      double a = std::sqrt(as);
      double bs = (h - k) * (h - k);
      double asr = -(bs / as + hk) / 2.0;
      double c = (4.0 - hk) / 8.0;
      double d = (12.0 - hk) / 80.0;
      if (asr > -100.0)
        bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
      if (hk > -100.0) {
        double b = std::sqrt(bs);
        double sp = std::sqrt(kTwoPi) * std_normal_cdf(-b / a);
        bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
      }
      a /= 2.0;
      double sum = 0.0;
      for (int i = 0; i < gl.n; ++i) {
        for (double x : {1.0 - gl.x[i], 1.0 + gl.x[i]}) {
          double xs = (a * x) * (a * x);
          double asx = -(bs / xs + hk) / 2.0;
          if (asx <= -100.0) continue;
          double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
          double rs = std::sqrt(1.0 - xs);
          double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
          sum += gl.w[i] * std::exp(asx) * (sp - ep);
        }
      }
      bvn = (a * sum - bvn) / kTwoPi;
    }
    if (r > 0.0) {
      bvn += std_normal_cdf(-std::max(h, k));
    } else if (h >= k) {
      bvn = -bvn;
    } else {
      double l = h < 0.0 ? std_normal_cdf(k) - std_normal_cdf(h)
                         : std_normal_cdf(-h) - std_normal_cdf(-k);
      bvn = l - bvn;
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

// asin(tau - 1) + pi/2, written to stay accurate as tau -> 0.
double angle_of(double tau) { return 2.0 * std::asin(std::sqrt(0.5 * std::clamp(tau, 0.0, 1.0))); }

constexpr std::array<double, 2> kX3 = {0.0, 0.7745966692414834};
constexpr std::array<double, 2> kW3 = {0.8888888888888889, 0.5555555555555556};
constexpr std::array<double, 3> kX5 = {0.0, 0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 3> kW5 = {0.5688888888888889, 0.4786286704993665, 0.2369268850561891};

template <std::size_t M>
double symmetric_rule(double s2, double mid, double half, const std::array<double, M>& x,
                      const std::array<double, M>& w, bool has_center) {
  double sum = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    double d = half * x[i];
    double f = std::exp(-s2 / (1.0 + std::cos(mid + d)));
    if (!(has_center && i == 0)) f += std::exp(-s2 / (1.0 + std::cos(mid - d)));
    sum += w[i] * f;
  }
  return sum * half;
}

// (1/2pi) * integral over [lo, hi] of exp(-s^2 / (1 + cos v)), 0 <= lo <= hi <= pi/2.
// This is the point-variance integrand in u = v - pi/2.
// The exponent grows fastest at hi; the rule order and piece count follow the
// exponent's change over the interval.
double angular_integral(double s, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  double s2 = s * s;
  // The integrand decreases in v; drop the range where it is below e^-60
  // of its value at lo.
  double floor_exponent = s2 / (1.0 + std::cos(lo));
  if (floor_exponent > 745.0) return 0.0;
  if (s2 > 0.0) {
    double cos_cut = 1.0 / (1.0 / (1.0 + std::cos(lo)) + 60.0 / s2) - 1.0;
    if (cos_cut > std::cos(hi)) hi = std::acos(cos_cut);
  }
  double width = hi - lo;
  if (!(width > 0.0)) return 0.0;
  double cos_hi = std::cos(hi);
  double slope = std::sin(hi) / ((1.0 + cos_hi) * (1.0 + cos_hi));
  double spread = std::max(s2 * slope * width, 3.0 * width);
  if (spread <= 0.1) return symmetric_rule(s2, lo + 0.5 * width, 0.5 * width, kX3, kW3, true) / kTwoPi;
  if (spread <= 1.0) return symmetric_rule(s2, lo + 0.5 * width, 0.5 * width, kX5, kW5, true) / kTwoPi;
  int pieces = static_cast<int>(std::ceil(spread));
  double step = width / pieces;
  double total = 0.0;
  for (int p = 0; p < pieces; ++p)
    total += symmetric_rule(s2, lo + (p + 0.5) * step, 0.5 * step, kX10, kW10, false);
  return total / kTwoPi;
}

}  // namespace

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(kTwoPi);
}

double bivariate_normal_cdf(double a, double b, double r) {
  if (std::isnan(a) || std::isnan(b) || !(std::abs(r) <= 1.0))
    throw InvalidInput("bivariate normal: arguments must be numbers with |r| <= 1");
  return bvnu(-a, -b, r);
}

double variance_angle(double tau) { return angle_of(tau); }

double variance_angle_integral(double s, double lo, double hi) {
  return angular_integral(s, std::max(lo, 0.0), std::min(hi, std::numbers::pi / 2.0));
}

double point_variance_after(double s, double tau) {
  return angular_integral(s, 0.0, angle_of(tau));
}

double point_variance_change(double s, double tau_old, double tau_new) {
  double hi = angle_of(tau_old);
  double lo = angle_of(tau_new);
  if (lo >= hi) return 0.0;
  return -angular_integral(s, lo, hi);
}

}  // namespace rare

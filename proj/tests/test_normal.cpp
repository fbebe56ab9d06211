#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rare/errors.hpp"
#include "rare/normal.hpp"

TEST_SUITE("normal") {

TEST_CASE("std_normal_cdf matches the erf series") {
  for (double z = -8.0; z <= 8.0; z += 0.125) {
    const double ref = 0.5 * (1.0 + oracle::erf_series(z / std::sqrt(2.0)));
    if (std::abs(z) <= 4.0) {
      CHECK(std::abs(rare::std_normal_cdf(z) - ref) < 1e-12);
    } else if (z < 0) {
      // Relative accuracy in the lower tail.
      CHECK(std::abs(rare::std_normal_cdf(z) / oracle::norm_cdf(z) - 1.0) < 1e-9);
    }
  }
  CHECK(rare::std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-16));
  CHECK(rare::std_normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
}

TEST_CASE("bivariate_normal_cdf matches 2-D quadrature") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ab(-3.0, 3.0), rr(-0.999, 0.999);
  const double special[] = {0.0, 0.99, -0.99, 1.0, -1.0};
  for (int k = 0; k < 30; ++k) {
    double a = ab(rng), b = ab(rng);
    double r = k < 15 ? special[k % 5] : rr(rng);
    double ref = oracle::phi2_quadrature(a, b, r);
    CAPTURE(a);
    CAPTURE(b);
    CAPTURE(r);
    CHECK(std::abs(rare::bivariate_normal_cdf(a, b, r) - ref) < 1e-9);
  }
}

TEST_CASE("bivariate_normal_cdf closed form at the origin") {
  for (double r = -1.0; r <= 1.0; r += 0.05) {
    double rc = std::clamp(r, -1.0, 1.0);
    CHECK(std::abs(rare::bivariate_normal_cdf(0.0, 0.0, rc) - (0.25 + std::asin(rc) / (2.0 * M_PI))) < 1e-12);
  }
}

TEST_CASE("bivariate_normal_cdf reduces to products and marginals") {
  CHECK(rare::bivariate_normal_cdf(0.3, -1.2, 0.0) ==
        doctest::Approx(oracle::norm_cdf(0.3) * oracle::norm_cdf(-1.2)).epsilon(1e-14));
  CHECK(rare::bivariate_normal_cdf(0.7, 40.0, 0.5) == doctest::Approx(oracle::norm_cdf(0.7)).epsilon(1e-14));
  CHECK(rare::bivariate_normal_cdf(-40.0, 1.0, 0.5) == doctest::Approx(0.0));
  CHECK_THROWS_AS(rare::bivariate_normal_cdf(0.0, 0.0, 1.5), rare::InvalidInput);
  CHECK_THROWS_AS(rare::bivariate_normal_cdf(0.0, 0.0, std::nan("")), rare::InvalidInput);
}

TEST_CASE("point variance after conditioning matches Plackett's identity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ss(-6.0, 6.0), tt(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    double s = ss(rng), tau = tt(rng);
    if (k % 10 == 0) tau = 1e-9 * tt(rng);
    CAPTURE(s);
    CAPTURE(tau);
    CHECK(std::abs(rare::point_variance_after(s, tau) - oracle::forward_variance_plackett(s, tau)) < 1e-12);
  }
}

TEST_CASE("point variance limits and change") {
  for (double s : {-3.0, -0.5, 0.0, 1.0, 4.0}) {
    double h = oracle::norm_cdf(s) * oracle::norm_cdf(-s);
    CHECK(rare::point_variance_after(s, 1.0) == doctest::Approx(h).epsilon(1e-13));
    CHECK(std::abs(rare::point_variance_after(s, 0.0)) < 1e-15);
    CHECK(rare::point_variance_change(s, 0.8, 0.3) ==
          doctest::Approx(rare::point_variance_after(s, 0.3) - rare::point_variance_after(s, 0.8)).epsilon(1e-12));
  }
  CHECK(rare::point_variance_after(40.0, 0.5) == 0.0);
}

TEST_CASE("variance angle") {
  for (double tau = 0.0; tau <= 1.0; tau += 0.1)
    CHECK(rare::variance_angle(tau) == doctest::Approx(std::asin(tau - 1.0) + M_PI / 2).epsilon(1e-13));
  CHECK(rare::variance_angle(1e-20) == doctest::Approx(std::sqrt(2e-20)).epsilon(1e-10));
}

}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "maass/besselk.hpp"
#include "support/bessel_oracle.hpp"

using namespace maass;

TEST_CASE("order zero at x = 1") {
  CHECK(besselk_ir_scaled(0.0, 1.0) == doctest::Approx(0.421024438240708).epsilon(1e-13));
}

TEST_CASE("order zero matches the classical K0") {
  for (double lx = -2.0; lx <= 2.5; lx += 0.25) {
    const double x = std::pow(10.0, lx);
    CHECK(besselk_ir_scaled(0.0, x) == doctest::Approx(std::cyl_bessel_k(0.0, x)).epsilon(1e-12));
  }
}

TEST_CASE("agrees with the cosh-integral oracle in every regime") {
  const double cases[][2] = {{9.533695, 20.0}, {9.533695, 0.5},  {9.533695, 9.0},  {0.3, 0.01},
                             {50.0, 10.0},     {50.0, 49.0},     {50.0, 80.0},     {120.0, 119.0},
                             {120.0, 3.0},     {250.0, 260.0},   {300.0, 150.0},   {1.0, 400.0}};
  for (const auto& c : cases) {
    const double ref = testing::reference_besselk_scaled(c[0], c[1]);
    const double got = besselk_ir_scaled(c[0], c[1]);
    INFO("r = " << c[0] << ", x = " << c[1]);
    CHECK(std::abs(got - ref) <= 1e-10 * std::abs(ref) + 1e-300);
  }
}

TEST_CASE("negative order is canonicalised") {
  for (double x : {0.1, 5.0, 30.0}) CHECK(besselk_ir_scaled(-12.5, x) == besselk_ir_scaled(12.5, x));
}

TEST_CASE("large-argument asymptotic series") {
  // K_nu(x) ~ sqrt(pi/(2x)) e^{-x} sum_k prod_{j<=k} (4 nu^2 - (2j-1)^2) / (k! (8x)^k), nu = ir.
  for (double r : {0.0, 2.0, 5.0, 10.0}) {
    const double x = 600.0;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 12; ++k) {
      term *= (-4.0 * r * r - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * x);
      sum += term;
    }
    const double ref = std::exp(std::numbers::pi * r / 2.0 - x) * std::sqrt(std::numbers::pi / (2.0 * x)) * sum;
    CHECK(besselk_ir_scaled(r, x) == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("derivative matches a central difference") {
  const BesselKir k(40.0);
  for (double x : {2.0, 20.0, 39.0, 41.0, 60.0}) {
    const double h = 1e-5 * x;
    const double fd = (k(x + h) - k(x - h)) / (2.0 * h);
    CHECK(k.derivative(x) == doctest::Approx(fd).epsilon(1e-6).scale(1e-8));
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(besselk_ir_scaled(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(besselk_ir_scaled(1.0, -1.0), std::domain_error);
}

TEST_CASE("truncation bound scales like 1/y and is monotone") {
  for (double r : {1.0, 10.0, 100.0}) {
    for (double y : {0.05, 0.1, 0.2, 0.4}) {
      const int M1 = truncation_M(r, y, 1e-9).M;
      const int M2 = truncation_M(r, 2.0 * y, 1e-9).M;
      CHECK(M2 <= M1);
      CHECK(std::abs(2 * M2 - M1) <= 2);
      CHECK(truncation_M(r + 5.0, y, 1e-9).M >= M1);
      CHECK(M1 >= 1);
    }
  }
}

TEST_CASE("terms past the truncation bound are below epsilon") {
  for (double r : {5.0, 40.0, 150.0}) {
    for (double y : {0.1, 0.5}) {
      const auto tb = truncation_M(r, y, 1e-9);
      const BesselKir k(r);
      double tail = 0.0;
      for (int n = tb.M + 1; n <= tb.M + 200; ++n) {
        tail += std::pow(n, 0.75) * std::sqrt(y) * std::abs(k(2.0 * std::numbers::pi * n * y));
      }
      CHECK(tail < 1e-9);
    }
  }
}

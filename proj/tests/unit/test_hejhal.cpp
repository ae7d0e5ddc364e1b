#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "maass/eigensearch.hpp"
#include "maass/hejhal.hpp"

using namespace maass;

namespace {

constexpr double kFirstOdd = 9.533695261354;

const CuspFormCandidate& first_form() {
  static const CuspFormCandidate c = solve_at(kFirstOdd, Symmetry::odd);
  return c;
}

}  // namespace

TEST_CASE("symmetry names round-trip") {
  CHECK(parse_symmetry("even") == Symmetry::even);
  CHECK(parse_symmetry(to_string(Symmetry::odd)) == Symmetry::odd);
  CHECK_THROWS_AS(parse_symmetry("both"), std::invalid_argument);
}

TEST_CASE("phase 1 residual is tiny at an eigenvalue and not at a generic r") {
  const double y = default_height(kFirstOdd);
  const auto at = phase1_solve(build_system(kFirstOdd, Symmetry::odd, y));
  const auto off = phase1_solve(build_system(9.0, Symmetry::odd, default_height(9.0)));
  CHECK(at.coefficients.front() == 1.0);
  const double ya = y_independence_check(at, verification_heights(y));
  const double yo = y_independence_check(off, verification_heights(default_height(9.0)));
  CHECK(ya < 1e-8);
  CHECK(yo > 1e-4);
  CHECK(yo > 1e4 * ya);
}

TEST_CASE("verification heights differ from the primary and stay below Y0") {
  for (double y : {0.05, 0.2, 0.6}) {
    const auto hs = verification_heights(y);
    CHECK(hs.size() >= 2);
    for (double h : hs) {
      CHECK(h > 0.0);
      CHECK(h < kY0);
      CHECK(h != y);
    }
  }
}

TEST_CASE("heights at or above Y0 are rejected") {
  CHECK_THROWS(build_system(kFirstOdd, Symmetry::odd, kY0));
}

TEST_CASE("V does not depend on the order of the sample points") {
  const double y = default_height(kFirstOdd);
  const int M0 = coefficient_count(kFirstOdd);
  HorocycleSample s = sample_horocycle(y, sample_count(row_count(kFirstOdd, y), M0));
  const HejhalSystem a = build_system(kFirstOdd, Symmetry::odd, s, M0, M0);
  std::reverse(s.points.begin(), s.points.end());
  std::reverse(s.pullbacks.begin(), s.pullbacks.end());
  std::reverse(s.maps.begin(), s.maps.end());
  const HejhalSystem b = build_system(kFirstOdd, Symmetry::odd, s, M0, M0);
  CHECK((a.V - b.V).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + a.V.cwiseAbs().maxCoeff()));
}

TEST_CASE("coefficients are multiplicative") {
  const auto& a = first_form().coefficients;
  REQUIRE(a.size() >= 10);
  CHECK(a[1] * a[2] == doctest::Approx(a[5]).epsilon(1e-7));   // a2 a3 = a6
  CHECK(a[1] * a[4] == doctest::Approx(a[9]).epsilon(1e-7));   // a2 a5 = a10
  CHECK(a[1] * a[1] - 1.0 == doctest::Approx(a[3]).epsilon(1e-7));  // a2^2 - 1 = a4
}

TEST_CASE("phase 2 with nothing beyond M0 returns nothing") {
  CuspFormCandidate c = first_form();
  const int M0 = static_cast<int>(c.coefficients.size());
  CHECK(phase2_extend(c, 0.3, M0).empty());
}

TEST_CASE("phase 2 coefficients agree between heights and satisfy Hecke") {
  CuspFormCandidate c = first_form();
  const int M0 = static_cast<int>(c.coefficients.size());
  const int m_max = 2 * M0 + 4;
  const auto lo = phase2_extend(c, 0.12, m_max);
  const auto hi = phase2_extend(c, 0.15, m_max);
  REQUIRE(lo.size() == hi.size());
  for (std::size_t i = 0; i < lo.size(); ++i) {
    CHECK(lo[i].m == hi[i].m);
    const double tol = 10.0 * (lo[i].error_bound + hi[i].error_bound) + 1e-8;
    CHECK(std::abs(lo[i].value - hi[i].value) < tol);
  }
  auto ext = extend_coefficients(c, m_max);
  REQUIRE(static_cast<int>(c.coefficients.size()) == m_max);
  const auto& a = c.coefficients;
  // a2 a_{M0+k} where the product index is odd times two
  const int n = (M0 % 2 == 0 ? M0 + 1 : M0 + 2);
  CHECK(a[1] * a[n - 1] == doctest::Approx(a[2 * n - 1]).epsilon(1e-5).scale(1e-6));
  CHECK_THROWS_AS(phase2_extend(c, 0.5, 1000000), std::invalid_argument);
}

TEST_CASE("odd forms vanish on the imaginary axis and even forms are symmetric") {
  const auto& odd = first_form();
  CHECK(std::abs(evaluate_form(odd, {0.0, 1.3})) < 1e-12);
  CHECK(evaluate_form(odd, {0.2, 1.1}) == doctest::Approx(-evaluate_form(odd, {-0.2, 1.1})));
  const auto even = solve_at(13.779751351891, Symmetry::even);
  CHECK(evaluate_form(even, {0.3, 1.0}) == doctest::Approx(evaluate_form(even, {-0.3, 1.0})));
}

TEST_CASE("the form is automorphic") {
  CuspFormCandidate c = first_form();
  extend_coefficients(c, 3 * static_cast<int>(c.coefficients.size()));
  const double floor = evaluation_floor(c);
  CHECK(floor < 0.5);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-0.5, 0.5), uy(std::max(floor, 0.0) + 0.01, 0.8);
  std::vector<Point> pts;
  for (int i = 0; i < 40; ++i) pts.push_back({ux(rng), uy(rng)});
  CHECK(automorphy_residual(c, pts) < 1e-6);
  CHECK_THROWS_AS(evaluate_form(c, {0.1, 0.5 * floor}), std::domain_error);
}

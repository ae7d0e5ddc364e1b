#pragma once

// Collocation on a horocycle for Maass cusp forms on SL(2,Z)\H, in the symmetrized
// real formulation: even forms expand in cos(2 pi n x), odd forms in
// sin(2 pi n x), and the horocycle is sampled on the half-interval only.
//
//   f(z) = sum_{n >= 1} a_n sqrt(y) kappa(r, 2 pi n y) cs(2 pi n x)

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "maass/besselk.hpp"
#include "maass/geometry.hpp"

namespace maass {

enum class Symmetry { even, odd };

std::string_view to_string(Symmetry s);
/// Accepts "even" or "odd"; throws std::invalid_argument otherwise.
Symmetry parse_symmetry(std::string_view text);

struct HejhalOptions {
  double epsilon = 1e-9;
  /// Rows with |sqrt(y) kappa(r, 2 pi m y)| below row_floor * max are dropped.
  double row_floor = 1e-3;
  /// Row cap is M0 + extra_rows (further bounded by M(y)). Rows m > M0 only
  /// carry information when a_m sqrt(y) kappa(r, 2 pi m y) is below epsilon,
  /// which the row floor already excludes, so the default is a square system.
  int extra_rows = 0;
  /// Tolerance on the y-independence and automorphy residuals.
  double accept_tolerance = 1e-6;
  TruncationModel truncation;
};

/// Number of coefficients needed at the fundamental-domain floor.
int coefficient_count(double r, const HejhalOptions& opt = {});

/// Default horocycle height for spectral parameter r: row M0 sits just past
/// the turning point of kappa(r, 2 pi m y), clipped to [0.05, 0.8 Y0].
double default_height(double r, const HejhalOptions& opt = {});

/// Verification heights used by the y-independence check.
std::vector<double> verification_heights(double primary);

/// Smallest Q that avoids aliasing for rows up to `rows` with expansion
/// length `terms` at the sample height.
int sample_count(int terms, int rows);

struct HejhalSystem {
  double r = 0.0;
  Symmetry symmetry = Symmetry::even;
  HorocycleSample sample;
  int M0 = 0;
  int My = 0;
  std::vector<int> rows;       ///< retained row indices m (1-based)
  Eigen::VectorXd row_scale;   ///< sqrt(y) kappa(r, 2 pi m y) for retained rows
  Eigen::MatrixXd V;           ///< rows.size() x M0
  Eigen::MatrixXd C;           ///< rows.size() x M0
};

/// Assemble V and C for rows m = 1..Mrows at the sample's height.
/// Throws std::runtime_error when fewer than M0 rows survive the floor.
HejhalSystem build_system(double r, Symmetry symmetry, const HorocycleSample& sample, int M0,
                          int Mrows, const HejhalOptions& opt = {});

/// Assemble on an explicit row set (used when C must be compared across r).
HejhalSystem build_system(double r, Symmetry symmetry, const HorocycleSample& sample, int M0,
                          std::span<const int> rows);

/// Rows m <= Mrows passing the relative floor at height y.
std::vector<int> retained_rows(const BesselKir& kappa, double y, int Mrows, double row_floor);

/// Row cap min(M(y), M0 + extra_rows), never below M0.
int row_count(double r, double y, const HejhalOptions& opt = {});

/// Convenience overload that chooses M0, Mrows and Q from the options.
HejhalSystem build_system(double r, Symmetry symmetry, double y, const HejhalOptions& opt = {});

struct CuspFormCandidate {
  Symmetry symmetry = Symmetry::even;
  double r = 0.0;
  std::vector<double> coefficients;  ///< a_1 .. a_N, a_1 = 1
  double residual_phase1 = 0.0;
  double residual_y_independence = 0.0;
};

/// Least-squares solution of C a = 0 with a_1 = 1.
/// Throws std::runtime_error when the reduced system is rank deficient.
CuspFormCandidate phase1_solve(const HejhalSystem& system);

/// max_m |(C a)_m| over the retained rows of `system`.
double system_residual(const HejhalSystem& system, std::span<const double> coefficients);

/// max over heights of the Phase-1 residual with the coefficients held fixed.
double y_independence_check(const CuspFormCandidate& candidate, std::span<const double> heights,
                            const HejhalOptions& opt = {});

struct ExtendedCoefficient {
  int m = 0;
  double value = 0.0;
  double error_bound = 0.0;
};

/// Coefficients a_m for m = M0+1 .. m_max computed directly at height y.
/// Throws std::invalid_argument when M(y) < m_max.
std::vector<ExtendedCoefficient> phase2_extend(const CuspFormCandidate& candidate, double y,
                                               int m_max, const HejhalOptions& opt = {});

/// Extend the candidate's coefficient vector to m_max, taking each a_m from
/// whichever of a few nearby heights gives the smallest error bound.
std::vector<ExtendedCoefficient> extend_coefficients(CuspFormCandidate& candidate, int m_max,
                                                     const HejhalOptions& opt = {});

/// Lowest height at which the candidate's coefficients keep the tail below epsilon.
double evaluation_floor(const CuspFormCandidate& candidate, const HejhalOptions& opt = {});

/// Truncated expansion at z. Throws std::domain_error below evaluation_floor.
double evaluate_form(const CuspFormCandidate& candidate, const Point& z,
                     const HejhalOptions& opt = {});

/// max_j |f(z_j) - f(z_j*)| over the given points.
double automorphy_residual(const CuspFormCandidate& candidate, std::span<const Point> points,
                           const HejhalOptions& opt = {});

}  // namespace maass

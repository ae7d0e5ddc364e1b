#pragma once

// Eigenvalue search by linearising C(lambda) around trial values.
//
// Near a trial value lt, C(lt + h) ~ C(lt) + h C'(lt); eigenvalues of the
// pencil show up as small h with (C + h C') alpha = 0, i.e. as eigenvalues of
// -C'^{-1} C. Those are refined by repeating the linearisation at lt + Re h.

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "maass/hejhal.hpp"

namespace maass {

struct SearchOptions {
  HejhalOptions hejhal;
  /// Finite-difference step for C', expressed in r.
  double delta_r = 1e-4;
  /// Refinement stops when |h| < refine_tol (lambda units) ...
  double refine_tol = 1e-10;
  /// ... or after this many linearisations.
  int max_iter = 12;
  double dedupe_tol = 1e-7;
  /// Multiplies the default height; the control loop varies it on retries.
  double height_factor = 1.0;
  /// Trial density multiplier: spacing is max(0.02, 3/r) / density.
  double density = 1.0;
  /// Reciprocal-condition floor for C'.
  double rcond_floor = 1e-13;
  /// Worker threads for scan; 0 picks the hardware concurrency.
  int workers = 0;
};

/// Spectral parameter <-> eigenvalue.
inline double lambda_of(double r) { return r * r + 0.25; }
double r_of(double lambda);

/// Trial-value spacing in r at spectral parameter r.
double trial_spacing(double r, const SearchOptions& opt = {});

/// Trial values r_lo = r_0 < r_1 < ... <= r_hi.
std::vector<double> trial_grid(double r_lo, double r_hi, const SearchOptions& opt = {});

/// Everything that must stay fixed while C is differentiated or refined.
struct LinearisationContext {
  Symmetry symmetry = Symmetry::even;
  HorocycleSample sample;
  int M0 = 0;
  std::vector<int> rows;
};

/// Context at trial value r: height from default_height times the factor,
/// nudged down when a row lands on a zero of kappa.
LinearisationContext make_context(double r, Symmetry symmetry, const SearchOptions& opt = {});

/// Square (first M0 rows) system at spectral parameter r on the context,
/// row-scaled back to diag(sqrt(y) kappa(r, 2 pi m y)) C = diag(...) - V.
Eigen::MatrixXd square_C(double r, const LinearisationContext& ctx);

/// Central difference of square_C in lambda with fixed sample and rows.
Eigen::MatrixXd derivative_C(double r, const LinearisationContext& ctx, double delta_r);

struct LinearisedSolution {
  std::complex<double> h;
  Eigen::VectorXcd alpha;
  double trial_lambda = 0.0;
};

/// All eigenpairs of -C'^{-1} C at the trial value.
/// Throws std::runtime_error when C' is numerically singular.
std::vector<LinearisedSolution> linearised_solutions(double r, const LinearisationContext& ctx,
                                                     const SearchOptions& opt = {});

/// Phase 1 at the default height for r (times the height factor) and the
/// residual at the verification heights. Throws when the system is unusable.
CuspFormCandidate solve_at(double r, Symmetry symmetry, const SearchOptions& opt = {});

struct RefineResult {
  bool accepted = false;
  std::string reason;  ///< empty when accepted
  CuspFormCandidate candidate;
  int iterations = 0;
  std::vector<double> h_history;  ///< |h| per linearisation
};

/// Newton-type refinement from a linearised solution, then Phase 1 and the
/// y-independence check.
RefineResult refine(const LinearisedSolution& start, const LinearisationContext& ctx,
                    const SearchOptions& opt = {});

/// Scan trial values, refine nearby solutions, deduplicate and sort by r.
/// Per-trial failures are skipped; `log` (if set) receives diagnostics.
std::vector<CuspFormCandidate> scan(double r_lo, double r_hi, Symmetry symmetry,
                                    const SearchOptions& opt = {},
                                    const std::function<void(const std::string&)>& log = {});

/// Sort by (symmetry, r) and drop entries within dedupe_tol of an earlier
/// one of the same symmetry.
void deduplicate(std::vector<CuspFormCandidate>& list, double dedupe_tol);

}  // namespace maass

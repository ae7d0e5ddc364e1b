#pragma once

// Counting-function audit of an eigenvalue list on SL(2,Z)\H.
//
// M(t) is the smooth part of Weyl's law for N(t) = #{r_j <= t}, and the
// running mean <S(t)> = (1/t) int_0^t (N(t') - M(t')) dt' is bounded by
// explicit Turing bounds. A list whose mean drops below the lower bound is
// missing something; how far it stays consistent tells where.

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maass/eigensearch.hpp"
#include "maass/hejhal.hpp"

namespace maass {

struct EigenEntry {
  Symmetry symmetry = Symmetry::even;
  double r = 0.0;
  double residual_phase1 = 0.0;
  double residual_y = 0.0;
};

/// Entries sorted by r (ties broken by symmetry); notes carry provenance.
struct EigenvalueList {
  std::vector<EigenEntry> entries;
  std::vector<std::string> notes;

  void sort();
  /// Same list restricted to one symmetry.
  EigenvalueList filtered(Symmetry s) const;
  /// Throws std::invalid_argument unless r > 0 everywhere and r is strictly
  /// increasing within each symmetry.
  void validate() const;
};

/// M(t) = t^2/12 - (2t/pi) log(t/(e sqrt(pi/2))) - 131/144. Domain error for t <= 0.
double weyl_main_term(double t);
/// int_0^t M.
double weyl_main_integral(double t);

struct OneSided {
  double left = 0.0;   ///< limit from below
  double right = 0.0;  ///< value at t (N counts r_j <= t)
};

/// S(t) = N(t) - M(t) from both sides.
OneSided weyl_remainder(double t, const EigenvalueList& list);

/// Evaluates <S(t)> for many t against one list, in O(log n) per call.
class RemainderProfile {
 public:
  explicit RemainderProfile(const EigenvalueList& list);
  explicit RemainderProfile(std::vector<double> r);

  /// Number of r_j <= t.
  std::size_t count(double t) const;
  /// <S(t)> = (1/t) [sum_{r_j <= t} (t - r_j) - int_0^t M].
  double averaged(double t) const;
  const std::vector<double>& values() const { return r_; }

 private:
  std::vector<double> r_;
  std::vector<double> prefix_;  // prefix_[k] = r_0 + ... + r_{k-1}
};

double averaged_remainder(double t, const EigenvalueList& list);

/// E(t) = (1 + 6.59125/log t) (pi/(12 log t))^2. Domain error for t <= 1.
double turing_E(double t);
/// (E_lower, E_upper) = (-2E(t), E(t)).
std::pair<double, double> turing_bounds(double t);

/// Spectral parameters t <= T; lambda-valued fields use lambda = r^2 + 1/4.
struct TuringVerdict {
  double t = 0.0;  ///< list is consecutive for r < t
  double T = 0.0;  ///< first tau >= t0 with <S(tau)> <= E_lower(tau)
  double complete_below = 0.25;  ///< t^2 + 1/4
  /// [t^2 + 1/4, T^2 + 1/4]: some eigenvalue in here is missing from the list.
  std::optional<std::pair<double, double>> missing_within;
};

inline constexpr double kDefaultT0 = 20.0;

/// Crossings are located by certified Lipschitz steps on each gap between
/// eigenvalues and bisected to 1e-9. Throws std::invalid_argument when t0 is
/// too small for the bounds to sit inside (-1/2, 1/2) with M increasing.
TuringVerdict verdict(const EigenvalueList& list, double t0 = kDefaultT0);

struct Perturbation {
  enum class Kind { remove, insert } kind = Kind::remove;
  double r = 0.0;
  Symmetry symmetry = Symmetry::even;
  double match_tol = 1e-9;
};

/// Copy of `list` with one entry removed or a fake one inserted; the change
/// is recorded in notes. Removing an absent value throws std::invalid_argument.
EigenvalueList perturb_list(const EigenvalueList& list, const Perturbation& p);

/// Mutable parameters of the control loop; persisted in checkpoints.
struct ControlState {
  double density = 1.0;
  int schedule_index = 0;
  int cycle = 0;
  double t_old = -1.0;
  double T_old = -1.0;
};

struct ControlOptions {
  SearchOptions search;
  std::vector<Symmetry> symmetries{Symmetry::even, Symmetry::odd};
  double t0 = kDefaultT0;
  double budget_seconds = std::numeric_limits<double>::infinity();
  int max_cycles = 100000;
  /// Height factors tried in turn when a cycle makes no progress.
  std::vector<double> height_schedule{1.0, 0.91, 1.07, 0.83, 1.13, 0.79};
  double density_growth = 1.5;
  double density_decay = 0.9;
  double density_min = 0.5;
  double density_max = 20.0;
};

struct ControlResult {
  EigenvalueList list;
  TuringVerdict verdict;
  ControlState state;
  bool reached = false;  ///< verdict.t >= target_r
};

using CheckpointFn = std::function<void(const EigenvalueList&, const ControlState&)>;
using LogFn = std::function<void(const std::string&)>;

/// Scan [t, T], merge, re-audit; repeat until verdict.t >= target_r, the
/// budget runs out, or max_cycles is hit. `checkpoint` runs after each merge.
ControlResult control_loop(EigenvalueList list, double target_r, const ControlOptions& opt,
                           ControlState state = {}, const CheckpointFn& checkpoint = {},
                           const LogFn& log = {});

/// Merge found candidates into the list, skipping duplicates (same symmetry,
/// |dr| < tol). Returns the number of new entries.
int merge_candidates(EigenvalueList& list, const std::vector<CuspFormCandidate>& found, double tol);

}  // namespace maass

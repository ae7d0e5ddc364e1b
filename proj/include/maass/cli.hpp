#pragma once

// Command-line front end: run configuration, persisted formats and the
// subcommands scan, complete, verify, coeffs, stats and perturb.

#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "maass/turing.hpp"

namespace maass::cli {

/// Exit status contract.
enum ExitCode : int { kSuccess = 0, kComputeFailure = 1, kUsageFailure = 2 };

/// Bad flags, config keys or values (exit 2).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Unreadable or ill-formed input file (exit 2, or 1 for a checkpoint).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

/// Every free parameter of a run. Defaults mirror the library defaults.
struct RunConfig {
  std::string symmetry = "both";  ///< even, odd or both
  double epsilon = 1e-9;
  double y = 1.0;  ///< multiplier on the default horocycle height
  std::vector<double> height_schedule{1.0, 0.91, 1.07, 0.83, 1.13, 0.79};
  double density = 1.0;
  double density_growth = 1.5;
  double density_decay = 0.9;
  double delta_r = 1e-4;
  double refine_tol = 1e-10;
  double dedupe_tol = 1e-7;
  double accept_tolerance = 1e-6;
  double row_floor = 1e-3;
  double t0 = kDefaultT0;
  double target_r = kUnset;
  double r_lo = kUnset;
  double r_hi = kUnset;
  double budget_seconds = std::numeric_limits<double>::infinity();
  int max_cycles = 100000;
  int workers = 0;
  bool deterministic = false;
  bool override_unverified = false;
  std::string list_path;
  std::string out_path;
  // stats
  std::string figures = "all";
  std::string sigma = "estimate";  ///< "estimate" or a positive number
  int bins = 40;
  double window = 20.0;  ///< half width of the fig7 windows
  int sample_density = 4;
  double stats_t_max = kUnset;
  double perturb_r = kUnset;
  // coeffs
  double coeff_r = kUnset;
  int m_max = 100;

  /// Throws UsageError when a tolerance or count is out of range.
  void validate() const;
  SearchOptions search_options() const;
  std::vector<Symmetry> symmetries() const;
};

/// Apply `key = value` lines (`#` starts a comment). Unknown keys throw UsageError.
void apply_config_text(RunConfig& cfg, std::string_view text);
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Canonical text of the computational parameters and its FNV-1a hash.
std::string canonical_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

struct ListMeta {
  std::string created;      ///< empty in deterministic mode
  std::string config_hash;  ///< empty when unknown
  std::optional<TuringVerdict> verdict;
  std::optional<ControlState> state;
};

/// `<symmetry> <r:%.12f> <res1:%.3e> <res2:%.3e>` per line after a `#` header.
std::string serialize_list(const EigenvalueList& list, const ListMeta& meta);
/// Throws FormatError naming the offending line.
EigenvalueList parse_list(std::string_view text, ControlState* state = nullptr);
EigenvalueList read_list(const std::string& path, ControlState* state = nullptr);

/// Write to a temporary sibling and rename over `path`.
void write_file_atomic(const std::string& path, std::string_view content);

/// Entry point; `argv[0]` is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace maass::cli

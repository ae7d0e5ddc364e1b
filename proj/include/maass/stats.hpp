#pragma once

// Fluctuation statistics of the Weyl remainder S(t) = N(t) - M(t) over a
// verified-consecutive eigenvalue list.

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "maass/turing.hpp"

namespace maass {

enum class SeriesKind {
  raw,          ///< S(t)
  li_sarnak,    ///< (log t / sqrt t) exp(-(log log t)^(5/17) / 2) |S(t)|
  sqrt_scaled,  ///< |S(t)| / sqrt t
  clt,          ///< (log log t / sqrt t) S(t) / sigma
  lil,          ///< (log log t / (2t))^(1/2) |S(t)|
};

std::string_view to_string(SeriesKind k);
SeriesKind parse_series_kind(std::string_view text);

/// Lowest admissible t for a series kind (exclusive for raw and sqrt_scaled).
double series_t_min(SeriesKind k);

/// Requested range reaches past the verified-consecutive bound.
struct UnverifiedRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Sorted spectrum plus the verified bound that every statistic checks against.
class StatsData {
 public:
  /// verified_t is taken from verdict(list, t0).
  explicit StatsData(const EigenvalueList& list, bool override_unverified = false,
                     double t0 = kDefaultT0);
  StatsData(std::vector<double> r, double verified_t, bool override_unverified);

  double verified_t() const { return verified_t_; }
  bool override_unverified() const { return override_; }
  const std::vector<double>& values() const { return r_; }

  /// S(t) with N counting r_j <= t, and its left limit.
  double S(double t) const;
  double S_left(double t) const;
  /// Number of r_j <= t.
  std::size_t count(double t) const;

  /// Throws UnverifiedRange when b > verified_t without override, and
  /// std::invalid_argument when a starts below t_min (at 0 for t_min = 0) or b <= a.
  void require_range(double a, double b, double t_min) const;
  /// True when [a, b] extends past the verified bound (only possible with override).
  bool uses_override(double b) const { return b > verified_t_; }

 private:
  std::vector<double> r_;
  double verified_t_ = 0.0;
  bool override_ = false;
};

struct SeriesSample {
  double t = 0.0;
  double left = 0.0;   ///< limit from below
  double right = 0.0;  ///< value at t; differs from left only at eigenvalues
};

struct ScaledSeries {
  SeriesKind kind = SeriesKind::raw;
  double sigma = 1.0;  ///< divisor of the clt series, 1 otherwise
  std::vector<SeriesSample> samples;
  std::string policy;  ///< human-readable description of the sampling
};

/// Samples at a, b, every eigenvalue inside (a, b) and `density` evenly
/// spaced interior points of each gap between those breakpoints.
ScaledSeries sample_series(SeriesKind kind, const StatsData& data, double a, double b,
                           int density = 1, double sigma = 1.0);

/// Scaling applied to S(t) by each kind (absolute value and sigma excluded).
double series_weight(SeriesKind kind, double t);

struct WindowMoments {
  double a = 0.0;
  double b = 0.0;
  double mu = 0.0;     ///< (1/(b-a)) int w S with w = log log t / sqrt t
  double sigma = 0.0;  ///< root mean square deviation of w S from mu
};

/// Piecewise-exact moments of (log log t / sqrt t) S(t) over [a, b].
WindowMoments window_moments(const StatsData& data, double a, double b);

/// Windows [c - half_width, c + half_width] for each centre.
std::vector<WindowMoments> window_sweep(const StatsData& data, std::span<const double> centres,
                                        double half_width);

inline constexpr double kReferenceSigma = 0.140;

struct HistogramBin {
  double centre = 0.0;
  double density = 0.0;   ///< time-averaged occupation density
  double gaussian = 0.0;  ///< standard normal density at the centre
};

/// Occupation-measure histogram of (log log t / sqrt t) S(t) / sigma_hat on
/// [a, b], with `bins` equal bins spanning a symmetric interval that covers
/// every value taken. Throws std::invalid_argument for bins < 10.
std::vector<HistogramBin> histogram_clt(const StatsData& data, double a, double b, int bins,
                                        double sigma_hat);

struct LilPoint {
  double t = 0.0;
  double running_sup = 0.0;
  double ratio = 0.0;  ///< running_sup / sigma_hat
};

/// Running supremum of (log log t / (2t))^(1/2) |S(t)| over [a, t], reported
/// at every eigenvalue in range and at b.
std::vector<LilPoint> lil_extremes(const StatsData& data, double a, double b, double sigma_hat);

}  // namespace maass

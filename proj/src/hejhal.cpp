#include "maass/hejhal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace maass {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double basis(Symmetry s, int n, double x) {
  const double arg = kTwoPi * n * x;
  return s == Symmetry::even ? std::cos(arg) : std::sin(arg);
}

}  // namespace

std::string_view to_string(Symmetry s) { return s == Symmetry::even ? "even" : "odd"; }

Symmetry parse_symmetry(std::string_view text) {
  if (text == "even") return Symmetry::even;
  if (text == "odd") return Symmetry::odd;
  throw std::invalid_argument("unknown symmetry '" + std::string(text) + "'");
}

int coefficient_count(double r, const HejhalOptions& opt) {
  return truncation_M(r, kY0, opt.epsilon, opt.truncation).M;
}

double default_height(double r, const HejhalOptions& opt) {
  // Put row M0 a little past the turning point 2 pi m y = r, where kappa has
  // decayed by roughly e^-4 from its oscillatory amplitude.
  r = std::abs(r);
  const double x_row = r + 3.0 * std::cbrt(std::max(r, 1.0));
  const double y = x_row / (kTwoPi * coefficient_count(r, opt));
  return std::clamp(y, 0.05, 0.8 * kY0);
}

std::vector<double> verification_heights(double primary) {
  return {0.87 * primary, 0.93 * primary, 0.81 * primary};
}

int sample_count(int terms, int rows) { return (terms + rows) / 2 + 2; }

std::vector<int> retained_rows(const BesselKir& kappa, double y, int Mrows, double row_floor) {
  const double sy = std::sqrt(y);
  std::vector<double> scale(Mrows);
  double biggest = 0.0;
  for (int m = 1; m <= Mrows; ++m) {
    scale[m - 1] = std::abs(sy * kappa(kTwoPi * m * y));
    biggest = std::max(biggest, scale[m - 1]);
  }
  std::vector<int> rows;
  for (int m = 1; m <= Mrows; ++m) {
    if (scale[m - 1] >= row_floor * biggest) rows.push_back(m);
  }
  return rows;
}

HejhalSystem build_system(double r, Symmetry symmetry, const HorocycleSample& sample, int M0,
                          int Mrows, const HejhalOptions& opt) {
  if (sample.y >= kY0) {
    throw std::invalid_argument("build_system: horocycle above fundamental-domain floor");
  }
  if (M0 < 1 || Mrows < M0) throw std::invalid_argument("build_system: need Mrows >= M0 >= 1");
  const std::vector<int> rows = retained_rows(BesselKir(r), sample.y, Mrows, opt.row_floor);
  if (static_cast<int>(rows.size()) < M0) {
    throw std::runtime_error("horocycle height unusable at this r");
  }
  return build_system(r, symmetry, sample, M0, rows);
}

HejhalSystem build_system(double r, Symmetry symmetry, const HorocycleSample& sample, int M0,
                          std::span<const int> rows) {
  if (sample.y >= kY0) {
    throw std::invalid_argument("build_system: horocycle above fundamental-domain floor");
  }
  if (M0 < 1 || static_cast<int>(rows.size()) < M0) {
    throw std::invalid_argument("build_system: need at least M0 >= 1 rows");
  }
  const BesselKir kappa(r);
  const double y = sample.y;
  const double sy = std::sqrt(y);

  HejhalSystem sys;
  sys.r = std::abs(r);
  sys.symmetry = symmetry;
  sys.sample = sample;
  sys.M0 = M0;
  sys.My = rows.back();
  sys.rows.assign(rows.begin(), rows.end());

  // W(j, n) = sqrt(y_j*) kappa(r, 2 pi n y_j*) cs(2 pi n x_j*)
  const int Q = sample.Q;
  Eigen::MatrixXd W(Q, M0);
  for (int j = 0; j < Q; ++j) {
    const Point& p = sample.pullbacks[j];
    const double spy = std::sqrt(p.y);
    for (int n = 1; n <= M0; ++n) {
      W(j, n - 1) = spy * kappa(kTwoPi * n * p.y) * basis(symmetry, n, p.x);
    }
  }
  const int R = static_cast<int>(sys.rows.size());
  Eigen::MatrixXd B(R, Q);
  for (int i = 0; i < R; ++i) {
    for (int j = 0; j < Q; ++j) B(i, j) = basis(symmetry, sys.rows[i], sample.points[j].x);
  }
  sys.V = (2.0 / Q) * (B * W);
  sys.row_scale.resize(R);
  sys.C.resize(R, M0);
  for (int i = 0; i < R; ++i) {
    const int m = sys.rows[i];
    const double scale = sy * kappa(kTwoPi * m * y);
    sys.row_scale(i) = scale;
    for (int n = 1; n <= M0; ++n) {
      sys.C(i, n - 1) = (m == n ? 1.0 : 0.0) - sys.V(i, n - 1) / scale;
    }
  }
  return sys;
}

HejhalSystem build_system(double r, Symmetry symmetry, double y, const HejhalOptions& opt) {
  const int M0 = coefficient_count(r, opt);
  const int My = truncation_M(r, y, opt.epsilon, opt.truncation).M;
  const int Mrows = std::max(M0, std::min(My, M0 + opt.extra_rows));
  const HorocycleSample sample = sample_horocycle(y, sample_count(My, Mrows));
  return build_system(r, symmetry, sample, M0, Mrows, opt);
}

int row_count(double r, double y, const HejhalOptions& opt) {
  const int M0 = coefficient_count(r, opt);
  const int My = truncation_M(r, y, opt.epsilon, opt.truncation).M;
  return std::max(M0, std::min(My, M0 + opt.extra_rows));
}

CuspFormCandidate phase1_solve(const HejhalSystem& system) {
  const int M0 = system.M0;
  CuspFormCandidate cand;
  cand.symmetry = system.symmetry;
  cand.r = system.r;
  cand.coefficients.assign(M0, 0.0);
  cand.coefficients[0] = 1.0;
  if (M0 > 1) {
    const Eigen::MatrixXd A = system.C.rightCols(M0 - 1);
    const Eigen::VectorXd rhs = -system.C.col(0);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-13);
    if (qr.rank() < M0 - 1) throw std::runtime_error("degenerate system - change y");
    const Eigen::VectorXd sol = qr.solve(rhs);
    for (int n = 1; n < M0; ++n) cand.coefficients[n] = sol(n - 1);
  }
  cand.residual_phase1 = system_residual(system, cand.coefficients);
  return cand;
}

double system_residual(const HejhalSystem& system, std::span<const double> coefficients) {
  if (static_cast<int>(coefficients.size()) < system.M0) {
    throw std::invalid_argument("system_residual: too few coefficients");
  }
  const Eigen::Map<const Eigen::VectorXd> a(coefficients.data(), system.M0);
  return (system.C * a).cwiseAbs().maxCoeff();
}

double y_independence_check(const CuspFormCandidate& candidate, std::span<const double> heights,
                            const HejhalOptions& opt) {
  double worst = 0.0;
  for (double y : heights) {
    // A height whose rows straddle a zero of kappa is nudged downwards; the
    // check needs some fresh height near y, not that exact one.
    for (int attempt = 0;; ++attempt) {
      try {
        HejhalSystem sys = build_system(candidate.r, candidate.symmetry, y, opt);
        worst = std::max(worst, system_residual(sys, candidate.coefficients));
        break;
      } catch (const std::runtime_error&) {
        if (attempt >= 5) throw;
        y *= 0.985;
      }
    }
  }
  return worst;
}

std::vector<ExtendedCoefficient> phase2_extend(const CuspFormCandidate& candidate, double y,
                                               int m_max, const HejhalOptions& opt) {
  const int M0 = coefficient_count(candidate.r, opt);
  if (m_max <= M0) return {};
  if (static_cast<int>(candidate.coefficients.size()) < M0) {
    throw std::invalid_argument("phase2_extend: candidate has fewer than M0 coefficients");
  }
  const int My = truncation_M(candidate.r, y, opt.epsilon, opt.truncation).M;
  if (My < m_max) {
    throw std::invalid_argument("phase2_extend: m_max exceeds the truncation bound at this "
                                "height; use a smaller y");
  }
  const HorocycleSample sample = sample_horocycle(y, sample_count(My, m_max));
  const BesselKir kappa(candidate.r);
  const Symmetry s = candidate.symmetry;
  const int Q = sample.Q;

  // f(z_j*) from the known coefficients; the pullbacks sit at height >= Y0.
  std::vector<double> fstar(Q, 0.0);
  for (int j = 0; j < Q; ++j) {
    const Point& p = sample.pullbacks[j];
    const double spy = std::sqrt(p.y);
    double acc = 0.0;
    for (int n = 1; n <= M0; ++n) {
      acc += candidate.coefficients[n - 1] * spy * kappa(kTwoPi * n * p.y) * basis(s, n, p.x);
    }
    fstar[j] = acc;
  }
  const double sy = std::sqrt(y);
  std::vector<ExtendedCoefficient> out;
  out.reserve(m_max - M0);
  for (int m = M0 + 1; m <= m_max; ++m) {
    double v = 0.0;
    for (int j = 0; j < Q; ++j) v += fstar[j] * basis(s, m, sample.points[j].x);
    v *= 2.0 / Q;
    const double denom = sy * kappa(kTwoPi * m * y);
    ExtendedCoefficient c;
    c.m = m;
    c.value = denom != 0.0 ? v / denom : 0.0;
    c.error_bound = denom != 0.0 ? 2.0 * opt.epsilon / std::abs(denom)
                                 : std::numeric_limits<double>::infinity();
    out.push_back(c);
  }
  return out;
}

std::vector<ExtendedCoefficient> extend_coefficients(CuspFormCandidate& candidate, int m_max,
                                                     const HejhalOptions& opt) {
  const int M0 = coefficient_count(candidate.r, opt);
  candidate.coefficients.resize(std::max(M0, static_cast<int>(candidate.coefficients.size())));
  if (m_max <= M0) {
    candidate.coefficients.resize(std::max(M0, m_max));
    return {};
  }
  // Highest height at which M(y) still covers m_max. There the top
  // coefficients sit deep in the decay of kappa and are poorly resolved, so
  // a geometric ladder of heights runs down until m_max reaches the turning
  // point 2 pi m y ~ r; each a_m is taken where its error bound is smallest.
  const double x_cut = candidate.r + opt.truncation.A * std::log(1.0 / opt.epsilon) +
                       opt.truncation.B;
  const double y_top = std::min(0.95 * kY0, x_cut / (kTwoPi * m_max));
  const double y_low = (candidate.r + 2.0 * std::cbrt(std::max(candidate.r, 1.0))) / (kTwoPi * m_max);
  candidate.coefficients.resize(M0);
  std::vector<ExtendedCoefficient> best;
  for (double y = 0.999 * y_top; y >= 0.8 * y_low; y *= 0.85) {
    for (double f : {1.0, 0.96}) {
      const auto trial = phase2_extend(candidate, f * y, m_max, opt);
      if (best.empty()) {
        best = trial;
        continue;
      }
      for (std::size_t i = 0; i < trial.size(); ++i) {
        if (trial[i].error_bound < best[i].error_bound) best[i] = trial[i];
      }
    }
  }
  for (const auto& c : best) candidate.coefficients.push_back(c.value);
  return best;
}

double evaluation_floor(const CuspFormCandidate& candidate, const HejhalOptions& opt) {
  const int N = static_cast<int>(candidate.coefficients.size());
  const double x_cut = candidate.r + opt.truncation.A * std::log(1.0 / opt.epsilon) +
                       opt.truncation.B;
  return x_cut / (kTwoPi * N);
}

double evaluate_form(const CuspFormCandidate& candidate, const Point& z, const HejhalOptions& opt) {
  if (!(z.y > 0.0)) throw std::domain_error("evaluate_form: point must lie in the upper half-plane");
  if (z.y < evaluation_floor(candidate, opt) * (1.0 - 1e-12)) {
    throw std::domain_error("evaluate_form: point below the evaluation floor; pull back first");
  }
  const BesselKir kappa(candidate.r);
  const double sy = std::sqrt(z.y);
  double acc = 0.0;
  const int N = static_cast<int>(candidate.coefficients.size());
  for (int n = 1; n <= N; ++n) {
    const auto k = kappa.evaluate(kTwoPi * n * z.y);
    if (k.underflow) break;
    acc += candidate.coefficients[n - 1] * sy * k.value * basis(candidate.symmetry, n, z.x);
  }
  return acc;
}

double automorphy_residual(const CuspFormCandidate& candidate, std::span<const Point> points,
                           const HejhalOptions& opt) {
  double worst = 0.0;
  for (const Point& z : points) {
    const Point zs = pullback_modular(z).point;
    worst = std::max(worst, std::abs(evaluate_form(candidate, z, opt) -
                                     evaluate_form(candidate, zs, opt)));
  }
  return worst;
}

}  // namespace maass

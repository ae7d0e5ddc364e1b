#include "maass/besselk.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace maass {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = std::numbers::egamma;
// log(DBL_MIN); anything smaller is reported as underflow.
const double kLogMinNormal = std::log(std::numeric_limits<double>::min());

// (sinh u - u cosh u) / sinh(u)^2, odd in u, ~ -u/3 near 0.
double shape_derivative(double u) {
  if (std::abs(u) < 0.1) {
    // derivative of 1 - u^2/6 + 7u^4/360 - 31u^6/15120 + 127u^8/604800
    const double u2 = u * u;
    return u * (-1.0 / 3.0 + u2 * (7.0 / 90.0 + u2 * (-31.0 / 2520.0 + u2 * (127.0 / 75600.0))));
  }
  const double sh = std::sinh(u);
  return (sh - u * std::cosh(u)) / (sh * sh);
}

// u / sinh(u), even, 1 at 0.
double shape(double u) {
  if (std::abs(u) < 1e-8) return 1.0 - u * u / 6.0;
  return u / std::sinh(u);
}

// Steepest-descent path t = u + i sigma(u) with sin(sigma) = -g(u),
// g(u) = (r/x) u / sinh u. On it Im(-x cosh t - i r t) = 0 and the
// rescaled integrand is exp(E(u)).
struct SteepestPath {
  double r;
  double x;

  double g(double u) const { return (r / x) * shape(u); }

  double exponent(double u) const {
    const double gu = g(u);
    const double s = std::sqrt((1.0 - gu) * (1.0 + gu));
    return r * std::acos(gu) - x * std::cosh(u) * s;
  }

  // Re[cosh(t) dt/du] along the path.
  double derivative_weight(double u) const {
    const double gu = g(u);
    const double s = std::sqrt((1.0 - gu) * (1.0 + gu));
    const double gp = (r / x) * shape_derivative(u);
    return std::cosh(u) * s - std::sinh(u) * gu * gp / s;
  }
};

}  // namespace

// Stirling series after shifting the argument up by 16. Long double keeps the
// absolute phase error near 1e-16 even when the phase itself is ~1e4, which
// matters because the series regime takes the sine of it.
long double arg_gamma_extended(long double r) {
  constexpr int kShift = 16;
  const long double a = kShift + 1.0L;
  const std::complex<long double> z(a, r);
  long double im = r * std::log(std::hypot(a, r)) + (a - 0.5L) * std::atan2(r, a) - r;
  static constexpr long double kCoef[] = {1.0L / 12.0L,    -1.0L / 360.0L,       1.0L / 1260.0L,
                                          -1.0L / 1680.0L, 1.0L / 1188.0L,       -691.0L / 360360.0L,
                                          1.0L / 156.0L,   -3617.0L / 122400.0L};
  const std::complex<long double> zinv = 1.0L / z;
  const std::complex<long double> zinv2 = zinv * zinv;
  std::complex<long double> p = zinv;
  for (long double c : kCoef) {
    im += c * p.imag();
    p *= zinv2;
  }
  for (int j = 1; j <= kShift; ++j) im -= std::atan2(r, static_cast<long double>(j));
  return im;
}

double arg_gamma_one_plus_ir(double r) { return static_cast<double>(arg_gamma_extended(r)); }

BesselKir::BesselKir(double r) : r_(std::abs(r)) {
  if (!std::isfinite(r)) throw std::domain_error("BesselKir: order must be finite");
  const double rr = std::max(r_, 1.0);
  x_exp_ = r_ + 2.0 * std::cbrt(rr);
  x_series_ = std::min(std::sqrt(12.0 * rr), x_exp_);
  if (r_ > 0.0) {
    series_prefactor_ = -std::sqrt(kPi / r_) * std::sqrt(2.0 / -std::expm1(-2.0 * kPi * r_));
    arg_gamma_ = arg_gamma_extended(r_);
  } else {
    series_prefactor_ = 0.0;
    arg_gamma_ = 0.0;
  }
  if (x_series_ >= x_exp_) return;

  // Taylor nodes from x_exp down past x_series.
  double X = x_exp_;
  double w = exponential(X).value;
  double wp = exponential_derivative(X);
  const double r2 = r_ * r_;
  const double turning = std::pow(rr, 2.0 / 3.0);
  while (X > x_series_) {
    const double omega = (std::sqrt(std::abs(r2 - X * X)) + turning) / X;
    double h = -std::min(0.25 * X, 1.0 / omega);
    std::vector<double> c;
    for (;;) {
      c.assign({w, wp});
      const double scale = std::abs(w) + std::abs(wp * h);
      const double ah = std::abs(h);
      double hk = ah;
      int small = 0;
      bool converged = false;
      for (int k = 0; k < 120; ++k) {
        const double ck1 = c[k + 1];
        const double ck = c[k];
        const double ckm1 = k >= 1 ? c[k - 1] : 0.0;
        const double ckm2 = k >= 2 ? c[k - 2] : 0.0;
        const double next = -((k + 1.0) * X * (2.0 * k + 1.0) * ck1 +
                              (static_cast<double>(k) * k + r2 - X * X) * ck -
                              2.0 * X * ckm1 - ckm2) /
                            (X * X * (k + 1.0) * (k + 2.0));
        c.push_back(next);
        hk *= ah;  // |h|^(k+2)
        if (std::abs(next) * hk <= 1e-18 * scale) {
          if (++small >= 3) {
            converged = true;
            break;
          }
        } else {
          small = 0;
        }
      }
      if (converged) break;
      h *= 0.5;
      if (!std::isfinite(scale) || std::abs(h) < 1e-12 * X) {
        throw std::runtime_error("BesselKir: Taylor integration failed to converge");
      }
    }
    double nw = 0.0;
    double nwp = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) {
      nw = nw * h + c[k];
      if (k > 0) nwp = nwp * h + static_cast<double>(k) * c[k];
    }
    nodes_.push_back({X, std::move(c)});
    w = nw;
    wp = nwp;
    X += h;
  }
  nodes_.push_back({X, {w, wp}});  // terminal node, only used for bracketing
}

ScaledBesselK BesselKir::evaluate(double x) const {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("besselk_ir_scaled: argument must be positive and finite");
  }
  if (x >= x_exp_) return exponential(x);
  if (x <= x_series_) return series(x);
  return {ode(x, nullptr), false};
}

double BesselKir::derivative(double x) const {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("BesselKir::derivative: argument must be positive and finite");
  }
  if (x >= x_exp_) return exponential_derivative(x);
  if (x > x_series_) {
    double d = 0.0;
    ode(x, &d);
    return d;
  }
  // Series regime: central difference is adequate for diagnostics.
  const double h = 1e-5 * x;
  return (series(x + h).value - series(x - h).value) / (2.0 * h);
}

ScaledBesselK BesselKir::series(double x) const {
  const double q = 0.25 * x * x;
  if (r_ == 0.0) {
    // K_0(x) = -(ln(x/2) + gamma) I_0(x) + sum (x^2/4)^k / (k!)^2 H_k
    double term = 1.0;
    double i0 = 1.0;
    double hsum = 0.0;
    double harmonic = 0.0;
    for (int k = 1; k < 200; ++k) {
      term *= q / (static_cast<double>(k) * k);
      harmonic += 1.0 / k;
      i0 += term;
      hsum += term * harmonic;
      if (term < 1e-18 * i0) break;
    }
    return {-(std::log(0.5 * x) + kEulerGamma) * i0 + hsum, false};
  }
  const long double rl = r_;
  long double theta = rl * std::log(0.5L * x) - arg_gamma_;
  double t = 1.0;
  double sum = static_cast<double>(std::sin(theta));
  double total = 1.0;
  for (int k = 1; k < 2000; ++k) {
    const double ratio = q / (k * std::hypot(static_cast<double>(k), r_));
    t *= ratio;
    theta -= std::atan2(rl, static_cast<long double>(k));
    sum += t * static_cast<double>(std::sin(theta));
    total += t;
    if (ratio < 0.5 && t < 1e-18 * total) break;
  }
  return {series_prefactor_ * sum, false};
}

ScaledBesselK BesselKir::exponential(double x) const {
  const SteepestPath path{r_, x};
  const double e0 = path.exponent(0.0);
  double upper = 0.25;
  while (path.exponent(upper) - e0 > -42.0) upper += 0.25;

  auto f = [&](double u) { return std::exp(path.exponent(u) - e0); };
  int n = 32;
  double h = upper / n;
  double sum = 0.5 * f(0.0);
  for (int k = 1; k <= n; ++k) sum += f(k * h);
  double estimate = sum * h;
  for (int level = 0; level < 12; ++level) {
    for (int k = 1; k < 2 * n; k += 2) sum += f(k * 0.5 * h);
    n *= 2;
    h *= 0.5;
    const double refined = sum * h;
    const bool done = level >= 1 && std::abs(refined - estimate) <= 1e-12 * std::abs(refined);
    estimate = refined;
    if (done) break;
  }
  const double log_value = e0 + std::log(estimate);
  if (log_value < kLogMinNormal) return {0.0, true};
  return {std::exp(log_value), false};
}

double BesselKir::exponential_derivative(double x) const {
  const SteepestPath path{r_, x};
  const double e0 = path.exponent(0.0);
  double upper = 0.25;
  while (path.exponent(upper) - e0 > -42.0) upper += 0.25;

  auto f = [&](double u) { return std::exp(path.exponent(u) - e0) * path.derivative_weight(u); };
  int n = 32;
  double h = upper / n;
  double sum = 0.5 * f(0.0);
  for (int k = 1; k <= n; ++k) sum += f(k * h);
  double estimate = sum * h;
  for (int level = 0; level < 12; ++level) {
    for (int k = 1; k < 2 * n; k += 2) sum += f(k * 0.5 * h);
    n *= 2;
    h *= 0.5;
    const double refined = sum * h;
    const bool done = level >= 1 && std::abs(refined - estimate) <= 1e-12 * std::abs(refined);
    estimate = refined;
    if (done) break;
  }
  const double log_value = e0 + std::log(std::abs(estimate));
  if (log_value < kLogMinNormal) return 0.0;
  return -std::copysign(std::exp(log_value), estimate);
}

double BesselKir::ode(double x, double* deriv) const {
  // nodes_ is descending in x; find the last node with node.x >= x.
  auto it = std::partition_point(nodes_.begin(), nodes_.end(),
                                 [x](const Node& n) { return n.x >= x; });
  const Node& node = *std::prev(it);
  const double h = x - node.x;
  const auto& c = node.taylor;
  double w = 0.0;
  double wp = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) {
    w = w * h + c[k];
    if (deriv != nullptr && k > 0) wp = wp * h + static_cast<double>(k) * c[k];
  }
  if (deriv != nullptr) *deriv = wp;
  return w;
}

double besselk_ir_scaled(double r, double x) { return BesselKir(r).evaluate(x).value; }

TruncationBound truncation_M(double r, double y, double epsilon, const TruncationModel& model) {
  if (!(y > 0.0) || !(epsilon > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("truncation_M: need y > 0, epsilon > 0, finite r");
  }
  const double x_cut = std::abs(r) + model.A * std::log(1.0 / epsilon) + model.B;
  const double m = std::ceil(std::max(x_cut, 0.0) / (2.0 * kPi * y));
  if (m > model.hard_cap) {
    throw std::runtime_error("truncation_M: required expansion length exceeds hard cap");
  }
  return {std::max(1, static_cast<int>(m)), epsilon, y};
}

}  // namespace maass

#pragma once

// K-Bessel function of imaginary order, K_{ir}(x), for real r and x > 0.
//
// Values are returned rescaled as kappa(r, x) = exp(pi r / 2) K_{ir}(x).
// Without the factor, K_{ir}(x) ~ exp(-pi r / 2) underflows for r beyond
// about 1450; every ratio formed downstream is unaffected by it.

#include <vector>

namespace maass {

struct ScaledBesselK {
  double value = 0.0;
  bool underflow = false;  ///< true when the value is below the double range
};

/// Evaluator for a fixed order ir.
///
/// Three regimes are used:
///  - x <= series_limit(): ascending series of I_{ir} combined through
///    K = -pi Im I_{ir} / sinh(pi r);
///  - x >= exponential_limit() = r + 2 max(r,1)^{1/3}: trapezoidal rule on
///    the steepest-descent path of the integral (1/2) int exp(-x cosh t - irt) dt;
///  - in between: Taylor-series integration of the Bessel equation
///    x^2 w'' + x w' + (r^2 - x^2) w = 0, started from the exponential
///    regime and run towards x = 0, which is the stable direction for K.
///
/// The Taylor nodes are built once in the constructor; the object is
/// immutable afterwards and safe to share between threads.
class BesselKir {
 public:
  /// Negative r is canonicalized to |r|.
  explicit BesselKir(double r);

  double order() const { return r_; }
  double series_limit() const { return x_series_; }
  double exponential_limit() const { return x_exp_; }

  /// Throws std::domain_error for x <= 0 or non-finite x.
  ScaledBesselK evaluate(double x) const;
  double operator()(double x) const { return evaluate(x).value; }

  /// Derivative d/dx of kappa(r, x); used by the ODE start and by tests.
  double derivative(double x) const;

 private:
  struct Node {
    double x;
    std::vector<double> taylor;  // w(x + h) = sum taylor[k] h^k
  };

  ScaledBesselK series(double x) const;
  ScaledBesselK exponential(double x) const;
  double exponential_derivative(double x) const;
  double ode(double x, double* deriv) const;

  double r_;
  double x_series_;
  double x_exp_;
  double series_prefactor_;
  long double arg_gamma_;  // arg Gamma(1 + ir)
  std::vector<Node> nodes_;  // descending in x
};

/// One-shot convenience wrapper around BesselKir.
double besselk_ir_scaled(double r, double x);

/// Imaginary part of log Gamma(1 + ir), continuous in r.
double arg_gamma_one_plus_ir(double r);

/// Constants of the truncation model M = ceil((r + A ln(1/eps) + B) / (2 pi y)).
///
/// Calibrated so that sum_{n>M} n^{3/4} sqrt(y) |kappa(r, 2 pi n y)| < eps for
/// r <= 300 and eps in [1e-12, 1e-6]; the required margin grows like r^{1/3}
/// (turning-point width), so larger r needs a larger A or B.
struct TruncationModel {
  double A = 1.6;
  double B = 16.0;
  int hard_cap = 20000;
};

struct TruncationBound {
  int M = 0;
  double epsilon = 0.0;
  double Y = 0.0;
};

/// Number of Fourier terms needed for |tail| < epsilon at heights >= y.
/// Throws std::invalid_argument on bad input and std::runtime_error when M
/// would exceed the model's hard cap.
TruncationBound truncation_M(double r, double y, double epsilon,
                             const TruncationModel& model = {});

}  // namespace maass

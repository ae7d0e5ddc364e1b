#pragma once

// Hyperbolic-plane primitives for the modular surface SL(2,Z)\H.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace maass {

/// A point z = x + iy of the upper half-plane, y > 0.
struct Point {
  double x = 0.0;
  double y = 1.0;
};

/// Integer 2x2 matrix [[a, b], [c, d]] with ad - bc = 1.
///
/// Elements of PSL(2,Z) are identified up to sign; `normalized()` returns the
/// canonical representative with c > 0, or c = 0 and a > 0.
class GroupElement {
 public:
  GroupElement() = default;
  /// Throws std::invalid_argument unless ad - bc = 1.
  GroupElement(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);

  static GroupElement identity() { return {}; }
  static GroupElement translation(std::int64_t n) { return {1, n, 0, 1}; }
  static GroupElement inversion() { return {0, -1, 1, 0}; }

  std::int64_t a() const { return a_; }
  std::int64_t b() const { return b_; }
  std::int64_t c() const { return c_; }
  std::int64_t d() const { return d_; }

  GroupElement inverse() const { return {d_, -b_, -c_, a_}; }
  GroupElement normalized() const;

  friend GroupElement operator*(const GroupElement& g, const GroupElement& h);
  /// Equality in PSL(2,Z), i.e. up to overall sign.
  friend bool operator==(const GroupElement& g, const GroupElement& h);

 private:
  std::int64_t a_ = 1, b_ = 0, c_ = 0, d_ = 1;
};

/// Linear fractional action (az + b) / (cz + d).
Point apply_moebius(const GroupElement& g, const Point& z);

double hyperbolic_distance(const Point& z1, const Point& z2);

/// Tolerance applied to fundamental-domain boundary tests.
inline constexpr double kDomainTolerance = 1e-12;

/// Lower edge of the standard fundamental domain, sqrt(3)/2.
inline constexpr double kY0 = 0.86602540378443864676;

/// |x| <= 1/2 and x^2 + y^2 >= 1, both up to kDomainTolerance.
bool in_fundamental_domain(const Point& z);

struct Pullback {
  Point point;      ///< image z* in the fundamental domain
  GroupElement map; ///< g with g . z = z*
};

/// Pullback into the Dirichlet domain centred at `centre`:
/// greedily apply the generator (or inverse) that moves z closest to the
/// centre until no generator brings it closer.
///
/// Throws std::runtime_error when the iteration cap is exceeded.
Pullback pullback_generic(const Point& z, std::span<const GroupElement> generators,
                          const Point& centre);

/// Pullback into the standard domain |x| <= 1/2, |z| >= 1 by reducing x and
/// inverting while |z| < 1.
Pullback pullback_modular(const Point& z);

/// The generators {T, S} of SL(2,Z).
std::vector<GroupElement> modular_generators();

/// Q test points on the closed horocycle at height y, restricted to the
/// half-interval x in (0, 1/2), together with their pullbacks.
struct HorocycleSample {
  double y = 0.0;
  int Q = 0;
  std::vector<Point> points;
  std::vector<Point> pullbacks;
  std::vector<GroupElement> maps;
};

/// Points x_j = (j - 1/2) / (2Q), j = 1..Q. Requires 0 < y < kY0 and Q >= 1.
HorocycleSample sample_horocycle(double y, int Q);

}  // namespace maass

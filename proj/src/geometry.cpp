#include "maass/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace maass {

GroupElement::GroupElement(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d)
    : a_(a), b_(b), c_(c), d_(d) {
  if (a * d - b * c != 1) {
    throw std::invalid_argument("GroupElement: determinant must be 1");
  }
}

GroupElement GroupElement::normalized() const {
  if (c_ < 0 || (c_ == 0 && a_ < 0)) return {-a_, -b_, -c_, -d_};
  return *this;
}

GroupElement operator*(const GroupElement& g, const GroupElement& h) {
  return {g.a_ * h.a_ + g.b_ * h.c_, g.a_ * h.b_ + g.b_ * h.d_,
          g.c_ * h.a_ + g.d_ * h.c_, g.c_ * h.b_ + g.d_ * h.d_};
}

bool operator==(const GroupElement& g, const GroupElement& h) {
  const GroupElement p = g.normalized();
  const GroupElement q = h.normalized();
  return p.a_ == q.a_ && p.b_ == q.b_ && p.c_ == q.c_ && p.d_ == q.d_;
}

Point apply_moebius(const GroupElement& g, const Point& z) {
  const double a = static_cast<double>(g.a());
  const double b = static_cast<double>(g.b());
  const double c = static_cast<double>(g.c());
  const double d = static_cast<double>(g.d());
  // cz + d = u + iv
  const double u = c * z.x + d;
  const double v = c * z.y;
  const double den = u * u + v * v;
  // (az + b)(conj(cz + d)) = ((a x + b) + i a y)(u - i v)
  const double p = a * z.x + b;
  const double q = a * z.y;
  return {(p * u + q * v) / den, z.y / den};
}

double hyperbolic_distance(const Point& z1, const Point& z2) {
  const double dx = z1.x - z2.x;
  const double dy = z1.y - z2.y;
  return 2.0 * std::asinh(std::hypot(dx, dy) / (2.0 * std::sqrt(z1.y * z2.y)));
}

bool in_fundamental_domain(const Point& z) {
  return std::abs(z.x) <= 0.5 + kDomainTolerance &&
         z.x * z.x + z.y * z.y >= 1.0 - kDomainTolerance;
}

namespace {

int iteration_cap(double y) {
  return 10 + static_cast<int>(std::ceil(std::abs(std::log2(y)))) * 64;
}

void require_height(const Point& z) {
  if (!(z.y > 0.0) || !std::isfinite(z.x) || !std::isfinite(z.y)) {
    throw std::invalid_argument("point must lie in the upper half-plane");
  }
}

}  // namespace

Pullback pullback_generic(const Point& z, std::span<const GroupElement> generators,
                          const Point& centre) {
  require_height(z);
  // Each translation step moves x by one; after an inversion |x| can reach
  // 1/(2y), so the cap carries an extra 1/y allowance on top of the
  // logarithmic budget used by pullback_modular.
  const long cap = iteration_cap(z.y) + static_cast<long>(std::ceil(1.0 / z.y));

  std::vector<GroupElement> moves;
  moves.reserve(2 * generators.size());
  for (const auto& g : generators) {
    moves.push_back(g);
    moves.push_back(g.inverse());
  }

  GroupElement acc;
  Point current = z;
  double dist = hyperbolic_distance(centre, current);
  for (long iter = 0; iter < cap; ++iter) {
    const GroupElement* best = nullptr;
    Point best_point;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& g : moves) {
      const Point cand = apply_moebius(g * acc, z);
      const double d = hyperbolic_distance(centre, cand);
      if (d < best_dist) {
        best_dist = d;
        best = &g;
        best_point = cand;
      }
    }
    if (best == nullptr || !(best_dist < dist - kDomainTolerance)) {
      return {current, acc.normalized()};
    }
    acc = *best * acc;
    current = best_point;
    dist = best_dist;
  }
  throw std::runtime_error("pullback_generic: iteration cap exceeded (invalid generators or "
                           "degenerate input)");
}

Pullback pullback_modular(const Point& z) {
  require_height(z);
  const int cap = iteration_cap(z.y);
  GroupElement acc;
  Point current = z;
  for (int iter = 0; iter < cap; ++iter) {
    const double shift = std::round(current.x);
    if (shift != 0.0) {
      acc = GroupElement::translation(-static_cast<std::int64_t>(shift)) * acc;
      current = apply_moebius(acc, z);
    }
    if (current.x * current.x + current.y * current.y >= 1.0 - kDomainTolerance) {
      return {current, acc.normalized()};
    }
    acc = GroupElement::inversion() * acc;
    current = apply_moebius(acc, z);
  }
  throw std::runtime_error("pullback_modular: iteration cap exceeded");
}

std::vector<GroupElement> modular_generators() {
  return {GroupElement::translation(1), GroupElement::inversion()};
}

HorocycleSample sample_horocycle(double y, int Q) {
  if (!(y > 0.0)) throw std::invalid_argument("sample_horocycle: height must be positive");
  if (y >= kY0) {
    throw std::invalid_argument("sample_horocycle: horocycle above fundamental-domain floor");
  }
  if (Q < 1) throw std::invalid_argument("sample_horocycle: Q must be positive");
  HorocycleSample s;
  s.y = y;
  s.Q = Q;
  s.points.reserve(Q);
  s.pullbacks.reserve(Q);
  s.maps.reserve(Q);
  for (int j = 1; j <= Q; ++j) {
    const Point z{(j - 0.5) / (2.0 * Q), y};
    const Pullback pb = pullback_modular(z);
    s.points.push_back(z);
    s.pullbacks.push_back(pb.point);
    s.maps.push_back(pb.map);
  }
  return s;
}

}  // namespace maass

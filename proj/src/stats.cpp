#include "maass/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace maass {

namespace {

struct Piece {
  double p, q;
  double k;  // N on the open interval (p, q)
};

// Pieces are short and the integrands smooth, so one or two levels reach
// roundoff. The depth cap matters for integrals near zero, where a relative
// tolerance can never be met.
double integrate(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 8, 1e-12);
}

double loglog(double t) { return std::log(std::log(t)); }

// w(t) = log log t / sqrt t and its derivative
double clt_weight(double t) { return loglog(t) / std::sqrt(t); }
double clt_weight_prime(double t) {
  return (1.0 / std::log(t) - 0.5 * loglog(t)) / (t * std::sqrt(t));
}

double weyl_prime(double t) {
  return t / 6.0 - (2.0 / std::numbers::pi) *
                       (std::log(t / (std::numbers::e * std::sqrt(std::numbers::pi / 2.0))) + 1.0);
}

// Zeros of a smooth derivative on [p, q], found by sign changes on a
// uniform sample and then bisection.
std::vector<double> critical_points(const std::function<double(double)>& dfdt, double p, double q) {
  constexpr int kSamples = 16;
  std::vector<double> out;
  double x0 = p, d0 = dfdt(p);
  for (int i = 1; i <= kSamples; ++i) {
    const double x1 = p + (q - p) * i / kSamples;
    const double d1 = dfdt(x1);
    if ((d0 < 0.0) != (d1 < 0.0) && d0 != 0.0 && d1 != 0.0) {
      double lo = x0, hi = x1;
      for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((dfdt(mid) < 0.0) == (d0 < 0.0) ? lo : hi) = mid;
      }
      out.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    d0 = d1;
  }
  return out;
}

std::vector<Piece> pieces(const StatsData& data, double a, double b) {
  const auto& r = data.values();
  std::vector<Piece> out;
  double p = a;
  auto it = std::upper_bound(r.begin(), r.end(), a);
  for (; it != r.end() && *it < b; ++it) {
    out.push_back({p, *it, static_cast<double>(data.count(p))});
    p = *it;
  }
  out.push_back({p, b, static_cast<double>(data.count(p))});
  return out;
}

double scaled(SeriesKind kind, double t, double S, double sigma) {
  switch (kind) {
    case SeriesKind::raw:
      return S;
    case SeriesKind::clt:
      return series_weight(kind, t) * S / sigma;
    default:
      return series_weight(kind, t) * std::abs(S);
  }
}

}  // namespace

std::string_view to_string(SeriesKind k) {
  switch (k) {
    case SeriesKind::raw: return "raw";
    case SeriesKind::li_sarnak: return "li_sarnak";
    case SeriesKind::sqrt_scaled: return "sqrt";
    case SeriesKind::clt: return "clt";
    case SeriesKind::lil: return "lil";
  }
  return "?";
}

SeriesKind parse_series_kind(std::string_view text) {
  for (SeriesKind k : {SeriesKind::raw, SeriesKind::li_sarnak, SeriesKind::sqrt_scaled,
                       SeriesKind::clt, SeriesKind::lil}) {
    if (text == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown series kind: " + std::string(text));
}

double series_t_min(SeriesKind k) {
  // log log t is meaningless below e and erratic for a while after; the
  // scaled series start at 15.
  switch (k) {
    case SeriesKind::raw:
    case SeriesKind::sqrt_scaled:
      return 0.0;
    default:
      return 15.0;
  }
}

double series_weight(SeriesKind kind, double t) {
  switch (kind) {
    case SeriesKind::raw:
      return 1.0;
    case SeriesKind::li_sarnak:
      return std::log(t) / std::sqrt(t) * std::exp(-0.5 * std::pow(loglog(t), 5.0 / 17.0));
    case SeriesKind::sqrt_scaled:
      return 1.0 / std::sqrt(t);
    case SeriesKind::clt:
      return clt_weight(t);
    case SeriesKind::lil:
      return std::sqrt(loglog(t) / (2.0 * t));
  }
  return 1.0;
}

StatsData::StatsData(const EigenvalueList& list, bool override_unverified, double t0)
    : override_(override_unverified) {
  for (const auto& e : list.entries) r_.push_back(e.r);
  std::sort(r_.begin(), r_.end());
  verified_t_ = verdict(list, t0).t;
}

StatsData::StatsData(std::vector<double> r, double verified_t, bool override_unverified)
    : r_(std::move(r)), verified_t_(verified_t), override_(override_unverified) {
  std::sort(r_.begin(), r_.end());
}

std::size_t StatsData::count(double t) const {
  return static_cast<std::size_t>(std::upper_bound(r_.begin(), r_.end(), t) - r_.begin());
}

double StatsData::S(double t) const { return static_cast<double>(count(t)) - weyl_main_term(t); }

double StatsData::S_left(double t) const {
  const auto k = std::lower_bound(r_.begin(), r_.end(), t) - r_.begin();
  return static_cast<double>(k) - weyl_main_term(t);
}

void StatsData::require_range(double a, double b, double t_min) const {
  if (!(b > a)) throw std::invalid_argument("statistics: empty range");
  if (t_min == 0.0 ? !(a > 0.0) : !(a >= t_min)) {
    std::ostringstream s;
    s << "statistics: range must start " << (t_min == 0.0 ? "above" : "at or above") << " t = " << t_min;
    throw std::invalid_argument(s.str());
  }
  if (b > verified_t_ && !override_) {
    std::ostringstream s;
    s << "statistics: range up to " << b << " exceeds the verified bound t = " << verified_t_
      << " (override required)";
    throw UnverifiedRange(s.str());
  }
}

ScaledSeries sample_series(SeriesKind kind, const StatsData& data, double a, double b, int density,
                           double sigma) {
  data.require_range(a, b, series_t_min(kind));
  if (density < 1) throw std::invalid_argument("sample_series: density must be >= 1");
  if (kind == SeriesKind::clt && !(sigma > 0.0)) throw std::invalid_argument("sample_series: sigma must be positive");
  ScaledSeries out;
  out.kind = kind;
  out.sigma = kind == SeriesKind::clt ? sigma : 1.0;
  auto at = [&](double t) {
    return SeriesSample{t, scaled(kind, t, data.S_left(t), out.sigma),
                        scaled(kind, t, data.S(t), out.sigma)};
  };
  for (const Piece& pc : pieces(data, a, b)) {
    out.samples.push_back(at(pc.p));
    for (int i = 1; i <= density; ++i) {
      out.samples.push_back(at(pc.p + (pc.q - pc.p) * i / (density + 1)));
    }
  }
  out.samples.push_back(at(b));
  std::ostringstream s;
  s << "breakpoints at every eigenvalue in range plus " << density << " interior point(s) per gap";
  out.policy = s.str();
  return out;
}

WindowMoments window_moments(const StatsData& data, double a, double b) {
  data.require_range(a, b, series_t_min(SeriesKind::clt));
  const auto ps = pieces(data, a, b);
  double first = 0.0;
  for (const Piece& pc : ps) {
    first += integrate([&](double t) { return clt_weight(t) * (pc.k - weyl_main_term(t)); }, pc.p,
                       pc.q);
  }
  const double mu = first / (b - a);
  double second = 0.0;
  for (const Piece& pc : ps) {
    second += integrate(
        [&](double t) {
          const double d = clt_weight(t) * (pc.k - weyl_main_term(t)) - mu;
          return d * d;
        },
        pc.p, pc.q);
  }
  return {a, b, mu, std::sqrt(std::max(0.0, second / (b - a)))};
}

std::vector<WindowMoments> window_sweep(const StatsData& data, std::span<const double> centres,
                                        double half_width) {
  std::vector<WindowMoments> out;
  out.reserve(centres.size());
  for (double c : centres) out.push_back(window_moments(data, c - half_width, c + half_width));
  return out;
}

std::vector<HistogramBin> histogram_clt(const StatsData& data, double a, double b, int bins,
                                        double sigma_hat) {
  data.require_range(a, b, series_t_min(SeriesKind::clt));
  if (bins < 10) throw std::invalid_argument("histogram: at least 10 bins required");
  if (!(sigma_hat > 0.0)) throw std::invalid_argument("histogram: sigma must be positive");

  // Split every piece into stretches where u is monotone.
  struct Segment {
    double s0, s1, k;
  };
  std::vector<Segment> segs;
  double umax = 0.0;
  for (const Piece& pc : pieces(data, a, b)) {
    auto u = [&](double t) { return clt_weight(t) * (pc.k - weyl_main_term(t)) / sigma_hat; };
    auto du = [&](double t) {
      return clt_weight_prime(t) * (pc.k - weyl_main_term(t)) - clt_weight(t) * weyl_prime(t);
    };
    double s0 = pc.p;
    std::vector<double> cuts = critical_points(du, pc.p, pc.q);
    cuts.push_back(pc.q);
    for (double s1 : cuts) {
      segs.push_back({s0, s1, pc.k});
      umax = std::max({umax, std::abs(u(s0)), std::abs(u(s1))});
      s0 = s1;
    }
  }
  const double half = umax * (1.0 + 1e-9) + 1e-300;
  const double width = 2.0 * half / bins;
  std::vector<double> mass(bins, 0.0);

  for (const Segment& sg : segs) {
    auto u = [&](double t) { return clt_weight(t) * (sg.k - weyl_main_term(t)) / sigma_hat; };
    const double u0 = u(sg.s0), u1 = u(sg.s1);
    const bool up = u1 >= u0;
    // Parameter values where u crosses a bin edge, in increasing t.
    std::vector<double> ts{sg.s0};
    const int e0 = static_cast<int>(std::floor((std::min(u0, u1) + half) / width)) + 1;
    const int e1 = static_cast<int>(std::ceil((std::max(u0, u1) + half) / width)) - 1;
    std::vector<double> edges;
    for (int e = e0; e <= e1; ++e) edges.push_back(-half + e * width);
    if (!up) std::reverse(edges.begin(), edges.end());
    for (double edge : edges) {
      double lo = ts.back(), hi = sg.s1;
      for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((u(mid) < edge) == up ? lo : hi) = mid;
      }
      ts.push_back(0.5 * (lo + hi));
    }
    ts.push_back(sg.s1);
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      const double len = ts[i + 1] - ts[i];
      if (len <= 0.0) continue;
      const double um = u(0.5 * (ts[i] + ts[i + 1]));
      const int bin = std::clamp(static_cast<int>(std::floor((um + half) / width)), 0, bins - 1);
      mass[bin] += len;
    }
  }

  std::vector<HistogramBin> out(bins);
  const double norm = 1.0 / ((b - a) * width);
  for (int i = 0; i < bins; ++i) {
    const double c = -half + (i + 0.5) * width;
    out[i] = {c, mass[i] * norm, std::exp(-0.5 * c * c) / std::sqrt(2.0 * std::numbers::pi)};
  }
  return out;
}

std::vector<LilPoint> lil_extremes(const StatsData& data, double a, double b, double sigma_hat) {
  data.require_range(a, b, series_t_min(SeriesKind::lil));
  if (!(sigma_hat > 0.0)) throw std::invalid_argument("lil_extremes: sigma must be positive");
  std::vector<LilPoint> out;
  double sup = 0.0;
  auto q = [](double t) { return std::sqrt(loglog(t) / (2.0 * t)); };
  auto dq = [&](double t) {
    return q(t) * (1.0 / (t * std::log(t) * loglog(t)) - 1.0 / t) * 0.5;
  };
  const auto ps = pieces(data, a, b);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Piece& pc = ps[i];
    auto v = [&](double t) { return q(t) * std::abs(pc.k - weyl_main_term(t)); };
    sup = std::max({sup, v(pc.p), v(pc.q)});
    auto dv = [&](double t) { return dq(t) * (pc.k - weyl_main_term(t)) - q(t) * weyl_prime(t); };
    for (double c : critical_points(dv, pc.p, pc.q)) sup = std::max(sup, v(c));
    if (i == 0) out.push_back({pc.p, v(pc.p), v(pc.p) / sigma_hat});
    out.push_back({pc.q, sup, sup / sigma_hat});
  }
  return out;
}

}  // namespace maass

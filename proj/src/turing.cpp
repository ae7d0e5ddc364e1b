#include "maass/turing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace maass {

namespace {

constexpr double kPi = std::numbers::pi;
const double kWeylScale = std::numbers::e * std::sqrt(kPi / 2.0);
constexpr double kTuringA = 6.59125;

bool entry_less(const EigenEntry& a, const EigenEntry& b) {
  if (a.r != b.r) return a.r < b.r;
  return a.symmetry < b.symmetry;
}

double weyl_main_derivative(double t) {
  return t / 6.0 - (2.0 / kPi) * (std::log(t / kWeylScale) + 1.0);
}

// |E'(t)|, decreasing in t for t > 1.
double turing_E_slope(double t) {
  const double L = std::log(t);
  const double c = (kPi / 12.0) * (kPi / 12.0);
  return c * (2.0 / (L * L * L) + 3.0 * kTuringA / (L * L * L * L)) / t;
}

std::string format_r(double r) {
  std::ostringstream s;
  s.precision(12);
  s << std::fixed << r;
  return s.str();
}

}  // namespace

void EigenvalueList::sort() { std::sort(entries.begin(), entries.end(), entry_less); }

EigenvalueList EigenvalueList::filtered(Symmetry s) const {
  EigenvalueList out;
  out.notes = notes;
  for (const auto& e : entries) {
    if (e.symmetry == s) out.entries.push_back(e);
  }
  return out;
}

void EigenvalueList::validate() const {
  double last[2] = {-1.0, -1.0};
  for (const auto& e : entries) {
    if (!(e.r > 0.0) || !std::isfinite(e.r)) {
      throw std::invalid_argument("eigenvalue list: r must be positive and finite");
    }
    double& prev = last[static_cast<int>(e.symmetry)];
    if (!(e.r > prev)) {
      throw std::invalid_argument("eigenvalue list: r not strictly increasing within " +
                                  std::string(to_string(e.symmetry)) + " at r = " + format_r(e.r));
    }
    prev = e.r;
  }
}

double weyl_main_term(double t) {
  if (!(t > 0.0)) throw std::domain_error("weyl_main_term: t must be positive");
  return t * t / 12.0 - (2.0 * t / kPi) * std::log(t / kWeylScale) - 131.0 / 144.0;
}

double weyl_main_integral(double t) {
  if (!(t > 0.0)) throw std::domain_error("weyl_main_integral: t must be positive");
  // int t log(t/c) = (t^2/2) log(t/c) - t^2/4
  const double t2 = t * t;
  return t2 * t / 36.0 - (2.0 / kPi) * (0.5 * t2 * std::log(t / kWeylScale) - 0.25 * t2) -
         131.0 * t / 144.0;
}

OneSided weyl_remainder(double t, const EigenvalueList& list) {
  const double M = weyl_main_term(t);
  std::size_t below = 0, at_or_below = 0;
  for (const auto& e : list.entries) {
    if (e.r < t) ++below;
    if (e.r <= t) ++at_or_below;
  }
  return {static_cast<double>(below) - M, static_cast<double>(at_or_below) - M};
}

RemainderProfile::RemainderProfile(const EigenvalueList& list) {
  r_.reserve(list.entries.size());
  for (const auto& e : list.entries) r_.push_back(e.r);
  std::sort(r_.begin(), r_.end());
  prefix_.assign(r_.size() + 1, 0.0);
  for (std::size_t k = 0; k < r_.size(); ++k) prefix_[k + 1] = prefix_[k] + r_[k];
}

RemainderProfile::RemainderProfile(std::vector<double> r) : r_(std::move(r)) {
  std::sort(r_.begin(), r_.end());
  prefix_.assign(r_.size() + 1, 0.0);
  for (std::size_t k = 0; k < r_.size(); ++k) prefix_[k + 1] = prefix_[k] + r_[k];
}

std::size_t RemainderProfile::count(double t) const {
  return static_cast<std::size_t>(std::upper_bound(r_.begin(), r_.end(), t) - r_.begin());
}

double RemainderProfile::averaged(double t) const {
  if (!(t > 0.0)) throw std::domain_error("averaged_remainder: t must be positive");
  const std::size_t k = count(t);
  const double steps = static_cast<double>(k) * t - prefix_[k];
  return (steps - weyl_main_integral(t)) / t;
}

double averaged_remainder(double t, const EigenvalueList& list) {
  return RemainderProfile(list).averaged(t);
}

double turing_E(double t) {
  if (!(t > 1.0)) throw std::domain_error("turing bounds need t > 1");
  const double L = std::log(t);
  const double q = kPi / (12.0 * L);
  return (1.0 + kTuringA / L) * q * q;
}

std::pair<double, double> turing_bounds(double t) {
  const double E = turing_E(t);
  return {-2.0 * E, E};
}

TuringVerdict verdict(const EigenvalueList& list, double t0) {
  // Beyond t0 the bounds must stay inside (-1/2, 1/2), which holds for all
  // larger t once it holds at t0 > e; the step bounds below also need M' > 0.
  if (!(t0 > 4.0) || !(2.0 * turing_E(t0) < 0.5) || !(weyl_main_derivative(t0) > 0.0)) {
    throw std::invalid_argument("verdict: t0 too small for the Turing bounds");
  }
  const RemainderProfile prof(list);
  const std::vector<double>& r = prof.values();
  auto g = [&](double tau) { return prof.averaged(tau) + 2.0 * turing_E(tau); };

  // On a gap between eigenvalues, d<S>/dt = h(t)/t^2 with
  // h(t) = sum_{r_j <= t} r_j + int_0^t M - t M(t), and h' = -t M'(t) < 0.
  std::vector<double> prefix(r.size() + 1, 0.0);
  for (std::size_t j = 0; j < r.size(); ++j) prefix[j + 1] = prefix[j] + r[j];
  auto h = [&](double tau, std::size_t k) {
    return prefix[k] + weyl_main_integral(tau) - tau * weyl_main_term(tau);
  };

  constexpr double kBisectTol = 1e-9;
  double T = t0;
  double tau = t0;
  double g_tau = g(tau);
  if (g_tau > 0.0) {
    bool found = false;
    while (!found) {
      const std::size_t k = prof.count(tau);
      // Right end of the current smooth piece; past the last eigenvalue
      // the piece is unbounded, so walk it in chunks.
      const double b = k < r.size() ? r[k] : tau + std::max(1.0, 0.5 * tau);
      // h is monotone on [tau, b], so its extremes are at the ends. At b
      // itself the left limit applies, which uses the same k.
      const double hmax = std::max(std::abs(h(tau, k)), std::abs(h(b, k)));
      const double lip = hmax / (tau * tau) + 2.0 * turing_E_slope(tau);
      // Steps shorter than the bisection tolerance are not worth certifying.
      const double step = std::max(g_tau / lip, kBisectTol * std::max(1.0, tau));
      const double next = std::min(tau + step, b);
      const double g_next = g(next);
      if (g_next <= 0.0) {
        double lo = tau, hi = next;
        while (hi - lo > kBisectTol) {
          const double mid = 0.5 * (lo + hi);
          (g(mid) > 0.0 ? lo : hi) = mid;
        }
        T = hi;
        found = true;
      } else {
        tau = next;
        g_tau = g_next;
      }
    }
  }

  TuringVerdict v;
  v.T = T;
  v.t = std::min(T, T * std::max(0.0, prof.averaged(T) - turing_E(T) + 1.0));
  v.complete_below = lambda_of(v.t);
  v.missing_within = std::make_pair(lambda_of(v.t), lambda_of(v.T));
  return v;
}

EigenvalueList perturb_list(const EigenvalueList& list, const Perturbation& p) {
  EigenvalueList out = list;
  auto match = std::find_if(out.entries.begin(), out.entries.end(), [&](const EigenEntry& e) {
    return e.symmetry == p.symmetry && std::abs(e.r - p.r) <= p.match_tol;
  });
  const std::string what = std::string(to_string(p.symmetry)) + " r=" + format_r(p.r);
  if (p.kind == Perturbation::Kind::remove) {
    if (match == out.entries.end()) {
      throw std::invalid_argument("perturb: no " + what + " in list");
    }
    out.entries.erase(match);
    out.notes.push_back("perturbation: removed " + what);
  } else {
    if (match != out.entries.end()) {
      throw std::invalid_argument("perturb: " + what + " already in list");
    }
    if (!(p.r > 0.0)) throw std::invalid_argument("perturb: fake r must be positive");
    out.entries.push_back({p.symmetry, p.r, 0.0, 0.0});
    out.sort();
    out.notes.push_back("perturbation: inserted fake " + what);
  }
  return out;
}

int merge_candidates(EigenvalueList& list, const std::vector<CuspFormCandidate>& found,
                     double tol) {
  int added = 0;
  for (const auto& c : found) {
    const bool known = std::any_of(list.entries.begin(), list.entries.end(), [&](const auto& e) {
      return e.symmetry == c.symmetry && std::abs(e.r - c.r) < tol;
    });
    if (known) continue;
    list.entries.push_back({c.symmetry, c.r, c.residual_phase1, c.residual_y_independence});
    ++added;
  }
  list.sort();
  return added;
}

ControlResult control_loop(EigenvalueList list, double target_r, const ControlOptions& opt,
                           ControlState state, const CheckpointFn& checkpoint, const LogFn& log) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  if (opt.height_schedule.empty()) throw std::invalid_argument("control loop: empty height schedule");

  list.sort();
  TuringVerdict v = verdict(list, opt.t0);
  while (v.t < target_r) {
    if (state.cycle >= opt.max_cycles || elapsed() >= opt.budget_seconds) {
      say("budget exhausted");
      break;
    }
    SearchOptions so = opt.search;
    so.density = state.density;
    const std::size_t idx = static_cast<std::size_t>(state.schedule_index) % opt.height_schedule.size();
    so.height_factor = opt.search.height_factor * opt.height_schedule[idx];

    std::ostringstream head;
    head << "cycle " << state.cycle << ": scan r in [" << format_r(v.t) << ", " << format_r(v.T)
         << "] density " << so.density << " height factor " << so.height_factor;
    say(head.str());

    int added = 0;
    for (Symmetry s : opt.symmetries) {
      added += merge_candidates(list, scan(v.t, v.T, s, so, log), opt.search.dedupe_tol);
    }
    ++state.cycle;

    const TuringVerdict nv = verdict(list, opt.t0);
    const bool stuck = std::abs(nv.t - v.t) <= 1e-12 && std::abs(nv.T - v.T) <= 1e-12;
    if (stuck) {
      state.density *= opt.density_growth;
      ++state.schedule_index;
    } else {
      state.density *= opt.density_decay;
    }
    state.density = std::clamp(state.density, opt.density_min, opt.density_max);
    state.t_old = v.t;
    state.T_old = v.T;
    v = nv;

    std::ostringstream tail;
    tail << "  added " << added << ", verdict t = " << format_r(v.t) << ", T = " << format_r(v.T)
         << (stuck ? " (no progress)" : "");
    say(tail.str());
    if (checkpoint) checkpoint(list, state);
  }
  ControlResult res;
  res.list = std::move(list);
  res.verdict = v;
  res.state = state;
  res.reached = v.t >= target_r;
  return res;
}

}  // namespace maass

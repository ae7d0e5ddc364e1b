#include "maass/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "maass/eigensearch.hpp"
#include "maass/hejhal.hpp"
#include "maass/stats.hpp"
#include "maass/turing.hpp"

namespace maass::cli {

namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || std::isnan(x)) {
    throw UsageError("config: " + key + " expects a number, got '" + v + "'");
  }
  return x;
}

int parse_int(const std::string& key, const std::string& v) {
  int x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
    throw UsageError("config: " + key + " expects an integer, got '" + v + "'");
  }
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config: " + key + " expects true or false, got '" + v + "'");
}

std::vector<double> parse_list_of_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw UsageError("config: " + key + " must not be empty");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    auto dbl = [&m](const char* k, double RunConfig::*f) {
      m[k] = [f](RunConfig& c, const std::string& key, const std::string& v) { c.*f = parse_double(key, v); };
    };
    auto in = [&m](const char* k, int RunConfig::*f) {
      m[k] = [f](RunConfig& c, const std::string& key, const std::string& v) { c.*f = parse_int(key, v); };
    };
    auto str = [&m](const char* k, std::string RunConfig::*f) {
      m[k] = [f](RunConfig& c, const std::string&, const std::string& v) { c.*f = v; };
    };
    auto flag = [&m](const char* k, bool RunConfig::*f) {
      m[k] = [f](RunConfig& c, const std::string& key, const std::string& v) { c.*f = parse_bool(key, v); };
    };
    str("symmetry", &RunConfig::symmetry);
    dbl("epsilon", &RunConfig::epsilon);
    dbl("y", &RunConfig::y);
    m["height_schedule"] = [](RunConfig& c, const std::string& key, const std::string& v) {
      c.height_schedule = parse_list_of_doubles(key, v);
    };
    dbl("density", &RunConfig::density);
    dbl("density_growth", &RunConfig::density_growth);
    dbl("density_decay", &RunConfig::density_decay);
    dbl("delta_r", &RunConfig::delta_r);
    dbl("refine_tol", &RunConfig::refine_tol);
    dbl("dedupe_tol", &RunConfig::dedupe_tol);
    dbl("accept_tolerance", &RunConfig::accept_tolerance);
    dbl("row_floor", &RunConfig::row_floor);
    dbl("t0", &RunConfig::t0);
    dbl("target_r", &RunConfig::target_r);
    dbl("r_lo", &RunConfig::r_lo);
    dbl("r_hi", &RunConfig::r_hi);
    dbl("budget_seconds", &RunConfig::budget_seconds);
    in("max_cycles", &RunConfig::max_cycles);
    in("workers", &RunConfig::workers);
    flag("deterministic", &RunConfig::deterministic);
    flag("override_unverified", &RunConfig::override_unverified);
    str("list", &RunConfig::list_path);
    str("out", &RunConfig::out_path);
    str("figures", &RunConfig::figures);
    str("sigma", &RunConfig::sigma);
    in("bins", &RunConfig::bins);
    dbl("window", &RunConfig::window);
    in("sample_density", &RunConfig::sample_density);
    dbl("stats_t_max", &RunConfig::stats_t_max);
    dbl("perturb_r", &RunConfig::perturb_r);
    dbl("coeff_r", &RunConfig::coeff_r);
    in("m_max", &RunConfig::m_max);
    return m;
  }();
  return table;
}

std::string fixed(double x, int digits = 12) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << x;
  return s.str();
}

std::string sci(double x, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits, x);
  return buf;
}

std::string g15(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_verdict(std::ostream& out, const TuringVerdict& v) {
  out << "verdict: t = " << fixed(v.t) << ", T = " << fixed(v.T) << "\n";
  out << "  consecutive for lambda < " << fixed(v.complete_below) << "\n";
  if (v.missing_within) {
    out << "  missing eigenvalue in lambda in [" << fixed(v.missing_within->first) << ", "
        << fixed(v.missing_within->second) << "]\n";
  }
}

void print_counts(std::ostream& out, const EigenvalueList& list, double t) {
  int even = 0, odd = 0;
  for (const auto& e : list.entries) {
    if (e.r >= t) continue;
    (e.symmetry == Symmetry::even ? even : odd)++;
  }
  out << "  below r = " << fixed(t, 6) << ": " << even << " even, " << odd << " odd\n";
}

ListMeta make_meta(const RunConfig& cfg, const EigenvalueList& list) {
  ListMeta meta;
  if (!cfg.deterministic) meta.created = utc_now();
  meta.config_hash = config_hash(cfg);
  meta.verdict = verdict(list, cfg.t0);
  return meta;
}

// Everything the subcommands share.
struct Context {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

EigenvalueList load_optional_list(const std::string& path) {
  if (path.empty() || !fs::exists(path)) return {};
  return read_list(path);
}

std::string output_path(const RunConfig& cfg) {
  return cfg.out_path.empty() ? cfg.list_path : cfg.out_path;
}

// ---------------------------------------------------------------- scan
int cmd_scan(Context& c) {
  const RunConfig& cfg = c.cfg;
  require(!std::isnan(cfg.r_lo) && !std::isnan(cfg.r_hi), "scan: --r-lo and --r-hi are required");
  require(!output_path(cfg).empty(), "scan: --list or --out is required");
  EigenvalueList list = load_optional_list(cfg.list_path);
  if (!(cfg.r_hi > cfg.r_lo)) {
    c.out << "empty range, nothing to do\n";
    return kSuccess;
  }
  const SearchOptions so = cfg.search_options();
  int added = 0;
  for (Symmetry s : cfg.symmetries()) {
    const auto found = scan(cfg.r_lo, cfg.r_hi, s, so);
    added += merge_candidates(list, found, so.dedupe_tol);
  }
  list.validate();
  write_file_atomic(output_path(cfg), serialize_list(list, make_meta(cfg, list)));
  c.out << "scan: " << added << " new record(s)\n";
  const TuringVerdict v = verdict(list, cfg.t0);
  print_verdict(c.out, v);
  return kSuccess;
}

// ------------------------------------------------------------ complete
int cmd_complete(Context& c, bool resume) {
  const RunConfig& cfg = c.cfg;
  require(!std::isnan(cfg.target_r), "complete: --target-r is required");
  require(cfg.target_r > cfg.t0, "complete: target_r must exceed t0");
  const std::string out = output_path(cfg);
  require(!out.empty(), "complete: --out or --list is required");

  ControlState state;
  EigenvalueList list;
  if (resume) {
    if (!fs::exists(out)) throw UsageError("complete: no checkpoint at " + out);
    try {
      list = read_list(out, &state);
      list.validate();
    } catch (const std::exception& e) {
      c.err << "corrupted checkpoint " << out << ": " << e.what() << "\n";
      return kComputeFailure;
    }
  } else {
    list = load_optional_list(cfg.list_path);
    list.validate();
    state.density = cfg.density;
  }

  ControlOptions opt;
  opt.search = cfg.search_options();
  // The Turing bounds count the whole spectrum, so the audit always needs
  // both symmetry classes whatever the user selected.
  opt.symmetries = {Symmetry::even, Symmetry::odd};
  opt.t0 = cfg.t0;
  opt.budget_seconds = cfg.budget_seconds;
  opt.max_cycles = cfg.max_cycles;
  opt.height_schedule = cfg.height_schedule;
  opt.density_growth = cfg.density_growth;
  opt.density_decay = cfg.density_decay;

  auto checkpoint = [&](const EigenvalueList& l, const ControlState& s) {
    ListMeta meta = make_meta(cfg, l);
    meta.state = s;
    write_file_atomic(out, serialize_list(l, meta));
  };
  auto log = [&](const std::string& s) {
    if (s.rfind("trial", 0) != 0) c.err << s << "\n";
  };
  const ControlResult res = control_loop(std::move(list), cfg.target_r, opt, state, checkpoint, log);
  ListMeta meta = make_meta(cfg, res.list);
  meta.state = res.state;
  write_file_atomic(out, serialize_list(res.list, meta));

  c.out << (res.reached ? "status: complete" : "status: partial (budget exhausted)") << "\n";
  print_verdict(c.out, res.verdict);
  print_counts(c.out, res.list, res.verdict.t);
  if (cfg.symmetry != "both") {
    c.out << "  note: both symmetries were computed for the audit; filter on '" << cfg.symmetry
          << "' for a one-class list\n";
  }
  return kSuccess;
}

// -------------------------------------------------------------- verify
int cmd_verify(Context& c, double fake_r) {
  const RunConfig& cfg = c.cfg;
  require(!cfg.list_path.empty(), "verify: --list is required");
  const EigenvalueList list = read_list(cfg.list_path);
  list.validate();
  const TuringVerdict v = verdict(list, cfg.t0);
  print_verdict(c.out, v);
  print_counts(c.out, list, v.t);
  if (std::isnan(fake_r)) return kSuccess;

  const Symmetry sym = cfg.symmetry == "odd" ? Symmetry::odd : Symmetry::even;
  const EigenvalueList with_fake = perturb_list(list, {Perturbation::Kind::insert, fake_r, sym});
  const RemainderProfile prof(with_fake);
  // Exceeding the upper bound at a single point certifies the list below
  // the fake value, so a sampled search is sound.
  const double last = prof.values().empty() ? fake_r : prof.values().back();
  const double hi = std::max(last, fake_r) + 0.25 * fake_r + 1.0;
  double best = -std::numeric_limits<double>::infinity(), at = fake_r;
  for (double t = std::max(fake_r, cfg.t0); t <= hi; t += 1e-3 * std::max(1.0, fake_r)) {
    const double d = prof.averaged(t) - turing_E(t);
    if (d > best) best = d, at = t;
  }
  if (best > 0.0) {
    c.out << "certification: PASS (<S> exceeds E_upper by " << sci(best) << " at t = " << fixed(at, 6)
          << "; consecutive for lambda <= " << fixed(lambda_of(fake_r)) << ")\n";
  } else {
    c.out << "certification: FAIL (<S> stays below E_upper; max excess " << sci(best) << ")\n";
  }
  return kSuccess;
}

// -------------------------------------------------------------- coeffs
int cmd_coeffs(Context& c) {
  const RunConfig& cfg = c.cfg;
  require(!cfg.list_path.empty(), "coeffs: --list is required");
  require(!std::isnan(cfg.coeff_r), "coeffs: --r is required");
  require(cfg.symmetry == "even" || cfg.symmetry == "odd", "coeffs: --symmetry must be even or odd");
  require(!cfg.out_path.empty(), "coeffs: --out is required");
  const Symmetry sym = parse_symmetry(cfg.symmetry);
  const EigenvalueList list = read_list(cfg.list_path);
  const auto it = std::min_element(list.entries.begin(), list.entries.end(), [&](const auto& a, const auto& b) {
    const double da = a.symmetry == sym ? std::abs(a.r - cfg.coeff_r) : INFINITY;
    const double db = b.symmetry == sym ? std::abs(b.r - cfg.coeff_r) : INFINITY;
    return da < db;
  });
  if (it == list.entries.end() || it->symmetry != sym || std::abs(it->r - cfg.coeff_r) > 1e-6) {
    throw UsageError("coeffs: no " + cfg.symmetry + " eigenvalue at r = " + fixed(cfg.coeff_r) +
                     " in the list");
  }
  const SearchOptions so = cfg.search_options();
  CuspFormCandidate cand = solve_at(it->r, sym, so);
  const auto extended = extend_coefficients(cand, cfg.m_max, so.hejhal);

  std::ostringstream s;
  s << "# maass coefficients\n";
  s << "# symmetry: " << to_string(sym) << "\n# r: " << fixed(it->r) << "\n";
  s << "# normalisation: a_1 = 1\n";
  s << "# y-independence residual: " << sci(cand.residual_y_independence) << "\n";
  s << "# columns: m,a_m,error_bound\n";
  const int M0 = static_cast<int>(cand.coefficients.size()) - static_cast<int>(extended.size());
  for (int m = 1; m <= std::min(cfg.m_max, M0); ++m) {
    // Phase-1 coefficients: the residual at the verification heights is
    // the error scale; a_1 is exact by normalisation.
    const double bound = m == 1 ? 0.0 : cand.residual_y_independence;
    s << m << "," << g15(cand.coefficients[m - 1]) << "," << sci(bound) << "\n";
  }
  for (const auto& e : extended) s << e.m << "," << g15(e.value) << "," << sci(e.error_bound) << "\n";
  write_file_atomic(cfg.out_path, s.str());
  c.out << "coeffs: wrote " << std::max(cfg.m_max, 1) << " coefficients to " << cfg.out_path << "\n";
  return kSuccess;
}

// --------------------------------------------------------------- stats
// The mean curves of fig2/fig3 run to the last entry of the list.
double prof_end(const EigenvalueList& list, double b) {
  return list.entries.empty() ? b : std::max(b, list.entries.back().r);
}

std::vector<std::string> split_figures(const std::string& text) {
  const std::vector<std::string> all{"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "lil"};
  if (text == "all") return all;
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (std::find(all.begin(), all.end(), item) == all.end()) throw UsageError("stats: unknown figure " + item);
    out.push_back(item);
  }
  return out;
}

int cmd_stats(Context& c) {
  const RunConfig& cfg = c.cfg;
  require(!cfg.list_path.empty(), "stats: --list is required");
  require(!cfg.out_path.empty(), "stats: --out (directory) is required");
  const EigenvalueList list = read_list(cfg.list_path);
  list.validate();
  const StatsData data(list, cfg.override_unverified, cfg.t0);
  const double b = std::isnan(cfg.stats_t_max) ? data.verified_t() : cfg.stats_t_max;
  const double a = series_t_min(SeriesKind::clt);
  data.require_range(a, b, a);
  fs::create_directories(cfg.out_path);

  double sigma_hat = 0.0;
  std::string sigma_policy;
  if (cfg.sigma == "estimate") {
    sigma_hat = window_moments(data, a, b).sigma;
    sigma_policy = "estimated from the data over the whole range: " + g15(sigma_hat);
  } else {
    sigma_hat = parse_double("sigma", cfg.sigma);
    require(sigma_hat > 0.0, "stats: sigma must be positive");
    sigma_policy = "fixed at " + g15(sigma_hat);
  }

  auto header = [&](std::ostringstream& s, const std::string& what, double lo, double hi) {
    s << "# " << what << "\n# range: [" << g15(lo) << ", " << g15(hi) << "]\n";
    s << "# verified_t: " << g15(data.verified_t()) << "\n";
    s << "# sigma_hat: " << sigma_policy << "\n";
    s << "# scaled series exclude t <= " << g15(a) << "\n";
    if (data.uses_override(hi)) s << "# override: range exceeds the verified bound; data unverified\n";
  };
  auto write = [&](const std::string& name, const std::string& body) {
    const std::string path = (fs::path(cfg.out_path) / (name + ".csv")).string();
    write_file_atomic(path, body);
    c.out << "stats: wrote " << path << "\n";
  };
  auto series_csv = [&](SeriesKind kind, const std::string& name, const std::string& what) {
    const double lo = kind == SeriesKind::raw ? 1.0 : a;
    const ScaledSeries ser = sample_series(kind, data, lo, b, cfg.sample_density, sigma_hat);
    std::ostringstream s;
    header(s, what, lo, b);
    s << "# sampling: " << ser.policy << "\n";
    s << (kind == SeriesKind::raw ? "t,S_left,S_right\n" : "t,value_left,value_right\n");
    for (const auto& p : ser.samples) s << g15(p.t) << "," << g15(p.left) << "," << g15(p.right) << "\n";
    write(name, s.str());
  };
  auto averaged_csv = [&](const EigenvalueList& changed, const std::string& name, const std::string& what) {
    const RemainderProfile orig(list), pert(changed);
    const double hi = prof_end(list, b);
    std::ostringstream s;
    header(s, what, cfg.t0, hi);
    s << "t,avg_S_original,avg_S_perturbed,E_lower,E_upper\n";
    for (double t = cfg.t0; t <= hi + 1e-12; t += 0.01) {
      const auto [lo_b, up_b] = turing_bounds(t);
      s << g15(t) << "," << g15(orig.averaged(t)) << "," << g15(pert.averaged(t)) << "," << g15(lo_b)
        << "," << g15(up_b) << "\n";
    }
    write(name, s.str());
  };

  // Default perturbation point: an entry three quarters of the way up.
  auto perturb_target = [&]() -> EigenEntry {
    const double want = std::isnan(cfg.perturb_r) ? 0.75 * b : cfg.perturb_r;
    const auto it = std::min_element(list.entries.begin(), list.entries.end(), [&](const auto& x, const auto& y) {
      return std::abs(x.r - want) < std::abs(y.r - want);
    });
    if (it == list.entries.end()) throw UsageError("stats: empty list");
    return *it;
  };

  for (const std::string& fig : split_figures(cfg.figures)) {
    if (fig == "fig1") {
      series_csv(SeriesKind::raw, fig, "fluctuations S(t)");
    } else if (fig == "fig2") {
      const EigenEntry e = perturb_target();
      averaged_csv(perturb_list(list, {Perturbation::Kind::remove, e.r, e.symmetry}), fig,
                   "mean <S(t)> with " + std::string(to_string(e.symmetry)) + " r = " + fixed(e.r) + " removed");
    } else if (fig == "fig3") {
      const double r = std::isnan(cfg.perturb_r) ? std::round(0.75 * b) : cfg.perturb_r;
      averaged_csv(perturb_list(list, {Perturbation::Kind::insert, r, Symmetry::even}), fig,
                   "mean <S(t)> with a fake eigenvalue at r = " + fixed(r) + " inserted");
    } else if (fig == "fig4") {
      series_csv(SeriesKind::li_sarnak, fig, "(log t/sqrt t) exp(-(log log t)^(5/17)/2) |S(t)|");
    } else if (fig == "fig5") {
      series_csv(SeriesKind::sqrt_scaled, fig, "|S(t)|/sqrt t");
    } else if (fig == "fig6") {
      std::ostringstream s;
      header(s, "occupation density of (log log t/sqrt t) S(t)/sigma_hat", a, b);
      s << "centre,density,gaussian\n";
      for (const auto& bin : histogram_clt(data, a, b, cfg.bins, sigma_hat)) {
        s << g15(bin.centre) << "," << g15(bin.density) << "," << g15(bin.gaussian) << "\n";
      }
      write(fig, s.str());
    } else if (fig == "fig7") {
      std::vector<double> centres;
      for (double t = a + cfg.window; t <= b - cfg.window + 1e-12; t += 0.5) centres.push_back(t);
      std::ostringstream s;
      header(s, "window mean and deviation of (log log t/sqrt t) S(t), half width " + g15(cfg.window), a, b);
      s << "t,mu,sigma\n";
      for (const auto& w : window_sweep(data, centres, cfg.window)) {
        s << g15(0.5 * (w.a + w.b)) << "," << g15(w.mu) << "," << g15(w.sigma) << "\n";
      }
      write(fig, s.str());
    } else if (fig == "lil") {
      std::ostringstream s;
      header(s, "running sup of (log log t/(2t))^(1/2) |S(t)|", a, b);
      s << "t,running_sup,ratio\n";
      for (const auto& p : lil_extremes(data, a, b, sigma_hat)) {
        s << g15(p.t) << "," << g15(p.running_sup) << "," << g15(p.ratio) << "\n";
      }
      write(fig, s.str());
    }
  }
  return kSuccess;
}

// ------------------------------------------------------------- perturb
int cmd_perturb(Context& c, double insert_r, double remove_r) {
  const RunConfig& cfg = c.cfg;
  require(!cfg.list_path.empty() && !cfg.out_path.empty(), "perturb: --list and --out are required");
  require(std::isnan(insert_r) != std::isnan(remove_r), "perturb: give exactly one of --insert, --remove");
  require(cfg.symmetry == "even" || cfg.symmetry == "odd", "perturb: --symmetry must be even or odd");
  if (fs::exists(cfg.out_path) && fs::equivalent(cfg.list_path, cfg.out_path)) {
    throw UsageError("perturb: refusing to write the input list in place");
  }
  const EigenvalueList list = read_list(cfg.list_path);
  const Perturbation p = std::isnan(insert_r)
                             ? Perturbation{Perturbation::Kind::remove, remove_r, parse_symmetry(cfg.symmetry), 1e-6}
                             : Perturbation{Perturbation::Kind::insert, insert_r, parse_symmetry(cfg.symmetry), 1e-9};
  const EigenvalueList changed = perturb_list(list, p);
  write_file_atomic(cfg.out_path, serialize_list(changed, make_meta(cfg, changed)));
  c.out << "perturb: " << changed.notes.back() << "\n";
  print_verdict(c.out, verdict(changed, cfg.t0));
  return kSuccess;
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0)) throw UsageError(std::string("config: ") + name + " must be positive");
  };
  if (symmetry != "even" && symmetry != "odd" && symmetry != "both") {
    throw UsageError("config: symmetry must be even, odd or both");
  }
  positive(epsilon, "epsilon");
  positive(y, "y");
  positive(density, "density");
  positive(delta_r, "delta_r");
  positive(refine_tol, "refine_tol");
  positive(dedupe_tol, "dedupe_tol");
  positive(accept_tolerance, "accept_tolerance");
  positive(row_floor, "row_floor");
  positive(budget_seconds, "budget_seconds");
  positive(window, "window");
  for (double h : height_schedule) positive(h, "height_schedule entries");
  if (!(density_growth > 1.0)) throw UsageError("config: density_growth must exceed 1");
  if (!(density_decay > 0.0 && density_decay <= 1.0)) throw UsageError("config: density_decay must lie in (0, 1]");
  if (!(t0 > 4.0)) throw UsageError("config: t0 must exceed 4");
  if (max_cycles < 1) throw UsageError("config: max_cycles must be at least 1");
  if (workers < 0) throw UsageError("config: workers must be non-negative");
  if (bins < 10) throw UsageError("config: bins must be at least 10");
  if (sample_density < 1) throw UsageError("config: sample_density must be at least 1");
  if (m_max < 1) throw UsageError("config: m_max must be at least 1");
}

SearchOptions RunConfig::search_options() const {
  SearchOptions so;
  so.hejhal.epsilon = epsilon;
  so.hejhal.row_floor = row_floor;
  so.hejhal.accept_tolerance = accept_tolerance;
  so.delta_r = delta_r;
  so.refine_tol = refine_tol;
  so.dedupe_tol = dedupe_tol;
  so.height_factor = y;
  so.density = density;
  // Results do not depend on the worker count; deterministic mode pins it
  // anyway so that runs are identical in every respect.
  so.workers = deterministic ? std::max(workers, 1) : workers;
  return so;
}

std::vector<Symmetry> RunConfig::symmetries() const {
  if (symmetry == "both") return {Symmetry::even, Symmetry::odd};
  return {parse_symmetry(symmetry)};
}

void apply_config_text(RunConfig& cfg, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw UsageError("config line " + std::to_string(lineno) + ": unknown key " + key);
    it->second(cfg, key, value);
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str());
}

std::string canonical_config(const RunConfig& cfg) {
  std::ostringstream s;
  s << std::setprecision(17);
  s << "epsilon=" << cfg.epsilon << "\ny=" << cfg.y << "\nheight_schedule=";
  for (std::size_t i = 0; i < cfg.height_schedule.size(); ++i) {
    s << (i ? "," : "") << cfg.height_schedule[i];
  }
  s << "\ndensity=" << cfg.density << "\ndensity_growth=" << cfg.density_growth
    << "\ndensity_decay=" << cfg.density_decay << "\ndelta_r=" << cfg.delta_r
    << "\nrefine_tol=" << cfg.refine_tol << "\ndedupe_tol=" << cfg.dedupe_tol
    << "\naccept_tolerance=" << cfg.accept_tolerance << "\nrow_floor=" << cfg.row_floor
    << "\nt0=" << cfg.t0 << "\n";
  return s.str();
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : canonical_config(cfg)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string serialize_list(const EigenvalueList& list, const ListMeta& meta) {
  std::ostringstream s;
  s << "# maass eigenvalue list\n";
  if (!meta.created.empty()) s << "# created: " << meta.created << "\n";
  if (!meta.config_hash.empty()) s << "# config-hash: " << meta.config_hash << "\n";
  if (meta.verdict) s << "# verdict: t=" << fixed(meta.verdict->t) << " T=" << fixed(meta.verdict->T) << "\n";
  if (meta.state) {
    s << "# state: density=" << std::setprecision(17) << meta.state->density
      << " schedule_index=" << meta.state->schedule_index << " cycle=" << meta.state->cycle << "\n";
  }
  for (const auto& n : list.notes) s << "# note: " << n << "\n";
  s << "# columns: symmetry r residual_phase1 residual_y\n";
  for (const auto& e : list.entries) {
    s << to_string(e.symmetry) << " " << fixed(e.r) << " " << sci(e.residual_phase1) << " "
      << sci(e.residual_y) << "\n";
  }
  return s.str();
}

EigenvalueList parse_list(std::string_view text, ControlState* state) {
  EigenvalueList list;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw FormatError("line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim(std::string_view(line).substr(1));
      if (body.rfind("note: ", 0) == 0) {
        list.notes.push_back(body.substr(6));
      } else if (body.rfind("state: ", 0) == 0 && state) {
        std::istringstream ss(body.substr(7));
        std::string kv;
        while (ss >> kv) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) fail("malformed state entry");
          const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
          try {
            if (k == "density") state->density = std::stod(v);
            else if (k == "schedule_index") state->schedule_index = std::stoi(v);
            else if (k == "cycle") state->cycle = std::stoi(v);
            else fail("unknown state key " + k);
          } catch (const std::logic_error&) {
            fail("bad state value " + kv);
          }
        }
      }
      continue;
    }
    std::istringstream ss(line);
    std::string sym, r, res1, res2, extra;
    if (!(ss >> sym >> r >> res1 >> res2) || (ss >> extra)) fail("expected 4 fields");
    EigenEntry e;
    try {
      e.symmetry = parse_symmetry(sym);
    } catch (const std::invalid_argument&) {
      fail("unknown symmetry '" + sym + "'");
    }
    auto num = [&](const std::string& v) {
      char* end = nullptr;
      const double x = std::strtod(v.c_str(), &end);
      if (end != v.c_str() + v.size() || !std::isfinite(x)) fail("bad number '" + v + "'");
      return x;
    };
    e.r = num(r);
    e.residual_phase1 = num(res1);
    e.residual_y = num(res2);
    if (!(e.r > 0.0)) fail("r must be positive");
    list.entries.push_back(e);
  }
  list.sort();
  return list;
}

EigenvalueList read_list(const std::string& path, ControlState* state) {
  return parse_list(read_text(path), state);
}

void write_file_atomic(const std::string& path, std::string_view content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Maass cusp forms on the modular surface: eigenvalues, audits and statistics", "maass"};
  app.require_subcommand(1);
  app.fallthrough();

  // Flags parsed into optionals so that only given ones override the config.
  std::optional<std::string> symmetry, list_path, out_path;
  std::optional<double> target_r, t0, epsilon, y, budget;
  bool deterministic = false, override_unverified = false, resume = false;
  app.add_option("--symmetry", symmetry, "even, odd or both")->check(CLI::IsMember({"even", "odd", "both"}));
  app.add_option("--target-r", target_r, "spectral parameter to complete up to");
  app.add_option("--t0", t0, "start of the Turing audit");
  app.add_option("--epsilon", epsilon, "truncation accuracy");
  app.add_option("--y", y, "multiplier on the default horocycle height");
  app.add_option("--list", list_path, "eigenvalue list to read");
  app.add_option("--out", out_path, "output file (directory for stats)");
  app.add_flag("--deterministic", deterministic, "reproducible output (no timestamps, fixed workers)");
  app.add_flag("--override-unverified", override_unverified, "allow statistics past the verified range");
  app.add_option("--budget-seconds", budget, "wall-clock budget for complete");

  auto* scan_cmd = app.add_subcommand("scan", "scan a range of r and merge into the list");
  std::optional<double> r_lo, r_hi;
  scan_cmd->add_option("--r-lo", r_lo, "lower end of the range");
  scan_cmd->add_option("--r-hi", r_hi, "upper end of the range");

  auto* complete_cmd = app.add_subcommand("complete", "run the control loop until verified to target r");
  complete_cmd->add_flag("--resume", resume, "continue from the checkpoint at --out");

  auto* verify_cmd = app.add_subcommand("verify", "audit a list against the Turing bounds");
  double fake_r = kUnset;
  verify_cmd->add_option("--fake-insert", fake_r, "certify by inserting a fake eigenvalue at r");

  auto* coeffs_cmd = app.add_subcommand("coeffs", "Fourier coefficients of one form");
  std::optional<double> coeff_r;
  std::optional<int> m_max;
  coeffs_cmd->add_option("--r", coeff_r, "spectral parameter (must be in the list)");
  coeffs_cmd->add_option("--m-max", m_max, "number of coefficients");

  auto* stats_cmd = app.add_subcommand("stats", "write figure data as CSV");
  std::optional<std::string> figures, sigma;
  std::optional<int> bins;
  std::optional<double> window, t_max, perturb_r;
  stats_cmd->add_option("--figures", figures, "comma list of fig1..fig7, lil, or all");
  stats_cmd->add_option("--sigma", sigma, "'estimate' or a fixed value such as 0.140");
  stats_cmd->add_option("--bins", bins, "histogram bins");
  stats_cmd->add_option("--window", window, "half width of the moment windows");
  stats_cmd->add_option("--t-max", t_max, "upper end of the range (default: verified t)");
  stats_cmd->add_option("--perturb-r", perturb_r, "r used for the removal and insertion figures");

  auto* perturb_cmd = app.add_subcommand("perturb", "remove or insert one eigenvalue into a copy");
  double insert_r = kUnset, remove_r = kUnset;
  perturb_cmd->add_option("--insert", insert_r, "insert a fake eigenvalue at r");
  perturb_cmd->add_option("--remove", remove_r, "remove the eigenvalue at r");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageFailure;
  }

  try {
    Context c{RunConfig{}, out, err};
    RunConfig& cfg = c.cfg;
    if (const char* path = std::getenv("MAASS_CONFIG"); path && *path) apply_config_file(cfg, path);
    if (symmetry) cfg.symmetry = *symmetry;
    if (list_path) cfg.list_path = *list_path;
    if (out_path) cfg.out_path = *out_path;
    if (target_r) cfg.target_r = *target_r;
    if (t0) cfg.t0 = *t0;
    if (epsilon) cfg.epsilon = *epsilon;
    if (y) cfg.y = *y;
    if (budget) cfg.budget_seconds = *budget;
    if (deterministic) cfg.deterministic = true;
    if (override_unverified) cfg.override_unverified = true;
    if (r_lo) cfg.r_lo = *r_lo;
    if (r_hi) cfg.r_hi = *r_hi;
    if (coeff_r) cfg.coeff_r = *coeff_r;
    if (m_max) cfg.m_max = *m_max;
    if (figures) cfg.figures = *figures;
    if (sigma) cfg.sigma = *sigma;
    if (bins) cfg.bins = *bins;
    if (window) cfg.window = *window;
    if (t_max) cfg.stats_t_max = *t_max;
    if (perturb_r) cfg.perturb_r = *perturb_r;
    cfg.validate();

    if (*scan_cmd) return cmd_scan(c);
    if (*complete_cmd) return cmd_complete(c, resume);
    if (*verify_cmd) return cmd_verify(c, fake_r);
    if (*coeffs_cmd) return cmd_coeffs(c);
    if (*stats_cmd) return cmd_stats(c);
    if (*perturb_cmd) return cmd_perturb(c, insert_r, remove_r);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageFailure;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageFailure;
  } catch (const UnverifiedRange& e) {
    err << "error: " << e.what() << "\n";
    return kUsageFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsageFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kComputeFailure;
  }
  return kUsageFailure;
}

}  // namespace maass::cli

#include "maass/eigensearch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace maass {

double r_of(double lambda) {
  if (!(lambda > 0.25)) throw std::domain_error("r_of: lambda must exceed 1/4");
  return std::sqrt(lambda - 0.25);
}

double trial_spacing(double r, const SearchOptions& opt) {
  return std::max(0.02, 3.0 / std::max(std::abs(r), 1e-9)) / opt.density;
}

std::vector<double> trial_grid(double r_lo, double r_hi, const SearchOptions& opt) {
  std::vector<double> out;
  if (!(r_hi >= r_lo)) return out;
  for (double r = r_lo; r <= r_hi; r += trial_spacing(r, opt)) out.push_back(r);
  if (out.empty() || out.back() < r_hi) out.push_back(r_hi);
  return out;
}

LinearisationContext make_context(double r, Symmetry symmetry, const SearchOptions& opt) {
  const HejhalOptions& h = opt.hejhal;
  LinearisationContext ctx;
  ctx.symmetry = symmetry;
  ctx.M0 = coefficient_count(r, h);
  double y = std::min(default_height(r, h) * opt.height_factor, 0.8 * kY0);
  const BesselKir kappa(r);
  for (int attempt = 0; attempt < 8; ++attempt, y *= 0.985) {
    const int Mrows = row_count(r, y, h);
    std::vector<int> rows = retained_rows(kappa, y, Mrows, h.row_floor);
    if (static_cast<int>(rows.size()) < ctx.M0) continue;
    const int My = truncation_M(r, y, h.epsilon, h.truncation).M;
    ctx.rows = std::move(rows);
    ctx.sample = sample_horocycle(y, sample_count(My, Mrows));
    return ctx;
  }
  throw std::runtime_error("horocycle height unusable at this r");
}

Eigen::MatrixXd square_C(double r, const LinearisationContext& ctx) {
  const std::span<const int> rows(ctx.rows.data(), ctx.M0);
  const HejhalSystem sys = build_system(r, ctx.symmetry, ctx.sample, ctx.M0, rows);
  // Row m of C is divided by sqrt(y) kappa(r, 2 pi m y), which has zeros in
  // r; multiplying it back gives diag(scale) - V, smooth in r and with the
  // same null vectors, so the linearisation reaches much further.
  return sys.row_scale.head(ctx.M0).asDiagonal() * sys.C.topRows(ctx.M0);
}

Eigen::MatrixXd derivative_C(double r, const LinearisationContext& ctx, double delta_r) {
  const double lambda = lambda_of(r);
  const double dl = 2.0 * std::max(r, 1.0) * delta_r;
  const double rp = r_of(lambda + dl);
  const double rm = r_of(lambda - dl);
  return (square_C(rp, ctx) - square_C(rm, ctx)) / (2.0 * dl);
}

std::vector<LinearisedSolution> linearised_solutions(double r, const LinearisationContext& ctx,
                                                     const SearchOptions& opt) {
  Eigen::MatrixXd C = square_C(r, ctx);
  Eigen::MatrixXd D = derivative_C(r, ctx, opt.delta_r);
  // Columns of high-index coefficients hardly depend on lambda, so D has
  // tiny columns. Scaling the columns of C and D alike leaves the pencil's
  // eigenvalues h unchanged and makes the regularity test meaningful.
  const Eigen::VectorXd colnorm = D.colwise().norm().transpose();
  if (!(colnorm.minCoeff() > 0.0) || !colnorm.allFinite()) {
    throw std::runtime_error("C' singular - shift trial value / change y");
  }
  const Eigen::VectorXd inv = colnorm.cwiseInverse();
  C = C * inv.asDiagonal();
  D = D * inv.asDiagonal();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(D);
  if (!(lu.rcond() > opt.rcond_floor)) {
    throw std::runtime_error("C' singular - shift trial value / change y");
  }
  const Eigen::MatrixXd A = -lu.solve(C);
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigen-solver failure at r = " << r;
    throw std::runtime_error(msg.str());
  }
  std::vector<LinearisedSolution> out;
  const double lt = lambda_of(r);
  for (Eigen::Index k = 0; k < A.rows(); ++k) {
    Eigen::VectorXcd alpha = inv.cast<std::complex<double>>().asDiagonal() * es.eigenvectors().col(k);
    out.push_back({es.eigenvalues()(k), std::move(alpha), lt});
  }
  return out;
}

CuspFormCandidate solve_at(double r, Symmetry symmetry, const SearchOptions& opt) {
  const LinearisationContext primary = make_context(r, symmetry, opt);
  const HejhalSystem sys = build_system(r, symmetry, primary.sample.y, opt.hejhal);
  CuspFormCandidate c = phase1_solve(sys);
  const auto heights = verification_heights(primary.sample.y);
  c.residual_y_independence = y_independence_check(c, heights, opt.hejhal);
  return c;
}

namespace {

const LinearisedSolution& smallest(const std::vector<LinearisedSolution>& sols) {
  return *std::min_element(sols.begin(), sols.end(), [](const auto& a, const auto& b) {
    return std::abs(a.h) < std::abs(b.h);
  });
}

}  // namespace

RefineResult refine(const LinearisedSolution& start, const LinearisationContext& ctx,
                    const SearchOptions& opt) {
  RefineResult res;
  res.candidate.symmetry = ctx.symmetry;
  double lambda = start.trial_lambda + start.h.real();
  res.h_history.push_back(std::abs(start.h));
  bool converged = std::abs(start.h) < opt.refine_tol;
  try {
    while (!converged && res.iterations < opt.max_iter) {
      if (!(lambda > 0.25)) {
        res.reason = "left the spectrum (lambda <= 1/4)";
        return res;
      }
      const auto sols = linearised_solutions(r_of(lambda), ctx, opt);
      const auto& best = smallest(sols);
      ++res.iterations;
      res.h_history.push_back(std::abs(best.h));
      lambda += best.h.real();
      converged = std::abs(best.h) < opt.refine_tol;
    }
    if (!converged) {
      res.reason = "no convergence";
      return res;
    }
    res.candidate = solve_at(r_of(lambda), ctx.symmetry, opt);
    if (!(res.candidate.residual_y_independence < opt.hejhal.accept_tolerance)) {
      res.reason = "y-dependent";
      return res;
    }
  } catch (const std::exception& e) {
    res.reason = e.what();
    return res;
  }
  res.accepted = true;
  return res;
}

void deduplicate(std::vector<CuspFormCandidate>& list, double dedupe_tol) {
  std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
    if (a.symmetry != b.symmetry) return a.symmetry < b.symmetry;
    if (a.r != b.r) return a.r < b.r;
    return a.residual_y_independence < b.residual_y_independence;
  });
  std::vector<CuspFormCandidate> out;
  for (auto& c : list) {
    if (!out.empty() && out.back().symmetry == c.symmetry &&
        std::abs(out.back().r - c.r) < dedupe_tol) {
      continue;
    }
    out.push_back(std::move(c));
  }
  list = std::move(out);
}

std::vector<CuspFormCandidate> scan(double r_lo, double r_hi, Symmetry symmetry,
                                    const SearchOptions& opt,
                                    const std::function<void(const std::string&)>& log) {
  const std::vector<double> grid = trial_grid(std::max(r_lo, 0.5), r_hi, opt);
  if (r_hi < r_lo || grid.empty()) return {};
  std::vector<std::vector<CuspFormCandidate>> found(grid.size());
  std::vector<std::string> notes(grid.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      const double rt = grid[i];
      // Accept solutions no further than the neighbouring trial value.
      const double reach = 2.0 * rt * trial_spacing(rt, opt);
      try {
        const LinearisationContext ctx = make_context(rt, symmetry, opt);
        for (const auto& s : linearised_solutions(rt, ctx, opt)) {
          if (std::abs(s.h) > reach) continue;
          const double target = s.trial_lambda + s.h.real();
          if (target <= 0.25 || r_of(target) < r_lo - 0.5 * reach / rt ||
              r_of(target) > r_hi + 0.5 * reach / rt) {
            continue;
          }
          RefineResult rr = refine(s, ctx, opt);
          if (rr.accepted) {
            found[i].push_back(std::move(rr.candidate));
          } else {
            notes[i] += "trial r=" + std::to_string(rt) + ": rejected (" + rr.reason + ")\n";
          }
        }
      } catch (const std::exception& e) {
        notes[i] += "trial r=" + std::to_string(rt) + ": skipped (" + e.what() + ")\n";
      }
    }
  };

  int nthreads = opt.workers > 0 ? opt.workers
                                 : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  nthreads = std::min<int>(nthreads, static_cast<int>(grid.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  std::vector<CuspFormCandidate> all;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (log && !notes[i].empty()) log(notes[i]);
    for (auto& c : found[i]) {
      if (c.r >= r_lo && c.r <= r_hi) all.push_back(std::move(c));
    }
  }
  deduplicate(all, opt.dedupe_tol);
  return all;
}

}  // namespace maass

#include "mopup/matrix_fit.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "alternating.hpp"
#include "mopup/error.hpp"

namespace mopup {

void ApOptions::validate() const {
  if (!(tol > 0.0)) throw ArgumentError("ApOptions: tol must be positive");
}

namespace detail {

std::vector<Matrix> centered_samples(const MatrixSampleSet& set) {
  std::vector<Matrix> y(set.n());
  for (std::size_t i = 0; i < set.n(); ++i) y[i] = set.centered(i);
  return y;
}

Matrix row_gram(const std::vector<Matrix>& y, const Subspace& v, Projection mode, const ExecPolicy& exec) {
  const Index p1 = y.front().rows();
  return kernels::gram(
      y.size(), p1, [&](std::size_t i) { return project(y[i], v, Side::right, mode); }, exec);
}

Matrix col_gram(const std::vector<Matrix>& y, const Subspace& u, Projection mode, const ExecPolicy& exec) {
  const Index p2 = y.front().cols();
  return kernels::gram(
      y.size(), p2, [&](std::size_t i) { return Matrix(project(y[i], u, Side::left, mode).transpose()); }, exec);
}

double objective_centered(const std::vector<Matrix>& y, const Subspace& u, const Subspace& v) {
  double total = 0.0;
  for (const Matrix& yi : y) total += complement_block(yi, u, v).squaredNorm();
  return total;
}

namespace {

void check_init(const Subspace& s, Index p, Index r, const char* name) {
  if (s.ambient_dim() != p || (s.rank() != r && !s.is_full())) {
    throw ArgumentError(std::string("init ") + name + " has shape " + std::to_string(s.ambient_dim()) + "x" +
                        std::to_string(s.rank()) + ", expected " + std::to_string(p) + "x" + std::to_string(r));
  }
}

double step_between(const Subspace& prev, const Subspace& next) {
  // The full-space ASC fallback has no comparable rank.
  if (prev.rank() != next.rank()) return 1.0;
  return sin_theta(prev, next);
}

}  // namespace

FitResult alternating_fit(const MatrixSampleSet& set, Index r1, Index r2, const SubspacePair& init,
                          const ApOptions& opts, Projection mode) {
  opts.validate();
  if (set.n() == 0) throw ArgumentError("sample set is empty");
  const Index p1 = set.p1(), p2 = set.p2();
  if (r1 < 1 || r1 > p1 || r2 < 1 || r2 > p2) throw ArgumentError("target ranks out of range");
  check_init(init.u, p1, r1, "U");
  check_init(init.v, p2, r2, "V");

  const std::vector<Matrix> y = centered_samples(set);
  FitResult fit;
  fit.u_hat = init.u;
  fit.v_hat = init.v;
  if (opts.record_trace) fit.objective_trace.push_back(objective_centered(y, fit.u_hat, fit.v_hat));

  for (std::size_t t = 1; t <= opts.max_iter; ++t) {
    Subspace v_next = top_eigenvectors(col_gram(y, fit.u_hat, mode, opts.exec), r2);
    const Subspace& v_for_u = opts.update_order == UpdateOrder::gauss_seidel ? v_next : fit.v_hat;
    Subspace u_next = top_eigenvectors(row_gram(y, v_for_u, mode, opts.exec), r1);

    const double step = std::max(step_between(fit.u_hat, u_next), step_between(fit.v_hat, v_next));
    fit.u_hat = std::move(u_next);
    fit.v_hat = std::move(v_next);
    fit.iterations_run = t;
    fit.step_trace.push_back(step);
    if (opts.record_trace) fit.objective_trace.push_back(objective_centered(y, fit.u_hat, fit.v_hat));
    if (step <= opts.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

}  // namespace detail

SubspacePair asc_init(const MatrixSampleSet& set, Index r1, Index r2, const ExecPolicy& exec) {
  if (set.n() == 0) throw ArgumentError("asc_init: sample set is empty");
  const Index p1 = set.p1(), p2 = set.p2();
  if (r1 < 1 || r2 < 1 || r1 >= p1 || r2 >= p2) {
    throw ArgumentError("asc_init requires 1 <= r1 < p1 and 1 <= r2 < p2");
  }
  const std::vector<Matrix> y = detail::centered_samples(set);
  const Index k = r1 + r2;
  const double inv_n = 1.0 / static_cast<double>(set.n());

  SubspacePair out;
  if (k < p1) {
    Matrix avg = kernels::gram(
        y.size(), p1, [&](std::size_t i) { return leading_left_basis(y[i], k).basis(); }, exec);
    out.u = top_eigenvectors(inv_n * avg, r1);
  } else {
    out.u = Subspace::identity(p1);
  }
  if (k < p2) {
    Matrix avg = kernels::gram(
        y.size(), p2, [&](std::size_t i) { return leading_left_basis(y[i].transpose(), k).basis(); }, exec);
    out.v = top_eigenvectors(inv_n * avg, r2);
  } else {
    out.v = Subspace::identity(p2);
  }
  return out;
}

FitResult ap_fit(const MatrixSampleSet& set, Index r1, Index r2, const SubspacePair& init, const ApOptions& opts) {
  return detail::alternating_fit(set, r1, r2, init, opts, Projection::complement);
}

FitResult mopup_fit(const MatrixSampleSet& set, Index r1, Index r2, const ApOptions& opts) {
  return ap_fit(set, r1, r2, asc_init(set, r1, r2, opts.exec), opts);
}

double objective(const MatrixSampleSet& set, const Subspace& u, const Subspace& v) {
  if (u.ambient_dim() != set.p1() || v.ambient_dim() != set.p2()) {
    throw ArgumentError("objective: loading dimensions do not match samples");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < set.n(); ++i) total += complement_block(set.centered(i), u, v).squaredNorm();
  return total;
}

std::vector<Matrix> denoise(const MatrixSampleSet& set, const Subspace& u, const Subspace& v) {
  if (u.ambient_dim() != set.p1() || v.ambient_dim() != set.p2()) {
    throw ArgumentError("denoise: loading dimensions do not match samples");
  }
  std::vector<Matrix> out(set.n());
  for (std::size_t i = 0; i < set.n(); ++i) out[i] = set.samples[i] - complement_block(set.centered(i), u, v);
  return out;
}

double bic_score(double loss, std::size_t n, Index p1, Index p2, Index r1, Index r2) {
  const double npp = static_cast<double>(n) * static_cast<double>(p1) * static_cast<double>(p2);
  const double params = static_cast<double>(r1 * (2 * p1 - r1 - 1) + r2 * (2 * p2 - r2 - 1));
  return std::log(std::max(loss, kBicLossFloor)) + std::log(npp) / (2.0 * npp) * params;
}

std::vector<RankCandidate> rank_grid(Index r1_lo, Index r1_hi, Index r2_lo, Index r2_hi) {
  std::vector<RankCandidate> grid;
  for (Index a = r1_lo; a <= r1_hi; ++a)
    for (Index b = r2_lo; b <= r2_hi; ++b) grid.push_back({a, b});
  return grid;
}

std::vector<double> scree_table(const MatrixSampleSet& set, const std::vector<RankCandidate>& grid,
                                const ApOptions& opts) {
  ApOptions quiet = opts;
  quiet.record_trace = false;
  std::vector<double> losses;
  losses.reserve(grid.size());
  for (const RankCandidate& c : grid) {
    if (c.r1 < 1 || c.r2 < 1 || c.r1 >= set.p1() || c.r2 >= set.p2()) {
      throw ArgumentError("rank candidate (" + std::to_string(c.r1) + "," + std::to_string(c.r2) +
                          ") outside 1 <= r_k < p_k");
    }
    const FitResult fit = mopup_fit(set, c.r1, c.r2, quiet);
    losses.push_back(objective(set, fit.u_hat, fit.v_hat));
  }
  return losses;
}

RankSelection select_rank(const MatrixSampleSet& set, const std::vector<RankCandidate>& grid,
                          const ApOptions& opts) {
  if (grid.empty()) throw ArgumentError("select_rank: rank grid is empty");
  RankSelection sel;
  sel.grid = grid;
  sel.losses = scree_table(set, grid, opts);
  sel.bic_scores.reserve(grid.size());
  std::size_t best = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    sel.bic_scores.push_back(bic_score(sel.losses[j], set.n(), set.p1(), set.p2(), grid[j].r1, grid[j].r2));
    if (j == 0) continue;
    const RankCandidate& c = grid[j];
    const RankCandidate& b = grid[best];
    const double sj = sel.bic_scores[j], sb = sel.bic_scores[best];
    const bool better = sj < sb || (sj == sb && (c.r1 + c.r2 < b.r1 + b.r2 || (c.r1 + c.r2 == b.r1 + b.r2 && c.r1 < b.r1)));
    if (better) best = j;
  }
  sel.chosen = grid[best];
  return sel;
}

RankSelection select_rank(const MatrixSampleSet& set, Index r1_max, Index r2_max, const ApOptions& opts) {
  if (r1_max < 1 || r2_max < 1 || r1_max >= set.p1() || r2_max >= set.p2()) {
    throw ArgumentError("select_rank requires 1 <= r_k_max < p_k");
  }
  return select_rank(set, rank_grid(1, r1_max, 1, r2_max), opts);
}

}  // namespace mopup

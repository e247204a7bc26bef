#include "mopup/tensor_fit.hpp"

#include <string>

#include "mopup/error.hpp"

namespace mopup {

namespace {

void check_ranks(const TensorSampleSet& set, const std::vector<Index>& ranks) {
  if (set.n() == 0) throw ArgumentError("tensor sample set is empty");
  if (ranks.size() != set.order()) throw ArgumentError("one rank per tensor mode is required");
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    if (ranks[k] < 1 || ranks[k] >= set.dims()[k]) {
      throw ArgumentError("rank for mode " + std::to_string(k) + " must satisfy 1 <= r < p");
    }
  }
}

std::vector<Tensor> centered(const TensorSampleSet& set) {
  std::vector<Tensor> y;
  y.reserve(set.n());
  for (std::size_t i = 0; i < set.n(); ++i) y.push_back(set.centered(i));
  return y;
}

std::vector<Matrix> complement_transposes(const std::vector<Subspace>& loadings) {
  std::vector<Matrix> out;
  for (const Subspace& u : loadings) out.push_back(orthonormal_complement(u).basis().transpose());
  return out;
}

// y x_{k != skip} perp[k]
Tensor project_all_but(const Tensor& y, const std::vector<Matrix>& perp_t, std::size_t skip) {
  Tensor out = y;
  for (std::size_t k = 0; k < perp_t.size(); ++k) {
    if (k != skip) out = mode_product(out, perp_t[k], k);
  }
  return out;
}

}  // namespace

std::vector<Subspace> hosvd_init(const TensorSampleSet& set, const std::vector<Index>& ranks,
                                 const ExecPolicy& exec) {
  check_ranks(set, ranks);
  const std::vector<Tensor> y = centered(set);
  std::vector<Subspace> out;
  for (std::size_t k = 0; k < set.order(); ++k) {
    Matrix g = kernels::gram(
        y.size(), set.dims()[k], [&](std::size_t i) { return unfold(y[i], k); }, exec);
    out.push_back(top_eigenvectors(g, ranks[k]));
  }
  return out;
}

double tensor_objective(const TensorSampleSet& set, const std::vector<Subspace>& loadings) {
  if (loadings.size() != set.order()) throw ArgumentError("one loading per tensor mode is required");
  for (std::size_t k = 0; k < loadings.size(); ++k) {
    if (loadings[k].ambient_dim() != set.dims()[k]) throw ArgumentError("loading dimension mismatch");
  }
  double total = 0.0;
  std::vector<Matrix> perp_t;
  for (const Subspace& u : loadings) {
    if (u.is_full()) return 0.0;
    perp_t.push_back(orthonormal_complement(u).basis().transpose());
  }
  for (std::size_t i = 0; i < set.n(); ++i) {
    Tensor z = project_all_but(set.centered(i), perp_t, perp_t.size());
    for (double v : z.data()) total += v * v;
  }
  return total;
}

TensorFitResult ap_fit_tensor(const TensorSampleSet& set, const std::vector<Index>& ranks,
                              const std::vector<Subspace>& init, const ApOptions& opts) {
  opts.validate();
  if (set.order() < 3) throw ArgumentError("ap_fit_tensor requires order >= 3; use ap_fit for matrices");
  if (opts.update_order != UpdateOrder::paper_jacobi) {
    throw ArgumentError("ap_fit_tensor only supports the paper (Jacobi) update order");
  }
  check_ranks(set, ranks);
  if (init.size() != set.order()) throw ArgumentError("one init subspace per mode is required");
  for (std::size_t k = 0; k < init.size(); ++k) {
    if (init[k].ambient_dim() != set.dims()[k] || init[k].rank() != ranks[k]) {
      throw ArgumentError("init subspace for mode " + std::to_string(k) + " has the wrong shape");
    }
  }

  const std::vector<Tensor> y = centered(set);
  TensorFitResult fit;
  fit.loadings = init;
  if (opts.record_trace) fit.objective_trace.push_back(tensor_objective(set, fit.loadings));

  for (std::size_t t = 1; t <= opts.max_iter; ++t) {
    const std::vector<Matrix> perp_t = complement_transposes(fit.loadings);
    std::vector<Subspace> next;
    double step = 0.0;
    for (std::size_t j = 0; j < set.order(); ++j) {
      Matrix g = kernels::gram(
          y.size(), set.dims()[j], [&](std::size_t i) { return unfold(project_all_but(y[i], perp_t, j), j); },
          opts.exec);
      next.push_back(top_eigenvectors(g, ranks[j]));
      step = std::max(step, sin_theta(fit.loadings[j], next.back()));
    }
    fit.loadings = std::move(next);
    fit.iterations_run = t;
    fit.step_trace.push_back(step);
    if (opts.record_trace) fit.objective_trace.push_back(tensor_objective(set, fit.loadings));
    if (step <= opts.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

}  // namespace mopup

#pragma once

// Order-d extension: HOSVD initialization and alternating projection over
// all modes.

#include <vector>

#include "mopup/matrix_fit.hpp"
#include "mopup/spiked_model.hpp"

namespace mopup {

struct TensorFitResult {
  std::vector<Subspace> loadings;
  std::size_t iterations_run = 0;
  bool converged = false;
  std::vector<double> step_trace;
  std::vector<double> objective_trace;  // same convention as FitResult
};

// Top r_k left singular subspace of [M_k(X_1 - Xbar) ... M_k(X_n - Xbar)],
// computed from the accumulated Gram matrix. Requires d >= 2, 1 <= r_k < p_k.
std::vector<Subspace> hosvd_init(const TensorSampleSet& set, const std::vector<Index>& ranks,
                                 const ExecPolicy& exec = {});

// One sweep updates every mode from the previous sweep's complements:
//   U_j <- Eigen_{r_j}( sum_i M_j(Y_i x_{k != j} U_{k,perp}^T) M_j(...)^T ).
// Requires d >= 3; the matrix case is ap_fit. Only paper_jacobi ordering is
// defined.
TensorFitResult ap_fit_tensor(const TensorSampleSet& set, const std::vector<Index>& ranks,
                              const std::vector<Subspace>& init, const ApOptions& opts = {});

// sum_i ||(X_i - Xbar) x_1 U_{1,perp}^T ... x_d U_{d,perp}^T||_F^2
double tensor_objective(const TensorSampleSet& set, const std::vector<Subspace>& loadings);

}  // namespace mopup

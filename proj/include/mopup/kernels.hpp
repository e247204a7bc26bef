#pragma once

// Per-sample Gram accumulation, the hot loop behind ASC, AP, HOSVD and the
// HOOI baseline. Every caller reduces to
//
//     G = sum_i W_i W_i^T
//
// for a factor W_i computed from sample i. The serial version is the
// reference; the OpenMP version either reduces fixed-size sample blocks in
// index order (deterministic, identical for any thread count) or lets each
// thread keep a private partial sum (fastest, order depends on scheduling).

#include <algorithm>
#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mopup/linalg.hpp"

namespace mopup {

struct ExecPolicy {
  bool parallel = true;
  bool deterministic = true;
  int threads = 0;  // 0: OpenMP default
};

namespace kernels {

inline constexpr std::size_t kReductionBlock = 8;

inline bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Reference: left-to-right accumulation.
template <class Factor>
Matrix gram_serial(std::size_t n, Index dim, Factor&& factor) {
  Matrix g = Matrix::Zero(dim, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix w = factor(i);
    g.selfadjointView<Eigen::Lower>().rankUpdate(w);
  }
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

template <class Factor>
Matrix gram_parallel(std::size_t n, Index dim, Factor&& factor, const ExecPolicy& exec) {
#ifdef _OPENMP
  const int threads = exec.threads > 0 ? exec.threads : omp_get_max_threads();
  if (exec.deterministic) {
    const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
    std::vector<Matrix> partial(blocks);
    // A throwing factor must not escape the parallel region.
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
      try {
        Matrix acc = Matrix::Zero(dim, dim);
        const std::size_t end = std::min(n, (static_cast<std::size_t>(b) + 1) * kReductionBlock);
        for (std::size_t i = static_cast<std::size_t>(b) * kReductionBlock; i < end; ++i) {
          const Matrix w = factor(i);
          acc.selfadjointView<Eigen::Lower>().rankUpdate(w);
        }
        partial[static_cast<std::size_t>(b)] = std::move(acc);
      } catch (...) {
#pragma omp critical(mopup_gram_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    Matrix g = Matrix::Zero(dim, dim);
    for (const Matrix& p : partial) g += p;
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g;
  }
  Matrix g = Matrix::Zero(dim, dim);
  std::exception_ptr error;
#pragma omp parallel num_threads(threads)
  {
    Matrix local = Matrix::Zero(dim, dim);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      try {
        const Matrix w = factor(static_cast<std::size_t>(i));
        local.selfadjointView<Eigen::Lower>().rankUpdate(w);
      } catch (...) {
#pragma omp critical(mopup_gram_error)
        if (!error) error = std::current_exception();
      }
    }
#pragma omp critical(mopup_gram_reduce)
    g += local;
  }
  if (error) std::rethrow_exception(error);
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
#else
  (void)exec;
  return gram_serial(n, dim, factor);
#endif
}

template <class Factor>
Matrix gram(std::size_t n, Index dim, Factor&& factor, const ExecPolicy& exec) {
  if (!exec.parallel || n < 2 * kReductionBlock) return gram_serial(n, dim, factor);
  return gram_parallel(n, dim, factor, exec);
}

}  // namespace kernels
}  // namespace mopup

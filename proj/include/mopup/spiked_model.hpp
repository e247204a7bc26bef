#pragma once

// Synthetic data under the matrix and order-d spiked covariance models,
//
//     X_i = M + U A_i + B_i V^T + Z_i              (matrix)
//     X_i = M + sum_k A_{i,k} x_k U_k + Z_i        (order d)
//
// Every draw comes from its own counter-based stream keyed by
// (seed, role, sample index[, mode]), so samples can be generated in any
// order or in parallel, and swapping the noise family leaves the score
// draws untouched.

#include <cstdint>
#include <optional>
#include <vector>

#include "mopup/kernels.hpp"
#include "mopup/linalg.hpp"
#include "mopup/rng.hpp"

namespace mopup {

enum class NoiseFamily { none, uniform, gaussian, student_t3 };

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::none;
  double scale = 0.0;  // R; ignored for `none`

  double effective_scale() const { return family == NoiseFamily::none ? 0.0 : scale; }
};

enum class ScoreDist { uniform_pm1, gaussian_std };

struct MatrixModelParams {
  Matrix mean;  // p1 x p2; empty means zero
  Subspace u;   // p1 x r1
  Subspace v;   // p2 x r2
  ScoreDist scores = ScoreDist::uniform_pm1;
  double score_scale = 1.0;
  NoiseSpec noise;

  Index p1() const { return u.ambient_dim(); }
  Index p2() const { return v.ambient_dim(); }
  Index r1() const { return u.rank(); }
  Index r2() const { return v.rank(); }
  // Checks r_k < p_k, r_k >= 1, mean shape, non-negative scales.
  void validate() const;
};

struct MatrixTruth {
  MatrixModelParams params;
  std::vector<Matrix> a;  // r1 x p2 each
  std::vector<Matrix> b;  // p1 x r2 each
  std::vector<Matrix> z;  // p1 x p2 each
};

struct MatrixSampleSet {
  std::vector<Matrix> samples;
  Matrix mean_bar;
  std::optional<MatrixTruth> truth;

  // Validates shared, finite shapes and computes the sample mean.
  static MatrixSampleSet from_samples(std::vector<Matrix> samples);

  std::size_t n() const { return samples.size(); }
  Index p1() const { return mean_bar.rows(); }
  Index p2() const { return mean_bar.cols(); }
  Matrix centered(std::size_t i) const { return samples[i] - mean_bar; }
};

struct TensorModelParams {
  std::vector<Subspace> loadings;  // U_k, p_k x r_k
  ScoreDist scores = ScoreDist::gaussian_std;
  double score_scale = 1.0;
  NoiseSpec noise;
  std::optional<Tensor> mean;

  std::vector<Index> dims() const;
  std::vector<Index> ranks() const;
  void validate() const;
};

struct TensorTruth {
  TensorModelParams params;
  std::vector<std::vector<Tensor>> scores;  // [sample][mode], mode k has extent r_k
  std::vector<Tensor> noise;
};

struct TensorSampleSet {
  std::vector<Tensor> samples;
  Tensor mean_bar;
  std::optional<TensorTruth> truth;

  static TensorSampleSet from_samples(std::vector<Tensor> samples);

  std::size_t n() const { return samples.size(); }
  const std::vector<Index>& dims() const { return mean_bar.dims(); }
  std::size_t order() const { return mean_bar.order(); }
  Tensor centered(std::size_t i) const { return samples[i] - mean_bar; }
};

// Haar-distributed r-dimensional subspace of R^p: orthonormalized p x r
// standard Gaussian draw. Requires 1 <= r < p.
Subspace random_subspace(Index p, Index r, std::uint64_t seed);

// Convenience constructor with random loadings and zero mean.
MatrixModelParams random_matrix_params(Index p1, Index p2, Index r1, Index r2, std::uint64_t seed,
                                       ScoreDist scores = ScoreDist::uniform_pm1, NoiseSpec noise = {});

TensorModelParams random_tensor_params(const std::vector<Index>& dims, const std::vector<Index>& ranks,
                                       std::uint64_t seed, ScoreDist scores = ScoreDist::gaussian_std,
                                       NoiseSpec noise = {});

MatrixSampleSet sample_matrix_set(const MatrixModelParams& params, std::size_t n, std::uint64_t seed,
                                  const ExecPolicy& exec = {});

TensorSampleSet sample_tensor_set(const TensorModelParams& params, std::size_t n, std::uint64_t seed,
                                  const ExecPolicy& exec = {});

// ||(V_perp (x) U_perp)^T (S - s2 I) (V_perp (x) U_perp)||_F / ||S||_F with S
// the empirical covariance of vec(X_i) and s2 the mean diagonal of the
// complement block. A diagnostic for how well (u, v) explain the spike.
double covariance_residual(const MatrixSampleSet& set, const Subspace& u, const Subspace& v,
                           const ExecPolicy& exec = {});

}  // namespace mopup

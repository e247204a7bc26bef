#pragma once

#include <cstdint>
#include <vector>

#include "mopup/linalg.hpp"
#include "mopup/rng.hpp"
#include "mopup/spiked_model.hpp"

namespace mopup::test {

inline ExecPolicy serial() { return ExecPolicy{false, true, 1}; }

// Noiseless matrix model in generic position.
inline MatrixSampleSet noiseless_set(Index p1, Index p2, Index r1, Index r2, std::size_t n, std::uint64_t seed,
                                     ScoreDist scores = ScoreDist::gaussian_std) {
  const MatrixModelParams params = random_matrix_params(p1, p2, r1, r2, seed, scores);
  return sample_matrix_set(params, n, mix64(seed ^ 0xabcdefull));
}

inline MatrixSampleSet noisy_set(Index p1, Index p2, Index r1, Index r2, std::size_t n, double R, std::uint64_t seed) {
  const MatrixModelParams params =
      random_matrix_params(p1, p2, r1, r2, seed, ScoreDist::uniform_pm1, NoiseSpec{NoiseFamily::gaussian, R});
  return sample_matrix_set(params, n, mix64(seed ^ 0x1234ull));
}

// X_i = u a_i^T + b_i v^T with b_i = 2 (g_i u + w_i): every b_i leans on u,
// so u is not a leading left singular vector of the concatenated samples.
struct Rank1Fixture {
  MatrixSampleSet set;
  Subspace u;
  Subspace v;
};

inline Rank1Fixture rank1_adversarial(std::uint64_t seed, Index p = 8, std::size_t n = 6) {
  Rank1Fixture f;
  f.u = random_subspace(p, 1, seed);
  f.v = random_subspace(p, 1, seed + 1000);
  Rng rng(seed, StreamRole::fixture, 0);
  std::vector<Matrix> xs;
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix a = rng.gaussian_matrix(p, 1);
    const Matrix b = 2.0 * (rng.gaussian() * f.u.basis() + rng.gaussian_matrix(p, 1));
    xs.push_back(f.u.basis() * a.transpose() + b * f.v.basis().transpose());
  }
  f.set = MatrixSampleSet::from_samples(std::move(xs));
  return f;
}

inline Tensor random_tensor(const std::vector<Index>& dims, std::uint64_t seed) {
  Rng rng(seed, StreamRole::fixture, 77);
  Tensor t(dims);
  for (double& x : t.data()) x = rng.gaussian();
  return t;
}

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  return Rng(seed, StreamRole::fixture, 78).gaussian_matrix(rows, cols);
}

inline Matrix random_symmetric(Index p, std::uint64_t seed) {
  const Matrix g = random_matrix(p, p, seed);
  return 0.5 * (g + g.transpose());
}

}  // namespace mopup::test

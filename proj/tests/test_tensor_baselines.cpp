#include <doctest.h>

#include <algorithm>

#include "mopup/baselines.hpp"
#include "mopup/error.hpp"
#include "mopup/tensor_fit.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace mopup;

namespace {

double max_error(const std::vector<Subspace>& a, const std::vector<Subspace>& b) {
  double e = 0;
  for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, sin_theta(a[k], b[k]));
  return e;
}

// Moves mode `from` of every sample to the front, keeping the others in order.
Tensor permute_to_front(const Tensor& t, std::size_t from) {
  std::vector<std::size_t> order{from};
  for (std::size_t k = 0; k < t.order(); ++k)
    if (k != from) order.push_back(k);
  std::vector<Index> dims;
  for (std::size_t k : order) dims.push_back(t.dim(k));
  Tensor out(dims);
  oracle::for_each_index(t.dims(), [&](const std::vector<Index>& idx) {
    std::vector<Index> j;
    for (std::size_t k : order) j.push_back(idx[k]);
    out(j) = t(idx);
  });
  return out;
}

}  // namespace

TEST_CASE("HOSVD recovers a single-mode spike") {
  TensorModelParams params = random_tensor_params({6, 5, 4}, {2, 2, 2}, 1);
  const TensorSampleSet full = sample_tensor_set(params, 8, 2);
  // Keep only the mode-0 term of each sample.
  std::vector<Tensor> xs;
  for (std::size_t i = 0; i < full.n(); ++i)
    xs.push_back(mode_product(full.truth->scores[i][0], params.loadings[0].basis(), 0));
  const TensorSampleSet set = TensorSampleSet::from_samples(std::move(xs));
  CHECK(sin_theta(hosvd_init(set, {2, 2, 2})[0], params.loadings[0]) <= 1e-8);
}

TEST_CASE("HOSVD does not depend on the sample order") {
  const TensorSampleSet set = sample_tensor_set(
      random_tensor_params({5, 4, 3}, {2, 1, 1}, 3, ScoreDist::gaussian_std, {NoiseFamily::gaussian, 0.3}), 9, 4);
  std::vector<Tensor> rev(set.samples.rbegin(), set.samples.rend());
  const auto a = hosvd_init(set, {2, 1, 1});
  const auto b = hosvd_init(TensorSampleSet::from_samples(rev), {2, 1, 1});
  CHECK(max_error(a, b) <= 1e-10);
}

TEST_CASE("tensor AP") {
  const TensorModelParams params = random_tensor_params({8, 8, 8}, {2, 2, 2}, 5);
  const TensorSampleSet set = sample_tensor_set(params, 6, 6);
  const auto init = hosvd_init(set, {2, 2, 2});

  SUBCASE("no iterations") {
    ApOptions opts;
    opts.max_iter = 0;
    const TensorFitResult f = ap_fit_tensor(set, {2, 2, 2}, init, opts);
    CHECK_FALSE(f.converged);
    for (std::size_t k = 0; k < 3; ++k) CHECK(f.loadings[k].basis() == init[k].basis());
  }
  SUBCASE("improves on HOSVD for noiseless data") {
    const TensorFitResult f = ap_fit_tensor(set, {2, 2, 2}, init);
    const double before = max_error(init, params.loadings);
    const double after = max_error(f.loadings, params.loadings);
    CHECK(after <= 0.05);
    CHECK(after <= before);
    CHECK(f.step_trace.size() == f.iterations_run);
  }
  SUBCASE("the truth is a fixed point on noiseless data") {
    ApOptions opts;
    opts.max_iter = 1;
    const TensorFitResult f = ap_fit_tensor(set, {2, 2, 2}, params.loadings, opts);
    CHECK(max_error(f.loadings, params.loadings) <= 1e-8);
  }
  SUBCASE("validation") {
    ApOptions gs;
    gs.update_order = UpdateOrder::gauss_seidel;
    CHECK_THROWS_AS(ap_fit_tensor(set, {2, 2, 2}, init, gs), ArgumentError);
    const TensorSampleSet mat = sample_tensor_set(random_tensor_params({5, 4}, {1, 1}, 9), 4, 10);
    CHECK_THROWS_AS(ap_fit_tensor(mat, {1, 1}, hosvd_init(mat, {1, 1})), ArgumentError);
    CHECK_THROWS_AS(hosvd_init(set, {8, 2, 2}), ArgumentError);
  }
}

TEST_CASE("tensor fits are mode-permutation, offset and scale equivariant") {
  const TensorModelParams params =
      random_tensor_params({6, 5, 4}, {2, 2, 1}, 11, ScoreDist::gaussian_std, {NoiseFamily::gaussian, 0.05});
  const TensorSampleSet set = sample_tensor_set(params, 10, 12);
  ApOptions opts;
  opts.max_iter = 20;
  const TensorFitResult base = ap_fit_tensor(set, {2, 2, 1}, hosvd_init(set, {2, 2, 1}), opts);

  std::vector<Tensor> perm, moved;
  const Tensor offset = test::random_tensor({6, 5, 4}, 13);
  for (const Tensor& x : set.samples) {
    perm.push_back(permute_to_front(x, 2));
    moved.push_back(2.5 * (x + offset));
  }
  const TensorSampleSet pset = TensorSampleSet::from_samples(perm);
  const TensorFitResult p = ap_fit_tensor(pset, {1, 2, 2}, hosvd_init(pset, {1, 2, 2}), opts);
  CHECK(sin_theta(p.loadings[0], base.loadings[2]) <= 1e-10);
  CHECK(sin_theta(p.loadings[1], base.loadings[0]) <= 1e-10);
  CHECK(sin_theta(p.loadings[2], base.loadings[1]) <= 1e-10);

  const TensorSampleSet mset = TensorSampleSet::from_samples(moved);
  const TensorFitResult m = ap_fit_tensor(mset, {2, 2, 1}, hosvd_init(mset, {2, 2, 1}), opts);
  CHECK(max_error(m.loadings, base.loadings) <= 1e-10);
}

TEST_CASE("HOSVD misses u in the rank-one example while ASC finds it") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const test::Rank1Fixture f = test::rank1_adversarial(seed);
    CHECK(sin_theta(hosvd_matrix_init(f.set, 1, 1).u, f.u) > 0.05);
    CHECK(sin_theta(asc_init(f.set, 1, 1).u, f.u) <= 1e-8);
  }
}

TEST_CASE("matrix HOSVD") {
  SUBCASE("column-space-only data") {
    const Subspace u = random_subspace(7, 2, 14);
    std::vector<Matrix> xs;
    for (std::uint64_t i = 0; i < 6; ++i) xs.push_back(u.basis() * test::random_matrix(2, 5, 15 + i));
    const MatrixSampleSet set = MatrixSampleSet::from_samples(xs);
    CHECK(sin_theta(hosvd_matrix_init(set, 2, 2).u, u) <= 1e-10);
  }
  SUBCASE("sample order") {
    const MatrixSampleSet set = test::noisy_set(7, 6, 2, 2, 9, 0.3, 16);
    std::vector<Matrix> rev(set.samples.rbegin(), set.samples.rend());
    const SubspacePair a = hosvd_matrix_init(set, 2, 2);
    const SubspacePair b = hosvd_matrix_init(MatrixSampleSet::from_samples(rev), 2, 2);
    CHECK(sin_theta(a.u, b.u) <= 1e-10);
    CHECK(sin_theta(a.v, b.v) <= 1e-10);
  }
}

TEST_CASE("MPCA") {
  SUBCASE("recovers the core-only model") {
    const Subspace u = random_subspace(9, 2, 17), v = random_subspace(8, 3, 18);
    std::vector<Matrix> xs;
    for (std::uint64_t i = 0; i < 10; ++i)
      xs.push_back(u.basis() * test::random_matrix(2, 3, 40 + i) * v.basis().transpose());
    const FitResult f = hooi_mpca_fit(MatrixSampleSet::from_samples(xs), 2, 3);
    CHECK(sin_theta(f.u_hat, u) <= 1e-8);
    CHECK(sin_theta(f.v_hat, v) <= 1e-8);
  }
  SUBCASE("no iterations") {
    const MatrixSampleSet set = test::noisy_set(7, 6, 2, 2, 5, 0.1, 19);
    const SubspacePair init{random_subspace(7, 2, 20), random_subspace(6, 2, 21)};
    ApOptions opts;
    opts.max_iter = 0;
    const FitResult f = hooi_mpca_fit(set, 2, 2, init, opts);
    CHECK(f.u_hat.basis() == init.u.basis());
    CHECK_FALSE(f.converged);
  }
  SUBCASE("MOP-UP leaves a smaller complement residual on spiked data") {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const MatrixSampleSet set = test::noisy_set(20, 20, 3, 3, 30, 0.1, 500 + seed);
      ApOptions opts;
      opts.max_iter = 10;
      const FitResult a = mopup_fit(set, 3, 3, opts);
      const FitResult b = hooi_mpca_fit(set, 3, 3, opts);
      if (objective(set, a.u_hat, a.v_hat) < objective(set, b.u_hat, b.v_hat)) ++wins;
    }
    CHECK(wins >= 18);
  }
}

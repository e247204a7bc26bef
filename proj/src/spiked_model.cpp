#include "mopup/spiked_model.hpp"

#include <cmath>
#include <string>

#include "mopup/error.hpp"

namespace mopup {

namespace {

double draw_score(Rng& rng, ScoreDist dist) {
  return dist == ScoreDist::uniform_pm1 ? rng.uniform(-1.0, 1.0) : rng.gaussian();
}

Matrix score_matrix(Rng& rng, Index rows, Index cols, ScoreDist dist, double scale) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * draw_score(rng, dist);
  return m;
}

double draw_noise(Rng& rng, NoiseFamily family) {
  switch (family) {
    case NoiseFamily::uniform:
      return rng.uniform(-1.0, 1.0);
    case NoiseFamily::gaussian:
      return rng.gaussian();
    case NoiseFamily::student_t3:
      return rng.student_t3();
    case NoiseFamily::none:
      break;
  }
  return 0.0;
}

void fill_noise(Rng& rng, const NoiseSpec& noise, std::span<double> out) {
  const double scale = noise.effective_scale();
  if (noise.family == NoiseFamily::none || scale == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  for (double& v : out) v = scale * draw_noise(rng, noise.family);
}

template <class Body>
void for_each_sample(std::size_t n, const ExecPolicy& exec, Body&& body) {
#ifdef _OPENMP
  if (exec.parallel && n > 1) {
    const int threads = exec.threads > 0 ? exec.threads : omp_get_max_threads();
    std::exception_ptr error;
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(mopup_sample_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#endif
  (void)exec;
  for (std::size_t i = 0; i < n; ++i) body(i);
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) { return mix64(seed ^ mix64(tag + 0x51ED27ull)); }

}  // namespace

void MatrixModelParams::validate() const {
  if (r1() < 1 || r2() < 1) throw ArgumentError("model ranks must be at least 1");
  if (r1() >= p1() || r2() >= p2()) throw ArgumentError("model requires r1 < p1 and r2 < p2");
  if (mean.size() != 0 && (mean.rows() != p1() || mean.cols() != p2())) {
    throw ArgumentError("mean matrix shape does not match loadings");
  }
  if (mean.size() != 0) require_finite(mean, "mean matrix");
  if (score_scale < 0.0 || noise.scale < 0.0) throw ArgumentError("scales must be non-negative");
}

MatrixSampleSet MatrixSampleSet::from_samples(std::vector<Matrix> samples) {
  if (samples.empty()) throw ArgumentError("sample set is empty");
  const Index p1 = samples.front().rows();
  const Index p2 = samples.front().cols();
  if (p1 < 1 || p2 < 1) throw ArgumentError("samples must be non-empty matrices");
  Matrix sum = Matrix::Zero(p1, p2);
  for (const Matrix& x : samples) {
    if (x.rows() != p1 || x.cols() != p2) throw ArgumentError("samples do not share dimensions");
    require_finite(x, "sample");
    sum += x;
  }
  MatrixSampleSet set;
  set.mean_bar = sum / static_cast<double>(samples.size());
  set.samples = std::move(samples);
  return set;
}

std::vector<Index> TensorModelParams::dims() const {
  std::vector<Index> d;
  for (const Subspace& u : loadings) d.push_back(u.ambient_dim());
  return d;
}

std::vector<Index> TensorModelParams::ranks() const {
  std::vector<Index> r;
  for (const Subspace& u : loadings) r.push_back(u.rank());
  return r;
}

void TensorModelParams::validate() const {
  if (loadings.size() < 2) throw ArgumentError("tensor model needs at least two modes");
  for (const Subspace& u : loadings) {
    if (u.rank() < 1 || u.rank() >= u.ambient_dim()) throw ArgumentError("tensor model requires 1 <= r_k < p_k");
  }
  if (mean && mean->dims() != dims()) throw ArgumentError("mean tensor shape does not match loadings");
  if (score_scale < 0.0 || noise.scale < 0.0) throw ArgumentError("scales must be non-negative");
}

TensorSampleSet TensorSampleSet::from_samples(std::vector<Tensor> samples) {
  if (samples.empty()) throw ArgumentError("sample set is empty");
  Tensor sum(samples.front().dims());
  for (const Tensor& x : samples) sum += x;  // shape checked by +=
  TensorSampleSet set;
  set.mean_bar = (1.0 / static_cast<double>(samples.size())) * std::move(sum);
  set.samples = std::move(samples);
  return set;
}

Subspace random_subspace(Index p, Index r, std::uint64_t seed) {
  if (r < 1 || r >= p) {
    throw ArgumentError("random_subspace requires 1 <= r < p (got p=" + std::to_string(p) + ", r=" +
                        std::to_string(r) + ")");
  }
  Rng rng(seed, StreamRole::loading, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(r));
  const Matrix g = rng.gaussian_matrix(p, r);
  // QR of a Gaussian draw is Haar only after fixing the signs of R's diagonal.
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(p, r);
  const Matrix rfac = qr.matrixQR().topLeftCorner(r, r);
  for (Index j = 0; j < r; ++j) {
    if (rfac(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return Subspace(std::move(q));
}

MatrixModelParams random_matrix_params(Index p1, Index p2, Index r1, Index r2, std::uint64_t seed,
                                       ScoreDist scores, NoiseSpec noise) {
  MatrixModelParams params;
  params.u = random_subspace(p1, r1, sub_seed(seed, 1));
  params.v = random_subspace(p2, r2, sub_seed(seed, 2));
  params.scores = scores;
  params.noise = noise;
  return params;
}

TensorModelParams random_tensor_params(const std::vector<Index>& dims, const std::vector<Index>& ranks,
                                       std::uint64_t seed, ScoreDist scores, NoiseSpec noise) {
  if (dims.size() != ranks.size()) throw ArgumentError("dims and ranks differ in length");
  TensorModelParams params;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    params.loadings.push_back(random_subspace(dims[k], ranks[k], sub_seed(seed, 100 + k)));
  }
  params.scores = scores;
  params.noise = noise;
  return params;
}

MatrixSampleSet sample_matrix_set(const MatrixModelParams& params, std::size_t n, std::uint64_t seed,
                                  const ExecPolicy& exec) {
  params.validate();
  if (n < 1) throw ArgumentError("sample_matrix_set requires n >= 1");
  const Index p1 = params.p1(), p2 = params.p2(), r1 = params.r1(), r2 = params.r2();
  MatrixTruth truth;
  truth.params = params;
  truth.a.resize(n);
  truth.b.resize(n);
  truth.z.resize(n);
  std::vector<Matrix> samples(n);
  for_each_sample(n, exec, [&](std::size_t i) {
    Rng rng_a(seed, StreamRole::score_a, i);
    Rng rng_b(seed, StreamRole::score_b, i);
    Rng rng_z(seed, StreamRole::noise, i);
    Matrix a = score_matrix(rng_a, r1, p2, params.scores, params.score_scale);
    Matrix b = score_matrix(rng_b, p1, r2, params.scores, params.score_scale);
    Matrix z(p1, p2);
    fill_noise(rng_z, params.noise, {z.data(), static_cast<std::size_t>(z.size())});
    Matrix x = params.u.basis() * a + b * params.v.basis().transpose() + z;
    if (params.mean.size() != 0) x += params.mean;
    samples[i] = std::move(x);
    truth.a[i] = std::move(a);
    truth.b[i] = std::move(b);
    truth.z[i] = std::move(z);
  });
  MatrixSampleSet set = MatrixSampleSet::from_samples(std::move(samples));
  set.truth = std::move(truth);
  return set;
}

TensorSampleSet sample_tensor_set(const TensorModelParams& params, std::size_t n, std::uint64_t seed,
                                  const ExecPolicy& exec) {
  params.validate();
  if (n < 1) throw ArgumentError("sample_tensor_set requires n >= 1");
  const std::vector<Index> dims = params.dims();
  const std::size_t d = dims.size();
  TensorTruth truth;
  truth.params = params;
  truth.scores.resize(n);
  truth.noise.resize(n);
  std::vector<Tensor> samples(n);
  for_each_sample(n, exec, [&](std::size_t i) {
    Tensor x(dims);
    std::vector<Tensor> scores;
    for (std::size_t k = 0; k < d; ++k) {
      std::vector<Index> sdims = dims;
      sdims[k] = params.loadings[k].rank();
      Tensor s(sdims);
      Rng rng(seed, StreamRole::tensor_score, i, k);
      for (double& v : s.data()) v = params.score_scale * draw_score(rng, params.scores);
      x += mode_product(s, params.loadings[k].basis(), k);
      scores.push_back(std::move(s));
    }
    Tensor z(dims);
    Rng rng_z(seed, StreamRole::noise, i);
    fill_noise(rng_z, params.noise, z.data());
    x += z;
    if (params.mean) x += *params.mean;
    samples[i] = std::move(x);
    truth.scores[i] = std::move(scores);
    truth.noise[i] = std::move(z);
  });
  TensorSampleSet set = TensorSampleSet::from_samples(std::move(samples));
  set.truth = std::move(truth);
  return set;
}

double covariance_residual(const MatrixSampleSet& set, const Subspace& u, const Subspace& v,
                           const ExecPolicy& exec) {
  if (set.n() < 2) throw ArgumentError("covariance_residual requires n >= 2");
  if (u.ambient_dim() != set.p1() || v.ambient_dim() != set.p2()) {
    throw ArgumentError("covariance_residual: loading dimensions do not match samples");
  }
  const std::size_t n = set.n();
  const double denom = static_cast<double>(n - 1);

  // ||S||_F^2 = sum_{i,j} (y_i . y_j)^2 / (n-1)^2 avoids the (p1 p2)^2 matrix.
  std::vector<Matrix> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = set.centered(i);
  double s_norm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double ip = centered[i].cwiseProduct(centered[j]).sum();
      s_norm2 += ip * ip;
    }
  }
  const double s_norm = std::sqrt(s_norm2) / denom;
  if (s_norm == 0.0) return 0.0;
  if (u.is_full() || v.is_full()) return 0.0;

  const Subspace u_perp = orthonormal_complement(u);
  const Subspace v_perp = orthonormal_complement(v);
  const Index m = u_perp.rank() * v_perp.rank();
  // (V_perp (x) U_perp)^T vec(Y) = vec(U_perp^T Y V_perp).
  Matrix c = kernels::gram(
      n, m,
      [&](std::size_t i) {
        Matrix block = u_perp.basis().transpose() * centered[i] * v_perp.basis();
        return Matrix(block.reshaped(m, 1));
      },
      exec);
  c /= denom;
  const double sigma2 = c.diagonal().mean();
  c.diagonal().array() -= sigma2;
  return c.norm() / s_norm;
}

}  // namespace mopup

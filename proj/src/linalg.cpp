#include "mopup/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "mopup/error.hpp"

namespace mopup {

namespace {

Index product(const std::vector<Index>& dims, std::size_t begin, std::size_t end) {
  Index p = 1;
  for (std::size_t j = begin; j < end; ++j) p *= dims[j];
  return p;
}

void check_dims(const std::vector<Index>& dims) {
  if (dims.size() < 2) throw ArgumentError("tensor needs at least two modes");
  for (Index d : dims) {
    if (d < 1) throw ArgumentError("tensor extents must be positive");
  }
}

void check_mode(const Tensor& t, std::size_t mode) {
  if (mode >= t.order()) {
    throw ArgumentError("mode " + std::to_string(mode) + " out of range for order-" +
                        std::to_string(t.order()) + " tensor");
  }
}

}  // namespace

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ArgumentError(std::string(what) + " contains non-finite values");
}

// ---------------------------------------------------------------- Tensor

Tensor::Tensor(std::vector<Index> dims) : dims_(std::move(dims)) {
  check_dims(dims_);
  data_.assign(static_cast<std::size_t>(product(dims_, 0, dims_.size())), 0.0);
}

Tensor::Tensor(std::vector<Index> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  check_dims(dims_);
  if (static_cast<Index>(data_.size()) != product(dims_, 0, dims_.size())) {
    throw ArgumentError("tensor data length does not match its dimensions");
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw ArgumentError("tensor contains non-finite values");
  }
}

Tensor Tensor::from_matrix(const Matrix& m) {
  require_finite(m, "matrix");
  // Eigen's default storage is column-major, i.e. mode 0 fastest.
  return Tensor({m.rows(), m.cols()}, std::vector<double>(m.data(), m.data() + m.size()));
}

std::size_t Tensor::linear_index(std::span<const Index> idx) const {
  if (idx.size() != dims_.size()) throw ArgumentError("index arity does not match tensor order");
  std::size_t lin = 0;
  std::size_t stride = 1;
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= dims_[j]) throw ArgumentError("tensor index out of range");
    lin += static_cast<std::size_t>(idx[j]) * stride;
    stride *= static_cast<std::size_t>(dims_[j]);
  }
  return lin;
}

Matrix Tensor::to_matrix() const {
  if (order() != 2) throw ArgumentError("to_matrix requires an order-2 tensor");
  return Eigen::Map<const Matrix>(data_.data(), dims_[0], dims_[1]);
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.dims_ != dims_) throw ArgumentError("tensor shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (other.dims_ != dims_) throw ArgumentError("tensor shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double c) {
  for (double& v : data_) v *= c;
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(double c, Tensor t) { return t *= c; }

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.dims() != b.dims()) throw ArgumentError("tensor shape mismatch");
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

// -------------------------------------------------------------- Subspace

Subspace::Subspace(Matrix basis) : basis_(std::move(basis)) {
  if (basis_.cols() > basis_.rows()) throw ArgumentError("subspace rank exceeds ambient dimension");
  require_finite(basis_, "subspace basis");
  if (basis_.cols() > 0) {
    const Matrix gram = basis_.transpose() * basis_;
    const double dev = (gram - Matrix::Identity(basis_.cols(), basis_.cols())).norm();
    if (dev > kOrthonormalTol) {
      throw ArgumentError("subspace basis is not orthonormal (deviation " + std::to_string(dev) + ")");
    }
  }
}

Subspace Subspace::identity(Index p) { return Subspace(Matrix::Identity(p, p), true); }

Subspace Subspace::empty(Index p) { return Subspace(Matrix(p, 0), true); }

Subspace Subspace::orthonormalize(const Matrix& m) {
  if (m.cols() > m.rows()) throw ArgumentError("cannot orthonormalize more columns than rows");
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  return Subspace(std::move(q), true);
}

// --------------------------------------------------- unfold / fold / product

Matrix unfold(const Tensor& t, std::size_t mode) {
  check_mode(t, mode);
  const auto& dims = t.dims();
  const Index left = product(dims, 0, mode);
  const Index pk = dims[mode];
  const Index right = product(dims, mode + 1, dims.size());
  Matrix m(pk, left * right);
  const auto data = t.data();
  for (Index b = 0; b < right; ++b) {
    for (Index i = 0; i < pk; ++i) {
      const double* src = data.data() + left * (i + pk * b);
      for (Index a = 0; a < left; ++a) m(i, a + left * b) = src[a];
    }
  }
  return m;
}

Tensor fold(const Matrix& m, std::size_t mode, const std::vector<Index>& dims) {
  Tensor t(dims);
  check_mode(t, mode);
  const Index left = product(dims, 0, mode);
  const Index pk = dims[mode];
  const Index right = product(dims, mode + 1, dims.size());
  if (m.rows() != pk || m.cols() != left * right) throw ArgumentError("fold: matrix shape does not match dims");
  auto data = t.data();
  for (Index b = 0; b < right; ++b) {
    for (Index i = 0; i < pk; ++i) {
      double* dst = data.data() + left * (i + pk * b);
      for (Index a = 0; a < left; ++a) dst[a] = m(i, a + left * b);
    }
  }
  return t;
}

Tensor mode_product(const Tensor& t, const Matrix& b, std::size_t mode) {
  check_mode(t, mode);
  const auto& dims = t.dims();
  if (b.cols() != dims[mode]) {
    throw ArgumentError("mode_product: matrix has " + std::to_string(b.cols()) + " columns, mode extent is " +
                        std::to_string(dims[mode]));
  }
  std::vector<Index> out_dims = dims;
  out_dims[mode] = b.rows();
  Tensor out(out_dims);
  const Index left = product(dims, 0, mode);
  const Index right = product(dims, mode + 1, dims.size());
  const Index pk = dims[mode];
  const Index q = b.rows();
  // Each slab of fixed trailing index is a column-major left x pk matrix.
  for (Index s = 0; s < right; ++s) {
    Eigen::Map<const Matrix> in_slab(t.data().data() + s * left * pk, left, pk);
    Eigen::Map<Matrix> out_slab(out.data().data() + s * left * q, left, q);
    out_slab.noalias() = in_slab * b.transpose();
  }
  return out;
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index s = 0; s < a.cols(); ++s) {
      k.block(r * b.rows(), s * b.cols(), b.rows(), b.cols()) = a(r, s) * b;
    }
  }
  return k;
}

// ------------------------------------------------------ eigen / svd helpers

SymmetricEigen symmetric_eigen(const Matrix& s) {
  if (s.rows() != s.cols()) throw ArgumentError("symmetric_eigen: matrix is not square");
  require_finite(s, "symmetric matrix");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ArgumentError("symmetric_eigen: matrix is not symmetric");
  }
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
  // Eigen returns ascending order.
  SymmetricEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

Subspace top_eigenvectors(const Matrix& s, Index r) {
  if (r < 0 || r > s.rows()) throw ArgumentError("top_eigenvectors: rank out of range");
  SymmetricEigen e = symmetric_eigen(s);
  return Subspace(e.vectors.leftCols(r));
}

Subspace top_left_singular_vectors(const Matrix& m, Index r) {
  if (r < 1 || r > std::min(m.rows(), m.cols())) {
    throw ArgumentError("top_left_singular_vectors: rank " + std::to_string(r) + " outside [1, " +
                        std::to_string(std::min(m.rows(), m.cols())) + "]");
  }
  return leading_left_basis(m, r);
}

Subspace leading_left_basis(const Matrix& m, Index r) {
  if (r < 0 || r > m.rows()) throw ArgumentError("leading_left_basis: rank out of range");
  require_finite(m, "matrix");
  if (r == 0) return Subspace::empty(m.rows());
  const bool need_full = r > m.cols();
  Eigen::BDCSVD<Matrix> svd(m, need_full ? Eigen::ComputeFullU : Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
  // Re-orthonormalize so rounding in the backend never trips the Subspace check.
  Matrix u = svd.matrixU().leftCols(r);
  return Subspace::orthonormalize(u);
}

Subspace orthonormal_complement(const Subspace& u) {
  const Index p = u.ambient_dim();
  const Index r = u.rank();
  if (r >= p) throw ArgumentError("orthonormal_complement: subspace already spans the ambient space");
  if (r == 0) return Subspace::identity(p);
  Eigen::HouseholderQR<Matrix> qr(u.basis());
  Matrix q = qr.householderQ();  // full p x p
  return Subspace::orthonormalize(q.rightCols(p - r));
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(m);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
  return svd.singularValues()(0);
}

double sin_theta(const Subspace& u, const Subspace& v) {
  if (u.ambient_dim() != v.ambient_dim() || u.rank() != v.rank()) {
    throw ArgumentError("sin_theta: subspaces differ in ambient dimension or rank");
  }
  if (u.rank() == 0) return 0.0;
  // ||U_perp^T V|| = ||(I - U U^T) V||.
  const Matrix residual = v.basis() - u.basis() * (u.basis().transpose() * v.basis());
  return std::clamp(spectral_norm(residual), 0.0, 1.0);
}

Matrix project(const Matrix& x, const Subspace& u, Side side, Projection mode) {
  const Index n = side == Side::left ? x.rows() : x.cols();
  if (n != u.ambient_dim()) throw ArgumentError("project: dimension mismatch");
  const Matrix& b = u.basis();
  Matrix onto = side == Side::left ? Matrix(b * (b.transpose() * x)) : Matrix((x * b) * b.transpose());
  if (mode == Projection::onto) return onto;
  return x - onto;
}

Matrix complement_block(const Matrix& x, const Subspace& u, const Subspace& v) {
  return project(project(x, u, Side::left, Projection::complement), v, Side::right, Projection::complement);
}

}  // namespace mopup

#pragma once

// Dense containers and the linear-algebra kernels shared by every fitting
// routine. Matrices are Eigen dynamic matrices; tensors store their entries
// with mode 0 varying fastest, which is the order in which mode-k unfoldings
// enumerate their columns.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mopup {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Throws ArgumentError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

class Tensor {
 public:
  Tensor() = default;
  // Zero-filled tensor. Requires at least two modes, each of extent >= 1.
  explicit Tensor(std::vector<Index> dims);
  // Takes ownership of `data` laid out with mode 0 fastest.
  Tensor(std::vector<Index> dims, std::vector<double> data);
  // Order-2 view of a matrix.
  static Tensor from_matrix(const Matrix& m);

  std::size_t order() const noexcept { return dims_.size(); }
  const std::vector<Index>& dims() const noexcept { return dims_; }
  Index dim(std::size_t mode) const { return dims_.at(mode); }
  Index size() const noexcept { return static_cast<Index>(data_.size()); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  // Zero-based multi-index access.
  double operator()(std::span<const Index> idx) const { return data_[linear_index(idx)]; }
  double& operator()(std::span<const Index> idx) { return data_[linear_index(idx)]; }
  std::size_t linear_index(std::span<const Index> idx) const;

  Matrix to_matrix() const;  // order-2 only

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double c);

 private:
  std::vector<Index> dims_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(double c, Tensor t);
double max_abs_diff(const Tensor& a, const Tensor& b);

// A column-orthonormal p x r basis, identified with its span. Rank 0 is the
// empty subspace; rank p is the whole space.
class Subspace {
 public:
  static constexpr double kOrthonormalTol = 1e-10;

  Subspace() = default;
  // Validates basis^T basis = I within kOrthonormalTol (Frobenius).
  explicit Subspace(Matrix basis);

  static Subspace identity(Index p);
  static Subspace empty(Index p);
  // Orthonormal basis for the column span of `m` (thin Householder QR);
  // `m` is assumed to have full column rank.
  static Subspace orthonormalize(const Matrix& m);

  Index ambient_dim() const noexcept { return basis_.rows(); }
  Index rank() const noexcept { return basis_.cols(); }
  bool is_empty() const noexcept { return basis_.cols() == 0; }
  bool is_full() const noexcept { return basis_.cols() == basis_.rows(); }
  const Matrix& basis() const noexcept { return basis_; }

  // Explicit p x p projector. Test and diagnostic use only.
  Matrix projector() const { return basis_ * basis_.transpose(); }

 private:
  Subspace(Matrix basis, bool /*trusted*/) : basis_(std::move(basis)) {}
  Matrix basis_;
};

// Mode-k unfolding, k zero-based. Row i_k; columns enumerate the remaining
// indices with the lowest remaining mode fastest.
Matrix unfold(const Tensor& t, std::size_t mode);
// Inverse of unfold for a tensor of shape `dims`.
Tensor fold(const Matrix& m, std::size_t mode, const std::vector<Index>& dims);
// t x_mode b, with b of shape q x dims[mode].
Tensor mode_product(const Tensor& t, const Matrix& b, std::size_t mode);

Matrix kronecker(const Matrix& a, const Matrix& b);

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // columns match values
};

// Full decomposition of a symmetric matrix (symmetrized first), eigenvalues
// sorted descending. Throws ArgumentError on asymmetric input and
// NumericalError if the solver does not converge.
SymmetricEigen symmetric_eigen(const Matrix& s);

// Span of the top r eigenvectors; 0 <= r <= rows.
Subspace top_eigenvectors(const Matrix& s, Index r);

// Span of the top r left singular vectors; 1 <= r <= min(rows, cols). When
// r exceeds the numerical rank the trailing columns complete the range
// orthonormally.
Subspace top_left_singular_vectors(const Matrix& m, Index r);

// Like top_left_singular_vectors but accepts r up to rows; columns beyond
// cols come from the full left factor.
Subspace leading_left_basis(const Matrix& m, Index r);

// Orthonormal basis of span(u)^perp; requires rank < ambient_dim.
Subspace orthonormal_complement(const Subspace& u);

// ||U_perp^T V||, the largest principal-angle sine. Equal ranks required.
double sin_theta(const Subspace& u, const Subspace& v);

double spectral_norm(const Matrix& m);

enum class Side { left, right };
enum class Projection { onto, complement };

// Applies P_U (or P_{U_perp}) to x from the given side without forming the
// p x p projector: left acts on rows of x, right on its columns.
Matrix project(const Matrix& x, const Subspace& u, Side side, Projection mode);

// P_{U_perp} x P_{V_perp}.
Matrix complement_block(const Matrix& x, const Subspace& u, const Subspace& v);

}  // namespace mopup

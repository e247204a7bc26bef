#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mopup/error.hpp"
#include "mopup/linalg.hpp"
#include "mopup/spiked_model.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace mopup;

namespace {

Tensor counting_cube() {
  // A(i1, i2, i3) = i1 + 2 i2 + 4 i3 + 1, zero-based indices
  Tensor t({2, 2, 2});
  oracle::for_each_index(t.dims(), [&](const std::vector<Index>& idx) {
    t(idx) = static_cast<double>(idx[0] + 2 * idx[1] + 4 * idx[2] + 1);
  });
  return t;
}

Subspace span_of(std::initializer_list<std::initializer_list<double>> cols, Index p) {
  Matrix m(p, static_cast<Index>(cols.size()));
  Index j = 0;
  for (const auto& c : cols) {
    Index i = 0;
    for (double x : c) m(i++, j) = x;
    ++j;
  }
  return Subspace::orthonormalize(m);
}

}  // namespace

TEST_CASE("unfold of the counting cube") {
  const Tensor t = counting_cube();
  Matrix m1(2, 4), m3(2, 4);
  m1 << 1, 3, 5, 7, 2, 4, 6, 8;
  m3 << 1, 2, 3, 4, 5, 6, 7, 8;
  CHECK(unfold(t, 0) == m1);
  CHECK(unfold(t, 2) == m3);
  CHECK(unfold(t, 1) == oracle::unfold(t, 1));
  CHECK_THROWS_AS(unfold(t, 3), ArgumentError);
}

TEST_CASE("unfold of an order-2 tensor is the matrix") {
  const Matrix m = test::random_matrix(3, 5, 1);
  const Tensor t = Tensor::from_matrix(m);
  CHECK(unfold(t, 0) == m);
  CHECK(unfold(t, 1) == m.transpose());
  CHECK(t.to_matrix() == m);
}

TEST_CASE("unfold and fold agree with the enumeration oracle and round-trip") {
  const std::vector<std::vector<Index>> shapes = {{3, 4}, {2, 3, 4}, {3, 1, 2, 2}, {2, 3, 2, 3}};
  std::uint64_t seed = 10;
  for (const auto& dims : shapes) {
    const Tensor t = test::random_tensor(dims, seed++);
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const Matrix m = unfold(t, k);
      CHECK(m == oracle::unfold(t, k));
      CHECK(max_abs_diff(fold(m, k, dims), t) == 0.0);
      CHECK(max_abs_diff(oracle::fold(m, k, dims), t) == 0.0);
    }
  }
}

TEST_CASE("mode_product") {
  SUBCASE("matrix specialization") {
    const Matrix x = test::random_matrix(4, 3, 2);
    const Matrix b = test::random_matrix(5, 4, 3);
    const Tensor y = mode_product(Tensor::from_matrix(x), b, 0);
    CHECK((y.to_matrix() - b * x).cwiseAbs().maxCoeff() <= 1e-12);
    const Matrix c = test::random_matrix(2, 3, 4);
    CHECK((mode_product(Tensor::from_matrix(x), c, 1).to_matrix() - x * c.transpose()).cwiseAbs().maxCoeff() <=
          1e-12);
  }
  SUBCASE("unfold-multiply-refold oracle") {
    const Tensor t = test::random_tensor({3, 4, 5}, 5);
    const Matrix b = test::random_matrix(2, 4, 6);
    const Tensor y = mode_product(t, b, 1);
    const Tensor ref = oracle::fold(b * oracle::unfold(t, 1), 1, {3, 2, 5});
    CHECK(max_abs_diff(y, ref) <= 1e-12);
  }
  SUBCASE("distinct modes commute") {
    const Tensor t = test::random_tensor({3, 4, 2}, 7);
    const Matrix a = test::random_matrix(2, 3, 8);
    const Matrix b = test::random_matrix(5, 4, 9);
    const Tensor ab = mode_product(mode_product(t, a, 0), b, 1);
    const Tensor ba = mode_product(mode_product(t, b, 1), a, 0);
    CHECK(max_abs_diff(ab, ba) <= 1e-12);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(mode_product(test::random_tensor({3, 4, 2}, 1), test::random_matrix(2, 3, 1), 1), ArgumentError);
  }
}

TEST_CASE("kronecker") {
  Matrix a(2, 2), expect(4, 4);
  a << 1, 2, 3, 4;
  expect << 1, 0, 2, 0, 0, 1, 0, 2, 3, 0, 4, 0, 0, 3, 0, 4;
  CHECK(kronecker(a, Matrix::Identity(2, 2)) == expect);

  const Matrix x = test::random_matrix(2, 3, 11), y = test::random_matrix(2, 2, 12);
  const Matrix k = kronecker(x, y);
  REQUIRE(k.rows() == 4);
  REQUIRE(k.cols() == 6);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j)
      for (Index p = 0; p < 2; ++p)
        for (Index q = 0; q < 2; ++q) CHECK(k(i * 2 + p, j * 2 + q) == x(i, j) * y(p, q));
}

TEST_CASE("top_eigenvectors") {
  SUBCASE("diagonal") {
    const Matrix d = Vector::LinSpaced(3, 3, 1).asDiagonal();
    CHECK(sin_theta(top_eigenvectors(d, 2), span_of({{1, 0, 0}, {0, 1, 0}}, 3)) <= 1e-15);
  }
  SUBCASE("degenerate spectrum still orthonormal with small residual") {
    const Subspace s = top_eigenvectors(Matrix::Identity(5, 5), 2);
    CHECK((s.basis().transpose() * s.basis() - Matrix::Identity(2, 2)).norm() <= 1e-12);
    CHECK((Matrix::Identity(5, 5) * s.basis() - s.basis()).norm() <= 1e-12);
  }
  SUBCASE("random symmetric against Jacobi oracle") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Matrix s = test::random_symmetric(6, 100 + seed);
      const Subspace got = top_eigenvectors(s, 3);
      const Subspace want(oracle::top_eigvecs(s, 3));
      CHECK(sin_theta(got, want) <= 1e-8);
    }
  }
  SUBCASE("shift invariance") {
    const Matrix s = test::random_symmetric(7, 21);
    const Vector ev = oracle::jacobi_eigen(s).first;
    REQUIRE(ev(2) - ev(3) > 1e-6);
    CHECK(sin_theta(top_eigenvectors(s, 3), top_eigenvectors(s + 4.5 * Matrix::Identity(7, 7), 3)) <= 1e-10);
  }
  SUBCASE("rejects asymmetric input") {
    Matrix s = Matrix::Identity(3, 3);
    s(0, 1) = 1;
    CHECK_THROWS_AS(top_eigenvectors(s, 1), ArgumentError);
  }
}

TEST_CASE("top_left_singular_vectors") {
  const Matrix u = test::random_matrix(5, 1, 30), v = test::random_matrix(4, 1, 31);
  CHECK(sin_theta(top_left_singular_vectors(u * v.transpose(), 1), Subspace::orthonormalize(u)) <= 1e-12);

  const Matrix m = test::random_matrix(5, 7, 32);
  const Subspace want(oracle::top_eigvecs(m * m.transpose(), 2));
  CHECK(sin_theta(top_left_singular_vectors(m, 2), want) <= 1e-8);

  const Subspace q = random_subspace(4, 3, 33);
  const Matrix full = Subspace::orthonormalize(test::random_matrix(4, 4, 34)).basis();
  CHECK(top_left_singular_vectors(full, 2).rank() == 2);
  CHECK(q.rank() == 3);

  CHECK_THROWS_AS(top_left_singular_vectors(m, 0), ArgumentError);
  CHECK_THROWS_AS(top_left_singular_vectors(m, 6), ArgumentError);
}

TEST_CASE("orthonormal_complement") {
  const Subspace e1 = span_of({{1, 0, 0}}, 3);
  const Subspace c = orthonormal_complement(e1);
  CHECK(c.rank() == 2);
  CHECK((e1.basis().transpose() * c.basis()).norm() <= 1e-15);

  const Subspace u = random_subspace(8, 3, 40);
  const Subspace uc = orthonormal_complement(u);
  CHECK((u.projector() + uc.projector() - Matrix::Identity(8, 8)).norm() <= 1e-10);

  CHECK_THROWS_AS(orthonormal_complement(Subspace::identity(4)), ArgumentError);
}

TEST_CASE("sin_theta") {
  const Subspace e1 = span_of({{1, 0}}, 2), e2 = span_of({{0, 1}}, 2);
  CHECK(sin_theta(e1, e1) == doctest::Approx(0.0));
  CHECK(sin_theta(e1, e2) == doctest::Approx(1.0));
  const double th = std::numbers::pi / 4;
  CHECK(sin_theta(e1, span_of({{std::cos(th), std::sin(th)}}, 2)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Subspace a = random_subspace(7, 3, 2 * seed + 1), b = random_subspace(7, 3, 2 * seed + 2);
    const double ab = sin_theta(a, b);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(std::abs(ab - sin_theta(b, a)) <= 1e-10);
    CHECK(std::abs(ab - oracle::projector_distance(a.basis(), b.basis())) <= 1e-9);
    const Matrix rot = Subspace::orthonormalize(test::random_matrix(3, 3, seed + 500)).basis();
    CHECK(std::abs(ab - sin_theta(Subspace(a.basis() * rot), b)) <= 1e-10);
  }
  CHECK_THROWS_AS(sin_theta(random_subspace(5, 2, 1), random_subspace(5, 3, 1)), ArgumentError);
  CHECK_THROWS_AS(sin_theta(random_subspace(5, 2, 1), random_subspace(6, 2, 1)), ArgumentError);
}

TEST_CASE("project") {
  const Matrix x = test::random_matrix(6, 4, 50);
  const Subspace u = random_subspace(6, 2, 51), v = random_subspace(4, 3, 52);
  CHECK((project(x, u, Side::left, Projection::onto) - u.projector() * x).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((project(x, u, Side::left, Projection::complement) - (Matrix::Identity(6, 6) - u.projector()) * x)
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  CHECK((project(x, v, Side::right, Projection::onto) - x * v.projector()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((complement_block(x, u, v) -
         (Matrix::Identity(6, 6) - u.projector()) * x * (Matrix::Identity(4, 4) - v.projector()))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);

  CHECK(project(x, Subspace::identity(6), Side::left, Projection::onto) == x);
  const Matrix in_span = u.basis() * test::random_matrix(2, 4, 53);
  CHECK(project(in_span, u, Side::left, Projection::complement).norm() <= 1e-12);
  CHECK_THROWS_AS(project(x, v, Side::left, Projection::onto), ArgumentError);
}

TEST_CASE("Subspace validation") {
  CHECK_THROWS_AS(Subspace(test::random_matrix(4, 2, 1)), ArgumentError);
  CHECK(Subspace::empty(4).is_empty());
  CHECK(Subspace::identity(4).is_full());
  Matrix bad = Matrix::Identity(3, 3);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(require_finite(bad, "bad"), ArgumentError);
}

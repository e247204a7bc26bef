#include "mopup/oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mopup/error.hpp"
#include "mopup/matrix_fit.hpp"
#include "mopup/rng.hpp"

namespace mopup {

namespace {

void check_symmetric(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) throw ArgumentError(std::string(name) + " is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ArgumentError(std::string(name) + " is not symmetric");
  }
}

BoundCheck make_check(double lhs, double numerator, double denominator, double cap) {
  BoundCheck c;
  c.applicable = denominator > kBoundDenominatorFloor;
  c.rhs = c.applicable ? std::min(cap, numerator / denominator) : cap;
  c.satisfied = c.applicable && lhs <= c.rhs + kBoundSlack;
  return c;
}

Subspace minimizer_for(const MatrixSampleSet& set, const Subspace& v_fixed, Index r1) {
  Matrix g = Matrix::Zero(set.p1(), set.p1());
  for (std::size_t i = 0; i < set.n(); ++i) {
    const Matrix w = project(set.centered(i), v_fixed, Side::right, Projection::complement);
    g += w * w.transpose();
  }
  return top_eigenvectors(g, r1);
}

void check_prop1_args(const MatrixSampleSet& set, const Subspace& v_fixed, Index r1) {
  if (set.n() == 0) throw ArgumentError("sample set is empty");
  if (v_fixed.ambient_dim() != set.p2()) throw ArgumentError("fixed V does not match the sample column dimension");
  if (r1 < 1 || r1 >= set.p1()) throw ArgumentError("r1 must satisfy 1 <= r1 < p1");
}

}  // namespace

Subspace common_column_space(const MatrixSampleSet& set, double tol) {
  if (set.n() == 0) throw ArgumentError("common_column_space: sample set is empty");
  if (!(tol > 0.0 && tol < 0.5)) throw ArgumentError("common_column_space: tol must lie in (0, 0.5)");
  const Index p = set.p1();
  std::vector<Matrix> complements;
  Index stacked_rows = 0;
  for (const Matrix& x : set.samples) {
    if (x.rows() != p || x.cols() != set.p2()) throw ArgumentError("common_column_space: dimension mismatch");
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeFullU);
    if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
    const Vector& s = svd.singularValues();
    Index rank = 0;
    if (s.size() > 0 && s(0) > 0.0) {
      while (rank < s.size() && s(rank) > tol * s(0)) ++rank;
    }
    if (rank < p) {
      complements.push_back(svd.matrixU().rightCols(p - rank));
      stacked_rows += p - rank;
    }
  }
  if (stacked_rows == 0) return Subspace::identity(p);

  Matrix stacked(stacked_rows, p);
  Index row = 0;
  for (const Matrix& c : complements) {
    stacked.middleRows(row, c.cols()) = c.transpose();
    row += c.cols();
  }
  Eigen::BDCSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
  const Vector& s = svd.singularValues();
  const double kernel_tol = std::sqrt(tol);
  // Directions beyond s.size() (more columns than rows) are in the kernel too.
  Index nonzero = 0;
  while (nonzero < s.size() && s(nonzero) > kernel_tol) ++nonzero;
  if (nonzero == p) return Subspace::empty(p);
  return Subspace::orthonormalize(svd.matrixV().rightCols(p - nonzero));
}

MinimizerReport check_prop1_minimizer(const MatrixSampleSet& set, const Subspace& v_fixed, Index r1,
                                      const std::vector<Subspace>& candidates) {
  check_prop1_args(set, v_fixed, r1);
  MinimizerReport report;
  report.minimizer = minimizer_for(set, v_fixed, r1);
  report.minimizer_objective = objective(set, report.minimizer, v_fixed);
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (const Subspace& c : candidates) {
    if (c.ambient_dim() != set.p1() || c.rank() != r1) throw ArgumentError("candidate subspace has the wrong shape");
    report.worst_margin = std::min(report.worst_margin, objective(set, c, v_fixed) - report.minimizer_objective);
  }
  report.candidates = candidates.size();
  return report;
}

MinimizerReport check_prop1_minimizer(const MatrixSampleSet& set, const Subspace& v_fixed, Index r1,
                                      std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw ArgumentError("check_prop1_minimizer requires trials >= 1");
  check_prop1_args(set, v_fixed, r1);
  std::vector<Subspace> candidates;
  candidates.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(seed, StreamRole::candidate, t);
    candidates.push_back(Subspace::orthonormalize(rng.gaussian_matrix(set.p1(), r1)));
  }
  return check_prop1_minimizer(set, v_fixed, r1, candidates);
}

MinimizerReport prop1_angular_sweep(const MatrixSampleSet& set, const Subspace& v_fixed, std::size_t points,
                                    std::size_t random_planes, std::uint64_t seed) {
  check_prop1_args(set, v_fixed, 1);
  if (points < 1) throw ArgumentError("prop1_angular_sweep requires points >= 1");
  const Subspace star = minimizer_for(set, v_fixed, 1);
  const Vector u = star.basis().col(0);

  std::vector<Vector> directions;
  const Subspace perp = orthonormal_complement(star);
  for (Index j = 0; j < perp.rank(); ++j) directions.push_back(perp.basis().col(j));
  for (std::size_t k = 0; k < random_planes; ++k) {
    Rng rng(seed, StreamRole::candidate, k, 1);
    Vector w = perp.basis() * rng.gaussian_matrix(perp.rank(), 1);
    directions.push_back(w.normalized());
  }

  std::vector<Subspace> candidates;
  for (const Vector& w : directions) {
    for (std::size_t a = 0; a < points; ++a) {
      const double theta = std::numbers::pi * static_cast<double>(a) / static_cast<double>(points);
      Matrix c = std::cos(theta) * u + std::sin(theta) * w;
      c.col(0).normalize();
      candidates.push_back(Subspace(std::move(c)));
    }
  }
  return check_prop1_minimizer(set, v_fixed, 1, candidates);
}

BoundReport check_perturbation_bound(const Matrix& x, const Matrix& z, Index r) {
  check_symmetric(x, "x");
  check_symmetric(z, "z");
  if (x.rows() != z.rows()) throw ArgumentError("x and z differ in size");
  const Index p = x.rows();
  if (r < 1 || r >= p) throw ArgumentError("perturbation bound requires 1 <= r < p");

  const Matrix xhat = x + z;
  const SymmetricEigen ex = symmetric_eigen(x);
  const SymmetricEigen exh = symmetric_eigen(xhat);
  const Subspace u(ex.vectors.leftCols(r));
  const Subspace u_hat(exh.vectors.leftCols(r));
  const Matrix u_perp = ex.vectors.rightCols(p - r);

  BoundReport rep;
  rep.lhs = sin_theta(u, u_hat);
  rep.lhs_frobenius = (u_perp.transpose() * u_hat.basis()).norm();

  const Matrix off_block = u.basis().transpose() * z * u_perp;  // U^T Z U_perp
  const double off_norm = spectral_norm(off_block);
  const double off_frob = off_block.norm();
  const Vector inner = symmetric_eigen(u.basis().transpose() * xhat * u.basis()).values;
  const double lambda_r_inner = inner(r - 1);
  const double lambda_r1_hat = exh.values(r);
  const Matrix perp_block = u_perp.transpose() * xhat * u_perp;
  const double perp_norm = symmetric_eigen(perp_block).values.cwiseAbs().maxCoeff();

  rep.gap = make_check(rep.lhs, off_norm, lambda_r_inner - lambda_r1_hat, 1.0);
  rep.separated = make_check(rep.lhs, off_norm, lambda_r_inner - perp_norm - off_norm, 1.0);
  rep.frobenius = make_check(rep.lhs_frobenius, off_frob, lambda_r_inner - lambda_r1_hat,
                             std::sqrt(static_cast<double>(r)));
  return rep;
}

DavisKahanComparison check_davis_kahan_comparison(const Matrix& x, const Matrix& z, Index r) {
  DavisKahanComparison out;
  out.blockwise = check_perturbation_bound(x, z, r);
  const Vector lx = symmetric_eigen(x).values;
  const Vector lh = symmetric_eigen(x + z).values;
  const double lambda_r = lx(r - 1);
  const double below = std::abs(lh(r) - lambda_r);
  const double above = r >= 2 ? std::abs(lh(r - 2) - lambda_r) : std::numeric_limits<double>::infinity();
  const double denom = std::min(above, below);
  out.davis_kahan_applicable = denom > kBoundDenominatorFloor;
  out.davis_kahan_rhs = out.davis_kahan_applicable ? std::min(1.0, spectral_norm(z) / denom) : 1.0;

  if (!out.blockwise.gap.applicable && !out.davis_kahan_applicable) {
    out.tighter = TighterBound::tie;
  } else if (!out.davis_kahan_applicable) {
    out.tighter = TighterBound::blockwise;
  } else if (!out.blockwise.gap.applicable) {
    out.tighter = TighterBound::davis_kahan;
  } else {
    const double a = out.blockwise.gap.rhs, b = out.davis_kahan_rhs;
    out.tighter = std::abs(a - b) <= 1e-15 ? TighterBound::tie
                  : a < b                  ? TighterBound::blockwise
                                           : TighterBound::davis_kahan;
  }
  return out;
}

PerturbationFixture random_perturbation_fixture(std::uint64_t seed, std::size_t index, Index dim) {
  if (dim == 1 || dim < 0) throw ArgumentError("fixture dimension must be 0 or at least 2");
  Rng rng(seed, StreamRole::fixture, index);
  PerturbationFixture f;
  const std::uint64_t draw = rng.next_u64();
  const Index p = dim > 0 ? dim : 5 + static_cast<Index>(draw % 26);
  f.r = 1 + static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(p - 1));
  const Matrix q = Subspace::orthonormalize(rng.gaussian_matrix(p, p)).basis();
  Vector spectrum(p);
  for (Index j = 0; j < p; ++j) spectrum(j) = rng.uniform(-1.0, 1.0);
  // Push the top r eigenvalues up by a random gap so most cases are applicable.
  const double gap = std::pow(10.0, rng.uniform(-1.0, 1.0));
  std::sort(spectrum.data(), spectrum.data() + p, std::greater<>());
  spectrum.head(f.r).array() += gap;
  f.x = q * spectrum.asDiagonal() * q.transpose();
  f.x = 0.5 * (f.x + f.x.transpose());

  Matrix g = rng.gaussian_matrix(p, p);
  Matrix z = 0.5 * (g + g.transpose());
  const double target = gap * std::pow(10.0, rng.uniform(-3.0, 0.3));
  f.z = z * (target / spectral_norm(z));
  f.z = 0.5 * (f.z + f.z.transpose());
  return f;
}

SweepSummary perturbation_sweep(std::size_t count, std::uint64_t seed) {
  SweepSummary s;
  s.worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) {
    const PerturbationFixture f = random_perturbation_fixture(seed, k);
    const BoundReport rep = check_perturbation_bound(f.x, f.z, f.r);
    ++s.cases;
    bool any = false;
    for (const auto* c : {&rep.gap, &rep.separated}) {
      if (!c->applicable) continue;
      any = true;
      s.worst = std::max(s.worst, rep.lhs - c->rhs);
      if (!c->satisfied) ++s.violations;
    }
    if (rep.frobenius.applicable) {
      any = true;
      s.worst = std::max(s.worst, rep.lhs_frobenius - rep.frobenius.rhs);
      if (!rep.frobenius.satisfied) ++s.violations;
    }
    if (any) ++s.applicable;
  }
  return s;
}

SweepSummary prop1_sweep(std::size_t instances, std::size_t trials, std::uint64_t seed) {
  SweepSummary s;
  s.worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < instances; ++k) {
    Rng rng(seed, StreamRole::fixture, k, 7);
    const Index p1 = 4 + static_cast<Index>(rng.next_u64() % 7);
    const Index p2 = 4 + static_cast<Index>(rng.next_u64() % 7);
    // Every other instance is rank one so it also gets the angular sweep.
    const Index r1 = k % 2 == 0 ? 1 : 1 + static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(p1 - 1));
    const Index r2 = 1 + static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(p2 - 1));
    const std::size_t n = 2 + rng.next_u64() % 7;
    MatrixModelParams params = random_matrix_params(p1, p2, r1, r2, mix64(seed + k), ScoreDist::gaussian_std,
                                                    {NoiseFamily::gaussian, 0.3});
    const MatrixSampleSet set = sample_matrix_set(params, n, mix64(seed ^ (k + 1)), {.parallel = false});
    const Subspace v_fixed = random_subspace(p2, r2, mix64(seed + 31 * k + 5));

    const MinimizerReport rep = check_prop1_minimizer(set, v_fixed, r1, trials, mix64(seed + k + 99));
    s.worst = std::min(s.worst, rep.worst_margin);
    s.cases += rep.candidates;
    if (rep.worst_margin < -kBoundSlack) ++s.violations;
    if (r1 == 1) {
      const MinimizerReport sweep = prop1_angular_sweep(set, v_fixed, 360, 4, mix64(seed + k + 7));
      s.worst = std::min(s.worst, sweep.worst_margin);
      s.cases += sweep.candidates;
      if (sweep.worst_margin < -kBoundSlack) ++s.violations;
    }
  }
  s.applicable = s.cases;
  return s;
}

}  // namespace mopup

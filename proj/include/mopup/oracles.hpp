#pragma once

// Independent checks that turn the supporting theory into executable tests:
// the column-space intersection that ASC should recover, optimality of the
// closed-form block minimizer, and the blockwise eigenspace perturbation
// bound (with classic Davis-Kahan alongside for comparison).

#include <cstdint>
#include <vector>

#include "mopup/linalg.hpp"
#include "mopup/spiked_model.hpp"

namespace mopup {

// Intersection of the column spaces of the samples, as given (no
// centering). Each sample's numerical rank uses singular values above
// tol * sigma_1; the intersection is the null space of the stacked
// complement bases, detected at singular value <= sqrt(tol). Returns a
// rank-0 subspace when the intersection is trivial.
Subspace common_column_space(const MatrixSampleSet& set, double tol = 1e-10);

struct MinimizerReport {
  Subspace minimizer;            // Eigen_{r1}(sum_i Y_i P_{V_perp} Y_i^T)
  double minimizer_objective = 0.0;
  double worst_margin = 0.0;     // min over candidates of f(candidate) - f(minimizer)
  std::size_t candidates = 0;
};

// Compares the closed-form U minimizer for fixed V against `trials` Haar
// random candidates.
MinimizerReport check_prop1_minimizer(const MatrixSampleSet& set, const Subspace& v_fixed, Index r1,
                                      std::size_t trials, std::uint64_t seed);
// Same, against caller-supplied candidates.
MinimizerReport check_prop1_minimizer(const MatrixSampleSet& set, const Subspace& v_fixed, Index r1,
                                      const std::vector<Subspace>& candidates);
// r1 = 1 only: sweeps `points` angles in [0, pi) in the plane of the
// minimizer and each complement basis direction, plus `random_planes`
// random planes through the minimizer.
MinimizerReport prop1_angular_sweep(const MatrixSampleSet& set, const Subspace& v_fixed, std::size_t points,
                                    std::size_t random_planes, std::uint64_t seed);

inline constexpr double kBoundSlack = 1e-10;
inline constexpr double kBoundDenominatorFloor = 1e-12;

struct BoundCheck {
  double rhs = 0.0;
  bool applicable = false;
  bool satisfied = false;  // meaningful only when applicable
};

struct BoundReport {
  double lhs = 0.0;             // ||sin Theta(U, U_hat)||
  double lhs_frobenius = 0.0;   // ||sin Theta(U, U_hat)||_F
  // ||P_U Z P_perp|| / (lambda_r(U^T Xh U) - lambda_{r+1}(Xh)), capped at 1
  BoundCheck gap;
  // ||P_U Z P_perp|| / (lambda_r(U^T Xh U) - ||P_perp Xh P_perp|| - ||P_U Z P_perp||), capped at 1
  BoundCheck separated;
  // Frobenius form, capped at sqrt(r)
  BoundCheck frobenius;

  bool all_satisfied() const {
    return (!gap.applicable || gap.satisfied) && (!separated.applicable || separated.satisfied) &&
           (!frobenius.applicable || frobenius.satisfied);
  }
};

// U = top r eigenvectors of x, U_hat = top r eigenvectors of x + z.
BoundReport check_perturbation_bound(const Matrix& x, const Matrix& z, Index r);

enum class TighterBound { blockwise, davis_kahan, tie };

struct DavisKahanComparison {
  BoundReport blockwise;
  double davis_kahan_rhs = 0.0;  // capped at 1
  bool davis_kahan_applicable = false;
  TighterBound tighter = TighterBound::tie;
};

// ||Z|| / min(|lambda_{r-1}(Xh) - lambda_r(X)|, |lambda_{r+1}(Xh) - lambda_r(X)|)
// next to the blockwise bound; lambda_0 is taken as +infinity.
DavisKahanComparison check_davis_kahan_comparison(const Matrix& x, const Matrix& z, Index r);

// ---- seeded sweeps, shared by the CLI `verify` command and the tests

struct PerturbationFixture {
  Matrix x;
  Matrix z;
  Index r = 1;
};

// Symmetric x with a random spectrum and eigenbasis and a symmetric z at a
// random scale. dim = 0 draws the dimension from [5, 30].
PerturbationFixture random_perturbation_fixture(std::uint64_t seed, std::size_t index, Index dim = 0);

struct SweepSummary {
  std::size_t cases = 0;
  std::size_t applicable = 0;
  std::size_t violations = 0;
  double worst = 0.0;  // largest lhs - rhs over applicable cases (bounds) or most negative margin (prop1)
};

SweepSummary perturbation_sweep(std::size_t count, std::uint64_t seed);

// `instances` random noisy matrix problems, each checked against `trials`
// random candidates; r = 1 instances additionally get the angular sweep.
SweepSummary prop1_sweep(std::size_t instances, std::size_t trials, std::uint64_t seed);

}  // namespace mopup

#pragma once

// Matrix-variate mode-wise principal subspace pursuit: ASC initialization,
// alternating projection, the denoising projector and rank selection.

#include <cstddef>
#include <utility>
#include <vector>

#include "mopup/kernels.hpp"
#include "mopup/linalg.hpp"
#include "mopup/spiked_model.hpp"

namespace mopup {

enum class UpdateOrder {
  paper_jacobi,  // both updates read iteration t-1
  gauss_seidel,  // the U update reads the fresh V
};

struct ApOptions {
  std::size_t max_iter = 100;
  double tol = 1e-8;  // on max per-mode sin-theta change
  UpdateOrder update_order = UpdateOrder::paper_jacobi;
  bool record_trace = true;
  ExecPolicy exec;

  void validate() const;
};

struct SubspacePair {
  Subspace u;
  Subspace v;
};

struct FitResult {
  Subspace u_hat;
  Subspace v_hat;
  std::size_t iterations_run = 0;
  bool converged = false;
  // objective_trace[0] is the objective at the initial point, entry t the
  // value after iteration t. Empty unless ApOptions::record_trace.
  std::vector<double> objective_trace;
  std::vector<double> step_trace;
};

struct RankCandidate {
  Index r1 = 0;
  Index r2 = 0;
  friend bool operator==(const RankCandidate&, const RankCandidate&) = default;
};

struct RankSelection {
  std::vector<RankCandidate> grid;
  std::vector<double> losses;
  std::vector<double> bic_scores;
  RankCandidate chosen;
};

// Average Subspace Capture. Centers the samples, then takes the top r1
// eigenvectors of the average projector onto each sample's leading
// (r1 + r2)-dimensional column space (symmetrically for V). When
// r1 + r2 >= p1 the U estimate is the whole space I_{p1}, returned as a
// rank-p1 subspace (likewise for V).
SubspacePair asc_init(const MatrixSampleSet& set, Index r1, Index r2, const ExecPolicy& exec = {});

// Alternating projection from `init`. Each init subspace must have rank r_k
// or be the full space (the ASC fallback).
FitResult ap_fit(const MatrixSampleSet& set, Index r1, Index r2, const SubspacePair& init,
                 const ApOptions& opts = {});

// ASC followed by AP.
FitResult mopup_fit(const MatrixSampleSet& set, Index r1, Index r2, const ApOptions& opts = {});

// sum_i ||U_perp^T (X_i - Xbar) V_perp||_F^2
double objective(const MatrixSampleSet& set, const Subspace& u, const Subspace& v);

// X_i - P_{U_perp} (X_i - Xbar) P_{V_perp} for every sample.
std::vector<Matrix> denoise(const MatrixSampleSet& set, const Subspace& u, const Subspace& v);

inline constexpr double kBicLossFloor = 1e-300;

double bic_score(double loss, std::size_t n, Index p1, Index p2, Index r1, Index r2);

// All (r1, r2) with lo <= r_k <= hi, r1 outer.
std::vector<RankCandidate> rank_grid(Index r1_lo, Index r1_hi, Index r2_lo, Index r2_hi);

// Fits ASC + AP at every candidate and returns the complement-block loss.
std::vector<double> scree_table(const MatrixSampleSet& set, const std::vector<RankCandidate>& grid,
                                const ApOptions& opts = {});

// BIC over `grid`; ties go to the smallest r1 + r2, then the smallest r1.
RankSelection select_rank(const MatrixSampleSet& set, const std::vector<RankCandidate>& grid,
                          const ApOptions& opts = {});
// Full grid 1..r1_max x 1..r2_max.
RankSelection select_rank(const MatrixSampleSet& set, Index r1_max, Index r2_max, const ApOptions& opts = {});

}  // namespace mopup

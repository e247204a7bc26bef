#pragma once

// Shared machinery for the matrix fits. Not installed.

#include <vector>

#include "mopup/matrix_fit.hpp"

namespace mopup::detail {

std::vector<Matrix> centered_samples(const MatrixSampleSet& set);

// sum_i Y_i P Y_i^T with P = P_V or P_{V_perp}.
Matrix row_gram(const std::vector<Matrix>& y, const Subspace& v, Projection mode, const ExecPolicy& exec);
// sum_i Y_i^T P Y_i with P = P_U or P_{U_perp}.
Matrix col_gram(const std::vector<Matrix>& y, const Subspace& u, Projection mode, const ExecPolicy& exec);

double objective_centered(const std::vector<Matrix>& y, const Subspace& u, const Subspace& v);

// Alternating eigen-updates. `mode` = complement gives AP, onto gives the
// HOOI / MPCA iteration; everything else (stopping rule, traces) is shared.
FitResult alternating_fit(const MatrixSampleSet& set, Index r1, Index r2, const SubspacePair& init,
                          const ApOptions& opts, Projection mode);

}  // namespace mopup::detail

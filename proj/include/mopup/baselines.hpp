#pragma once

// Comparison methods: the HOSVD initializer and the MPCA / HOOI iteration,
// which projects onto the current subspaces instead of their complements.

#include "mopup/matrix_fit.hpp"

namespace mopup {

// U = SVD_{r1}([Y_1 ... Y_n]), V = SVD_{r2}([Y_1^T ... Y_n^T]) on centered
// samples, via the accumulated Gram matrices.
SubspacePair hosvd_matrix_init(const MatrixSampleSet& set, Index r1, Index r2, const ExecPolicy& exec = {});

// U <- Eigen_{r1}(sum_i Y_i P_V Y_i^T), V <- Eigen_{r2}(sum_i Y_i^T P_U Y_i),
// with the same loop shell, stopping rule and traces as ap_fit. The
// objective trace records the complement-block objective so the two fits
// can be compared directly.
FitResult hooi_mpca_fit(const MatrixSampleSet& set, Index r1, Index r2, const SubspacePair& init,
                        const ApOptions& opts = {});
// Initialized with hosvd_matrix_init.
FitResult hooi_mpca_fit(const MatrixSampleSet& set, Index r1, Index r2, const ApOptions& opts = {});

}  // namespace mopup

#include "mopup/baselines.hpp"

#include "alternating.hpp"
#include "mopup/error.hpp"

namespace mopup {

SubspacePair hosvd_matrix_init(const MatrixSampleSet& set, Index r1, Index r2, const ExecPolicy& exec) {
  if (set.n() == 0) throw ArgumentError("hosvd_matrix_init: sample set is empty");
  if (r1 < 1 || r2 < 1 || r1 >= set.p1() || r2 >= set.p2()) {
    throw ArgumentError("hosvd_matrix_init requires 1 <= r1 < p1 and 1 <= r2 < p2");
  }
  const std::vector<Matrix> y = detail::centered_samples(set);
  const Subspace none_u = Subspace::empty(set.p1());
  const Subspace none_v = Subspace::empty(set.p2());
  // Complement of the empty subspace is the identity: plain Y Y^T sums.
  SubspacePair out;
  out.u = top_eigenvectors(detail::row_gram(y, none_v, Projection::complement, exec), r1);
  out.v = top_eigenvectors(detail::col_gram(y, none_u, Projection::complement, exec), r2);
  return out;
}

FitResult hooi_mpca_fit(const MatrixSampleSet& set, Index r1, Index r2, const SubspacePair& init,
                        const ApOptions& opts) {
  return detail::alternating_fit(set, r1, r2, init, opts, Projection::onto);
}

FitResult hooi_mpca_fit(const MatrixSampleSet& set, Index r1, Index r2, const ApOptions& opts) {
  return hooi_mpca_fit(set, r1, r2, hosvd_matrix_init(set, r1, r2, opts.exec), opts);
}

}  // namespace mopup

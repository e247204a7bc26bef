#pragma once

// Text formats for sample sets.
//
//   MST1 n p1 p2            then n blocks of p1 rows, p2 values per row
//   TST1 n d p1 ... pd      then n blocks of prod(p) values, 8 per line,
//                           mode 1 fastest
//
// Values are written with 17 significant digits so a write/read round trip
// is exact. Lines whose first non-blank character is '#' are comments and
// may appear anywhere; blank lines are ignored.

#include <filesystem>
#include <iosfwd>

#include "mopup/spiked_model.hpp"

namespace mopup {

MatrixSampleSet read_matrix_set(std::istream& in);
MatrixSampleSet read_matrix_set(const std::filesystem::path& path);
void write_matrix_set(std::ostream& out, const MatrixSampleSet& set);
void write_matrix_set(const std::filesystem::path& path, const MatrixSampleSet& set);

TensorSampleSet read_tensor_set(std::istream& in);
TensorSampleSet read_tensor_set(const std::filesystem::path& path);
void write_tensor_set(std::ostream& out, const TensorSampleSet& set);
void write_tensor_set(const std::filesystem::path& path, const TensorSampleSet& set);

// A subspace basis stored as a single-sample MST1 file.
Subspace read_subspace(const std::filesystem::path& path);
void write_subspace(const std::filesystem::path& path, const Subspace& s);

// Shortest-exact %.17g rendering used by every writer.
std::string format_double(double v);

}  // namespace mopup

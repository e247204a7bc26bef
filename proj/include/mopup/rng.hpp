#pragma once

// Counter-based random numbers. Philox4x32-10 maps (key, counter) to four
// 32-bit words; a stream is a fixed key plus the upper counter half, so any
// (seed, role, index) triple gets an independent sequence that can be
// created on any thread without coordination.

#include <array>
#include <cstdint>
#include <limits>
#include <random>

#include "mopup/linalg.hpp"

namespace mopup {

class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  Philox4x32(std::uint64_t key, std::uint64_t stream) noexcept;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;  // 32-bit words consumed from block_
};

// splitmix64 finalizer; used to derive keys from seeds and tags.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Named roles so that e.g. noise draws never share a stream with scores.
enum class StreamRole : std::uint64_t {
  loading = 1,
  score_a = 2,
  score_b = 3,
  noise = 4,
  tensor_score = 5,
  replicate = 6,
  candidate = 7,
  fixture = 8,
};

class Rng {
 public:
  Rng(std::uint64_t seed, StreamRole role, std::uint64_t index, std::uint64_t sub = 0);

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double gaussian() { return normal_(engine_); }
  // Student t with 3 degrees of freedom: N(0,1) / sqrt(chi2_3 / 3).
  double student_t3();
  std::uint64_t next_u64() { return engine_(); }

  Matrix gaussian_matrix(Index rows, Index cols);
  Matrix uniform_matrix(Index rows, Index cols, double lo, double hi);

 private:
  Philox4x32 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace mopup

#ifndef NVFP4_RHT_HPP
#define NVFP4_RHT_HPP

// Randomized Hadamard transform over fixed-size chunks.
//
// A rotation is: multiply by a +-1 sign vector, then apply the normalized
// Sylvester Hadamard matrix H / sqrt(n). The same sign vector is shared by
// every chunk of a tensor and, for a GEMM, by both operands, so that
// <rht(a), rht(b)> == <a, b> and the rotation cancels along the inner
// dimension.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nvfp4/prng.hpp"

namespace nvfp4 {

inline constexpr std::size_t kRotationChunk = 128;

/// Rotation and rounding seeds for one quantization event.
struct SeedPair {
  std::uint64_t rht = 0;
  std::uint64_t sr = 0;

  friend constexpr bool operator==(SeedPair, SeedPair) = default;
};

class SignVector {
 public:
  /// Signs drawn from (seed, stream) in the rotation-sign domain.
  static SignVector from_seed(std::uint64_t seed, std::uint64_t stream,
                              std::size_t size = kRotationChunk);
  /// All +1: the rotation degenerates to a plain Hadamard transform.
  static SignVector ones(std::size_t size = kRotationChunk);

  std::size_t size() const { return signs_.size(); }
  double operator[](std::size_t i) const { return signs_[i]; }
  std::span<const double> values() const { return signs_; }

 private:
  explicit SignVector(std::vector<double> signs) : signs_(std::move(signs)) {}
  std::vector<double> signs_;
};

/// In-place normalized Walsh-Hadamard transform; size must be a power of two.
void hadamard_inplace(std::span<double> x);

/// Normalized 128-point Hadamard transform. Throws std::invalid_argument when
/// x.size() != 128.
std::vector<double> hadamard_128(std::span<const double> x);

/// Sign flip then Hadamard on every chunk of signs.size() elements.
/// Throws std::invalid_argument when x.size() is not a multiple of the chunk.
std::vector<double> rht_apply(std::span<const double> x, const SignVector& signs);
std::vector<double> rht_inverse(std::span<const double> y, const SignVector& signs);

/// Seeded forms: signs come from (seed, tensor_id).
std::vector<double> rht_apply(std::span<const double> x, std::uint64_t seed,
                              std::uint64_t tensor_id);
std::vector<double> rht_inverse(std::span<const double> y, std::uint64_t seed,
                                std::uint64_t tensor_id);

/// In-place variants used by the quantization pipelines.
void rht_apply_inplace(std::span<double> x, const SignVector& signs);
void rht_inverse_inplace(std::span<double> y, const SignVector& signs);

}  // namespace nvfp4

#endif  // NVFP4_RHT_HPP

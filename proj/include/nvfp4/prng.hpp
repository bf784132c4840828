#ifndef NVFP4_PRNG_HPP
#define NVFP4_PRNG_HPP

// Counter-based randomness. Every random draw in the library is a pure
// function of (seed, stream, domain, index), computed with Philox4x64-10:
//
//   key     = {seed, 0}
//   counter = {index / 4, stream, domain, 0}
//   word    = output[index % 4]
//   uniform = (word >> 11) * 2^-53            in [0, 1)
//
// `stream` is normally a tensor or GEMM identifier; `domain` separates the
// different consumers (rotation signs, scale rounding, ...) so that sharing
// a seed between them never correlates their draws.

#include <array>
#include <cstdint>
#include <span>

namespace nvfp4 {

enum class PrngDomain : std::uint64_t {
  kGeneric = 0,
  kRotationSigns = 1,
  kScaleRounding = 2,
  kElementRounding = 3,
  kGaussian = 4,
  kSeedDerivation = 5,
  kScaleRoundingB = 6,
  kElementRoundingB = 7,
};

/// Raw Philox4x64-10 block.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

/// Uniform sample in [0, 1).
double prng_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                    PrngDomain domain = PrngDomain::kGeneric);

/// 64 random bits at the same coordinates prng_uniform reads.
std::uint64_t prng_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                        PrngDomain domain = PrngDomain::kGeneric);

/// out[i] = prng_uniform(seed, stream, first + i, domain), one Philox block
/// per four outputs.
void fill_uniform(std::uint64_t seed, std::uint64_t stream, PrngDomain domain,
                  std::uint64_t first, std::span<double> out);

/// Standard normals by Box-Muller over consecutive uniform pairs:
/// z[2j] = r cos(2 pi u[2j+1]), z[2j+1] = r sin(2 pi u[2j+1]),
/// r = sqrt(-2 ln(1 - u[2j])), with uniforms drawn from the kGaussian domain
/// starting at index 2 * first_pair.
void fill_gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t first_pair,
                   std::span<double> out);

/// Derives an independent 64-bit seed from a parent seed and a path of
/// labels (e.g. {step, layer}).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label_a,
                          std::uint64_t label_b = 0);

}  // namespace nvfp4

#endif  // NVFP4_PRNG_HPP

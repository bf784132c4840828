#ifndef NVFP4_MS_EDEN_HPP
#define NVFP4_MS_EDEN_HPP

// MS-EDEN: unbiased NVFP4 quantization without element-wise stochastic
// rounding.
//
//   1. rotate every 128-chunk with a shared randomized Hadamard transform
//   2. round-to-nearest NVFP4 with grid max s and scale ceiling 256
//   3. per chunk, S = <x, x> / <x, x_rtn> (the EDEN correction)
//   4. every group scale becomes SR_E4M3(S * scale), so the correction is
//      carried exactly in expectation by the coarse FP8 scales
//
// The result estimates the *rotated* vector. Undo the rotation with
// rht_inverse, or rely on the rotation cancelling along a GEMM's inner
// dimension when both operands share the sign vector.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nvfp4/matrix.hpp"
#include "nvfp4/prng.hpp"
#include "nvfp4/quantizers.hpp"
#include "nvfp4/rht.hpp"

namespace nvfp4 {

struct CorrectionFactors {
  std::vector<double> s_chunk;
};

/// <x_rht, x_rht> / <x_rht, x_rtn>; 1.0 when x_rht is zero or the
/// denominator is below 1e-30 * <x_rht, x_rht>.
/// Throws std::invalid_argument when the lengths differ.
double correction_factor(std::span<const double> x_rht, std::span<const double> x_rtn);

struct MsEdenOptions {
  GridMax grid_max{6.0};
  /// Use scale32 = 2^k (smallest k with every pseudo-scale / 2^k <= 256)
  /// instead of absmax / (s * 256). Makes the single pass interchangeable
  /// with the two-pass post-hoc pipeline.
  bool pow2_global_scale = false;
};

struct MsEdenResult {
  NVFP4Tensor tensor;
  CorrectionFactors corrections;
};

/// Where the scale-rounding uniforms come from: group g reads
/// prng_uniform(seed, stream, g, domain).
struct RoundingStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  PrngDomain domain = PrngDomain::kScaleRounding;
};

/// Steps 2-4 on an already rotated vector (length multiple of 128).
MsEdenResult ms_eden_quantize_rotated(std::span<const double> x_rht,
                                      const RoundingStream& rounding,
                                      const MsEdenOptions& opts = {});

/// Full MS-EDEN: signs from (seeds.rht, tensor_id), scale rounding from
/// (seeds.sr, tensor_id). Throws std::invalid_argument when the length is
/// not a multiple of 128 and std::overflow_error when a corrected scale
/// exceeds 448.
MsEdenResult ms_eden_quantize(std::span<const double> x, SeedPair seeds,
                              std::uint64_t tensor_id, const MsEdenOptions& opts = {});

/// Exponent k of the power-of-two global scale: the smallest integer with
/// round_e8m3(global_absmax / s) / 2^k <= 256. Zero for a zero tensor.
int pow2_scale_exponent(double global_absmax, GridMax s);

/// Rotates each row of m (cols % 128 == 0) with the shared sign vector.
Matrix rotate_rows(const Matrix& m, const SignVector& signs);

/// Quantizes a [M x K] and b [N x K] along K with one shared rotation
/// (signs from (seeds.rht, gemm_id)) and independent scale-rounding streams,
/// so that dequantize(a') * dequantize(b')^T estimates a * b^T unbiasedly.
std::pair<NVFP4Tensor, NVFP4Tensor> ms_eden_estimate_pair(const Matrix& a, const Matrix& b,
                                                          SeedPair seeds,
                                                          std::uint64_t gemm_id,
                                                          const MsEdenOptions& opts = {});

}  // namespace nvfp4

#endif  // NVFP4_MS_EDEN_HPP

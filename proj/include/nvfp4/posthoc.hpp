#ifndef NVFP4_POSTHOC_HPP
#define NVFP4_POSTHOC_HPP

// Two-pass MS-EDEN with post-hoc range alignment.
//
// Pass 1 rotates, picks per-group pseudo-scales in E8M3 (no dependence on the
// global absmax), rounds the elements to FP4 and reduces the global absmax and
// the per-chunk correction factors in the same sweep. Pass 2 touches scales
// only: it shifts every pseudo-scale by one power of two into the E4M3 range,
// multiplies in the correction and rounds stochastically to E4M3.
//
// Since the shift is a power of two it never re-rounds a pseudo-scale, so the
// pipeline reproduces ms_eden_quantize with pow2_global_scale exactly, as
// long as no shifted pseudo-scale lands in the E4M3 subnormal range.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nvfp4/formats.hpp"
#include "nvfp4/ms_eden.hpp"
#include "nvfp4/quantizers.hpp"

namespace nvfp4 {

/// FP4 codes with E8M3 pseudo-scales, before global range alignment.
struct ErNvfp4Tensor {
  std::vector<Fp4Code> fp4;
  std::vector<E8M3Value> pseudo_scales;  // one per 16-group; zero iff the group is zero
  Shape shape;

  friend bool operator==(const ErNvfp4Tensor&, const ErNvfp4Tensor&) = default;
};

struct Pass1Reductions {
  double global_absmax = 0.0;  // of the rotated tensor
  CorrectionFactors corrections;
};

struct Pass1Result {
  ErNvfp4Tensor tensor;
  Pass1Reductions reductions;
};

/// Throws std::invalid_argument unless x.size() % 128 == 0.
Pass1Result posthoc_pass1(std::span<const double> x, std::uint64_t seed_rht, GridMax s,
                          std::uint64_t tensor_id);

/// Group g reads its rounding uniform from (seed_sr, tensor_id, g) in the
/// scale-rounding domain, matching ms_eden_quantize. Throws
/// std::overflow_error when a corrected shifted scale exceeds 448.
NVFP4Tensor posthoc_pass2(const ErNvfp4Tensor& er, const Pass1Reductions& red,
                          std::uint64_t seed_sr, std::uint64_t tensor_id,
                          GridMax s = GridMax(6.0));

enum class Pipeline { kNaive, kPostHoc };

/// Traffic of one kernel, in bits per tensor element.
struct KernelCost {
  double gmem_to_sm = 0.0;
  double sm_to_gmem = 0.0;
};

struct CostReport {
  Pipeline pipeline = Pipeline::kNaive;
  KernelCost kernel1;
  KernelCost kernel2;
  int mma_calls_per_group = 0;

  double total_bits() const {
    return kernel1.gmem_to_sm + kernel1.sm_to_gmem + kernel2.gmem_to_sm + kernel2.sm_to_gmem;
  }
};

/// Storage widths the accounting is computed from.
/// The re-quantized input is itself NVFP4.
struct CostParams {
  double element_bits = 4.0;        // FP4 code
  double scale_bits = 8.0;          // E4M3 group scale
  double pseudo_scale_bits = 16.0;  // E8M3 in a bfloat16 carrier
  std::size_t group_size = kGroupSize;
};

/// naive:   kernel 1 loads and rotates the input to reduce the absmax and
///          the corrections, writing nothing per element; kernel 2 loads and
///          rotates it again and writes NVFP4. Two mma per group.
/// posthoc: kernel 1 loads and rotates once and writes ER-NVFP4; kernel 2
///          reads pseudo-scales and writes E4M3 scales. One mma per group.
CostReport cost_model(Pipeline pipeline, const CostParams& params = {});

/// Relative bandwidth saving of post-hoc over naive.
double cost_saving(const CostParams& params = {});

std::string to_string(Pipeline p);

}  // namespace nvfp4

#endif  // NVFP4_POSTHOC_HPP

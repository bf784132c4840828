#include "nvfp4/posthoc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nvfp4/prng.hpp"
#include "nvfp4/rht.hpp"

namespace nvfp4 {
namespace {

constexpr std::size_t kGroupsPerChunk = kRotationChunk / kGroupSize;

}  // namespace

Pass1Result posthoc_pass1(std::span<const double> x, std::uint64_t seed_rht, GridMax s,
                          std::uint64_t tensor_id) {
  if (x.size() % kRotationChunk != 0) {
    throw std::invalid_argument("posthoc_pass1: length " + std::to_string(x.size()) +
                                " is not a multiple of 128");
  }
  const std::vector<double> xr = rht_apply(x, SignVector::from_seed(seed_rht, tensor_id));
  const std::size_t groups = xr.size() / kGroupSize;

  Pass1Result out;
  ErNvfp4Tensor& er = out.tensor;
  er.fp4.assign(xr.size(), Fp4Code{});
  er.pseudo_scales.assign(groups, E8M3Value{});
  er.shape = Shape{1, xr.size()};

  std::vector<double> deq(xr.size(), 0.0);
  double global_absmax = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto group = std::span<const double>(xr).subspan(g * kGroupSize, kGroupSize);
    double gabs = 0.0;
    for (double v : group) gabs = std::max(gabs, std::fabs(v));
    global_absmax = std::max(global_absmax, gabs);
    const E8M3Value pseudo = round_e8m3_rtn(gabs / s.value());
    er.pseudo_scales[g] = pseudo;
    if (pseudo.value == 0.0) continue;
    for (std::size_t i = 0; i < kGroupSize; ++i) {
      const std::size_t j = g * kGroupSize + i;
      er.fp4[j] = encode_fp4_rtn(xr[j] / pseudo.value);
      deq[j] = decode(er.fp4[j]) * pseudo.value;
    }
  }

  out.reductions.global_absmax = global_absmax;
  const std::size_t chunks = xr.size() / kRotationChunk;
  out.reductions.corrections.s_chunk.resize(chunks);
  for (std::size_t h = 0; h < chunks; ++h) {
    out.reductions.corrections.s_chunk[h] =
        correction_factor(std::span<const double>(xr).subspan(h * kRotationChunk, kRotationChunk),
                          std::span<const double>(deq).subspan(h * kRotationChunk, kRotationChunk));
  }
  return out;
}

NVFP4Tensor posthoc_pass2(const ErNvfp4Tensor& er, const Pass1Reductions& red,
                          std::uint64_t seed_sr, std::uint64_t tensor_id, GridMax s) {
  const std::size_t groups = er.pseudo_scales.size();
  if (er.fp4.size() != groups * kGroupSize ||
      red.corrections.s_chunk.size() * kGroupsPerChunk != groups) {
    throw std::invalid_argument("posthoc_pass2: pass-1 outputs have inconsistent sizes");
  }
  NVFP4Tensor t;
  t.fp4 = er.fp4;
  t.scales8.assign(groups, Fp8Code{});
  t.shape = er.shape;
  if (red.global_absmax == 0.0) return t;

  const int k = pow2_scale_exponent(red.global_absmax, s);
  t.scale32 = std::ldexp(1.0f, k);
  std::vector<double> u(groups);
  fill_uniform(seed_sr, tensor_id, PrngDomain::kScaleRounding, 0, u);
  for (std::size_t g = 0; g < groups; ++g) {
    const double shifted = std::ldexp(er.pseudo_scales[g].value, -k);
    const double corrected = red.corrections.s_chunk[g / kGroupsPerChunk] * shifted;
    if (corrected > kFp8Max) {
      throw std::overflow_error("posthoc_pass2: corrected scale " + std::to_string(corrected) +
                                " exceeds 448");
    }
    t.scales8[g] = encode_fp8_sr(corrected, u[g]);
  }
  return t;
}

CostReport cost_model(Pipeline pipeline, const CostParams& p) {
  const double g = static_cast<double>(p.group_size);
  const double nvfp4 = p.element_bits + p.scale_bits / g;
  CostReport r;
  r.pipeline = pipeline;
  if (pipeline == Pipeline::kNaive) {
    r.kernel1 = {nvfp4, 0.0};
    r.kernel2 = {nvfp4, nvfp4};
    r.mma_calls_per_group = 2;
  } else {
    r.kernel1 = {nvfp4, p.element_bits + p.pseudo_scale_bits / g};
    r.kernel2 = {p.pseudo_scale_bits / g, p.scale_bits / g};
    r.mma_calls_per_group = 1;
  }
  return r;
}

double cost_saving(const CostParams& params) {
  return 1.0 - cost_model(Pipeline::kPostHoc, params).total_bits() /
                   cost_model(Pipeline::kNaive, params).total_bits();
}

std::string to_string(Pipeline p) { return p == Pipeline::kNaive ? "naive" : "posthoc"; }

}  // namespace nvfp4

#include "nvfp4/ms_eden.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nvfp4 {
namespace {

constexpr std::size_t kGroupsPerChunk = kRotationChunk / kGroupSize;

void check_rotation_length(std::size_t n, const char* what) {
  if (n % kRotationChunk != 0) {
    throw std::invalid_argument(std::string(what) + ": length " + std::to_string(n) +
                                " is not a multiple of 128");
  }
}

double absmax(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace

double correction_factor(std::span<const double> x_rht, std::span<const double> x_rtn) {
  if (x_rht.size() != x_rtn.size()) {
    throw std::invalid_argument("correction_factor: length mismatch");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < x_rht.size(); ++i) {
    num += x_rht[i] * x_rht[i];
    den += x_rht[i] * x_rtn[i];
  }
  if (num == 0.0 || !(std::fabs(den) >= 1e-30 * num)) return 1.0;
  return num / den;
}

int pow2_scale_exponent(double global_absmax, GridMax s) {
  const double top = round_e8m3_rtn(global_absmax / s.value()).value;
  if (top == 0.0) return 0;
  int e = 0;
  std::frexp(top, &e);
  int k = e - 1 - 8;  // top / 2^k in [256, 512)
  if (std::ldexp(top, -k) > kRtnScaleCap) ++k;
  return k;
}

MsEdenResult ms_eden_quantize_rotated(std::span<const double> x_rht,
                                      const RoundingStream& rounding,
                                      const MsEdenOptions& opts) {
  check_rotation_length(x_rht.size(), "ms_eden_quantize");
  const double amax = absmax(x_rht);
  float scale32 = 0.0f;
  if (amax > 0.0) {
    scale32 = opts.pow2_global_scale
                  ? std::ldexp(1.0f, pow2_scale_exponent(amax, opts.grid_max))
                  : static_cast<float>(amax / (opts.grid_max.value() * kRtnScaleCap));
  }

  MsEdenResult result;
  result.tensor = quantize_rtn_fixed_scale(x_rht, opts.grid_max, scale32);
  NVFP4Tensor& t = result.tensor;
  const std::vector<double> x_rtn = dequantize(t);

  const std::size_t chunks = x_rht.size() / kRotationChunk;
  result.corrections.s_chunk.resize(chunks);
  for (std::size_t h = 0; h < chunks; ++h) {
    result.corrections.s_chunk[h] =
        correction_factor(x_rht.subspan(h * kRotationChunk, kRotationChunk),
                          std::span<const double>(x_rtn).subspan(h * kRotationChunk, kRotationChunk));
  }

  std::vector<double> u(t.groups());
  fill_uniform(rounding.seed, rounding.stream, rounding.domain, 0, u);
  for (std::size_t g = 0; g < t.groups(); ++g) {
    const double corrected = result.corrections.s_chunk[g / kGroupsPerChunk] * decode(t.scales8[g]);
    if (corrected > kFp8Max) {
      throw std::overflow_error("ms_eden_quantize: corrected scale " + std::to_string(corrected) +
                                " exceeds 448; the 256 scale ceiling should leave headroom");
    }
    t.scales8[g] = encode_fp8_sr(corrected, u[g]);
  }
  return result;
}

MsEdenResult ms_eden_quantize(std::span<const double> x, SeedPair seeds,
                              std::uint64_t tensor_id, const MsEdenOptions& opts) {
  check_rotation_length(x.size(), "ms_eden_quantize");
  const std::vector<double> x_rht = rht_apply(x, SignVector::from_seed(seeds.rht, tensor_id));
  return ms_eden_quantize_rotated(x_rht, RoundingStream{seeds.sr, tensor_id}, opts);
}

Matrix rotate_rows(const Matrix& m, const SignVector& signs) {
  if (m.cols() % signs.size() != 0) {
    throw std::invalid_argument("rotate_rows: column count " + std::to_string(m.cols()) +
                                " is not a multiple of the rotation chunk");
  }
  Matrix out = m;
  rht_apply_inplace(out.data(), signs);
  return out;
}

std::pair<NVFP4Tensor, NVFP4Tensor> ms_eden_estimate_pair(const Matrix& a, const Matrix& b,
                                                          SeedPair seeds,
                                                          std::uint64_t gemm_id,
                                                          const MsEdenOptions& opts) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("ms_eden_estimate_pair: inner dimensions differ (" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) + ")");
  }
  check_rotation_length(a.cols(), "ms_eden_estimate_pair");
  const SignVector signs = SignVector::from_seed(seeds.rht, gemm_id);
  const Matrix ra = rotate_rows(a, signs);
  const Matrix rb = rotate_rows(b, signs);
  NVFP4Tensor qa =
      ms_eden_quantize_rotated(ra.data(), {seeds.sr, gemm_id, PrngDomain::kScaleRounding}, opts)
          .tensor;
  NVFP4Tensor qb =
      ms_eden_quantize_rotated(rb.data(), {seeds.sr, gemm_id, PrngDomain::kScaleRoundingB}, opts)
          .tensor;
  return {with_shape(std::move(qa), a.shape(), GroupLayout::kRowMajor),
          with_shape(std::move(qb), b.shape(), GroupLayout::kRowMajor)};
}

}  // namespace nvfp4

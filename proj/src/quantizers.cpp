#include "nvfp4/quantizers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "nvfp4/prng.hpp"

namespace nvfp4 {
namespace {

void check_grouped(std::size_t n, const char* what) {
  if (n % kGroupSize != 0) {
    throw std::invalid_argument(std::string(what) + ": length " + std::to_string(n) +
                                " is not a multiple of 16");
  }
}

double absmax(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

NVFP4Tensor empty_tensor(std::size_t n) {
  NVFP4Tensor t;
  t.fp4.assign(n, Fp4Code{});
  t.scales8.assign(n / kGroupSize, Fp8Code{});
  t.shape = Shape{1, n};
  return t;
}

// RTN-encodes one group under a fixed scale code; returns the squared error
// of the dequantized group.
double encode_group_rtn(std::span<const double> group, Fp8Code scale, double scale32,
                        std::span<Fp4Code> out) {
  const double denom = decode(scale) * scale32;
  double err = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    out[i] = denom > 0.0 ? encode_fp4_rtn(group[i] / denom) : Fp4Code{};
    const double d = group[i] - decode(out[i]) * denom;
    err += d * d;
  }
  return err;
}

// Group scale for stochastic rounding: nearest E4M3 of the target, stepped up
// while the largest quotient would still exceed the FP4 ceiling. The step only
// triggers when the target falls in the E4M3 subnormal range, where the 16/17
// guard no longer bounds the rounding error.
Fp8Code no_clip_scale(double group_absmax, double scale32, double ceiling) {
  Fp8Code code = encode_fp8_rtn(group_absmax / (scale32 * ceiling));
  while (code.bits < kFp8MaxCode && group_absmax / (decode(code) * scale32) > kFp4Max) {
    ++code.bits;
  }
  return code;
}

// Squared error of one group after stochastic rounding under `scale`.
double encode_group_sr(std::span<const double> group, std::span<const double> u,
                       Fp8Code scale, double scale32, std::span<Fp4Code> out) {
  const double denom = decode(scale) * scale32;
  double err = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (denom > 0.0) {
      const double q = group[i] / denom;
      if (std::fabs(q) > kFp4Max) {
        throw QuantizationError("quantize_sr: quotient " + std::to_string(q) +
                                " exceeds 6.0; the no-clip scale construction failed");
      }
      out[i] = encode_fp4_sr(q, u[i]);
    } else {
      out[i] = Fp4Code{};
    }
    const double d = group[i] - decode(out[i]) * denom;
    err += d * d;
  }
  return err;
}

void check_finite(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite input");
  }
}

}  // namespace

GridMax::GridMax(double s) : s_(s) {
  if (!(s > 0.0 && s <= kFp4Max)) {
    throw std::invalid_argument("GridMax: s must satisfy 0 < s <= 6, got " + std::to_string(s));
  }
}

NVFP4Tensor quantize_rtn_fixed_scale(std::span<const double> x, GridMax s, float scale32_f) {
  check_grouped(x.size(), "quantize_rtn");
  NVFP4Tensor t = empty_tensor(x.size());
  t.scale32 = scale32_f;
  if (t.scale32 == 0.0f) return t;
  const double scale32 = t.scale32;
  for (std::size_t g = 0; g < t.groups(); ++g) {
    const auto group = x.subspan(g * kGroupSize, kGroupSize);
    t.scales8[g] = encode_fp8_rtn(absmax(group) / (scale32 * s.value()));
    encode_group_rtn(group, t.scales8[g], scale32,
                     std::span<Fp4Code>(t.fp4).subspan(g * kGroupSize, kGroupSize));
  }
  return t;
}

NVFP4Tensor quantize_rtn(std::span<const double> x, GridMax s, double scale_cap) {
  check_grouped(x.size(), "quantize_rtn");
  return quantize_rtn_fixed_scale(x, s, static_cast<float>(absmax(x) / (s.value() * scale_cap)));
}

NVFP4Tensor quantize_rtn_46(std::span<const double> x, const FourOverSix& opts) {
  check_grouped(x.size(), "quantize_rtn_46");
  NVFP4Tensor t = empty_tensor(x.size());
  t.scale32 = static_cast<float>(absmax(x) / (opts.scale_cap * kFp8Max));
  if (t.scale32 == 0.0f) return t;
  const double scale32 = t.scale32;
  std::array<Fp4Code, kGroupSize> low_codes;
  for (std::size_t g = 0; g < t.groups(); ++g) {
    const auto group = x.subspan(g * kGroupSize, kGroupSize);
    const auto out = std::span<Fp4Code>(t.fp4).subspan(g * kGroupSize, kGroupSize);
    const double gmax = absmax(group);
    const Fp8Code high = encode_fp8_rtn(gmax / (scale32 * opts.high));
    const Fp8Code low = encode_fp8_rtn(gmax / (scale32 * opts.low));
    const double err_high = encode_group_rtn(group, high, scale32, out);
    const double err_low = encode_group_rtn(group, low, scale32, low_codes);
    t.scales8[g] = high;
    if (err_low < err_high) {
      t.scales8[g] = low;
      std::copy(low_codes.begin(), low_codes.end(), out.begin());
    }
  }
  return t;
}

NVFP4Tensor quantize_sr(std::span<const double> x, std::uint64_t seed, std::uint64_t stream) {
  check_grouped(x.size(), "quantize_sr");
  check_finite(x, "quantize_sr");
  NVFP4Tensor t = empty_tensor(x.size());
  constexpr double kCeiling = kFp4Max * kFp8RoundingGuard;
  t.scale32 = static_cast<float>(absmax(x) / (kCeiling * kFp8Max));
  if (t.scale32 == 0.0f) return t;
  const double scale32 = t.scale32;
  std::vector<double> u(x.size());
  fill_uniform(seed, stream, PrngDomain::kElementRounding, 0, u);
  for (std::size_t g = 0; g < t.groups(); ++g) {
    const auto group = x.subspan(g * kGroupSize, kGroupSize);
    t.scales8[g] = no_clip_scale(absmax(group), scale32, kCeiling);
    encode_group_sr(group, std::span<const double>(u).subspan(g * kGroupSize, kGroupSize),
                    t.scales8[g], scale32,
                    std::span<Fp4Code>(t.fp4).subspan(g * kGroupSize, kGroupSize));
  }
  return t;
}

NVFP4Tensor quantize_sr_46(std::span<const double> x, std::uint64_t seed,
                           std::uint64_t stream) {
  check_grouped(x.size(), "quantize_sr_46");
  check_finite(x, "quantize_sr_46");
  NVFP4Tensor t = empty_tensor(x.size());
  constexpr double kHigh = 6.0 * kFp8RoundingGuard;
  constexpr double kLow = 4.0 * kFp8RoundingGuard;
  t.scale32 = static_cast<float>(absmax(x) / (kHigh * kFp8Max));
  if (t.scale32 == 0.0f) return t;
  const double scale32 = t.scale32;
  std::vector<double> u_high(x.size());
  std::vector<double> u_low(x.size());
  fill_uniform(seed, stream, PrngDomain::kElementRounding, 0, u_high);
  fill_uniform(seed, stream, PrngDomain::kElementRoundingB, 0, u_low);
  std::array<Fp4Code, kGroupSize> low_codes;
  for (std::size_t g = 0; g < t.groups(); ++g) {
    const std::size_t off = g * kGroupSize;
    const auto group = x.subspan(off, kGroupSize);
    const auto out = std::span<Fp4Code>(t.fp4).subspan(off, kGroupSize);
    const double gmax = absmax(group);
    const Fp8Code high = no_clip_scale(gmax, scale32, kHigh);
    const Fp8Code low = no_clip_scale(gmax, scale32, kLow);
    const double err_high = encode_group_sr(
        group, std::span<const double>(u_high).subspan(off, kGroupSize), high, scale32, out);
    const double err_low = encode_group_sr(
        group, std::span<const double>(u_low).subspan(off, kGroupSize), low, scale32, low_codes);
    t.scales8[g] = high;
    if (err_low < err_high) {
      t.scales8[g] = low;
      std::copy(low_codes.begin(), low_codes.end(), out.begin());
    }
  }
  return t;
}

SquareBlockTensor quantize_square_block(const Matrix& x, bool use_46) {
  if (x.rows() % kGroupSize != 0 || x.cols() % kGroupSize != 0) {
    throw std::invalid_argument("quantize_square_block: dimensions must be multiples of 16");
  }
  const std::size_t brows = x.rows() / kGroupSize;
  const std::size_t bcols = x.cols() / kGroupSize;
  SquareBlockTensor t;
  t.shape = x.shape();
  t.fp4.assign(x.size(), Fp4Code{});
  t.scales8.assign(brows * bcols, Fp8Code{});
  constexpr double kHigh = 6.0;
  constexpr double kLow = 4.0;
  t.scale32 = static_cast<float>(absmax(x.data()) / (kHigh * kRtnScaleCap));
  if (t.scale32 == 0.0f) return t;
  const double scale32 = t.scale32;

  std::array<double, kGroupSize * kGroupSize> block;
  std::array<Fp4Code, kGroupSize * kGroupSize> high_codes;
  std::array<Fp4Code, kGroupSize * kGroupSize> low_codes;
  for (std::size_t br = 0; br < brows; ++br) {
    for (std::size_t bc = 0; bc < bcols; ++bc) {
      for (std::size_t r = 0; r < kGroupSize; ++r) {
        for (std::size_t c = 0; c < kGroupSize; ++c) {
          block[r * kGroupSize + c] = x(br * kGroupSize + r, bc * kGroupSize + c);
        }
      }
      const double bmax = absmax(block);
      Fp8Code scale = encode_fp8_rtn(bmax / (scale32 * kHigh));
      const double err_high = encode_group_rtn(block, scale, scale32, high_codes);
      const Fp4Code* chosen = high_codes.data();
      if (use_46) {
        const Fp8Code low = encode_fp8_rtn(bmax / (scale32 * kLow));
        if (encode_group_rtn(block, low, scale32, low_codes) < err_high) {
          scale = low;
          chosen = low_codes.data();
        }
      }
      t.scales8[br * bcols + bc] = scale;
      for (std::size_t r = 0; r < kGroupSize; ++r) {
        for (std::size_t c = 0; c < kGroupSize; ++c) {
          t.fp4[(br * kGroupSize + r) * x.cols() + bc * kGroupSize + c] =
              chosen[r * kGroupSize + c];
        }
      }
    }
  }
  return t;
}

SquareBlockTensor SquareBlockTensor::transposed() const {
  SquareBlockTensor t;
  t.shape = Shape{shape.cols, shape.rows};
  t.scale32 = scale32;
  t.fp4.resize(fp4.size());
  for (std::size_t r = 0; r < shape.rows; ++r) {
    for (std::size_t c = 0; c < shape.cols; ++c) t.fp4[c * shape.rows + r] = fp4[r * shape.cols + c];
  }
  const std::size_t brows = shape.rows / kGroupSize;
  const std::size_t bcols = shape.cols / kGroupSize;
  t.scales8.resize(scales8.size());
  for (std::size_t r = 0; r < brows; ++r) {
    for (std::size_t c = 0; c < bcols; ++c) t.scales8[c * brows + r] = scales8[r * bcols + c];
  }
  return t;
}

std::vector<double> dequantize(const NVFP4Tensor& t) {
  std::vector<double> out(t.size());
  const double scale32 = t.scale32;
  for (std::size_t g = 0; g < t.groups(); ++g) {
    const double denom = decode(t.scales8[g]) * scale32;
    for (std::size_t i = g * kGroupSize; i < (g + 1) * kGroupSize; ++i) {
      out[i] = decode(t.fp4[i]) * denom;
    }
  }
  return out;
}

Matrix dequantize_matrix(const NVFP4Tensor& t) {
  std::vector<double> storage = dequantize(t);
  if (t.layout == GroupLayout::kRowMajor) {
    return Matrix(t.shape.rows, t.shape.cols, std::move(storage));
  }
  return Matrix(t.shape.cols, t.shape.rows, std::move(storage)).transposed();
}

Matrix dequantize(const SquareBlockTensor& t) {
  Matrix out(t.shape.rows, t.shape.cols);
  const std::size_t bcols = t.shape.cols / kGroupSize;
  const double scale32 = t.scale32;
  for (std::size_t r = 0; r < t.shape.rows; ++r) {
    for (std::size_t c = 0; c < t.shape.cols; ++c) {
      const double denom = decode(t.scales8[(r / kGroupSize) * bcols + c / kGroupSize]) * scale32;
      out(r, c) = decode(t.fp4[r * t.shape.cols + c]) * denom;
    }
  }
  return out;
}

std::vector<double> group_storage(const Matrix& m, GroupLayout layout) {
  if (layout == GroupLayout::kRowMajor) return {m.data().begin(), m.data().end()};
  const Matrix t = m.transposed();
  return {t.data().begin(), t.data().end()};
}

NVFP4Tensor with_shape(NVFP4Tensor t, Shape shape, GroupLayout layout) {
  if (shape.size() != t.size()) {
    throw std::invalid_argument("with_shape: shape does not match element count");
  }
  const std::size_t run = layout == GroupLayout::kRowMajor ? shape.cols : shape.rows;
  if (run % kGroupSize != 0) {
    throw std::invalid_argument("with_shape: group axis length must be a multiple of 16");
  }
  t.shape = shape;
  t.layout = layout;
  return t;
}

}  // namespace nvfp4

#include "nvfp4/formats.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <string>

namespace nvfp4 {
namespace {

constexpr std::uint8_t kFp4SignBit = 0x8;
constexpr std::uint8_t kFp8SignBit = 0x80;

// floor(log2(x)) for finite x > 0.
int floor_log2(double x) {
  int exp = 0;
  std::frexp(x, &exp);
  return exp - 1;
}

// Index into kFp4Magnitudes of the nearest magnitude, ties to even code.
// Decision points are the midpoints between neighbouring grid values;
// a midpoint belongs to whichever neighbour has mantissa bit 0.
std::uint8_t fp4_magnitude_rtn(double a) {
  if (a <= 0.25) return 0;  // tie 0 | 0.5   -> 0
  if (a < 0.75) return 1;   // tie 0.5 | 1   -> 1
  if (a <= 1.25) return 2;  // tie 1 | 1.5   -> 1
  if (a < 1.75) return 3;   // tie 1.5 | 2   -> 2
  if (a <= 2.5) return 4;   // tie 2 | 3     -> 2
  if (a < 3.5) return 5;    // tie 3 | 4     -> 4
  if (a <= 5.0) return 6;   // tie 4 | 6     -> 4
  return 7;
}

// Largest magnitude index whose value is <= a, for a in [0, 6].
std::uint8_t fp4_magnitude_floor(double a) {
  std::uint8_t idx = 0;
  while (idx < 7 && kFp4Magnitudes[idx + 1] <= a) ++idx;
  return idx;
}

// Code of an exactly representable non-negative E4M3 value.
std::uint8_t fp8_code_of(double v) {
  if (v < kFp8MinNormal) {
    // Subnormal: v = m * 2^-9, m in [0, 8]; m == 8 is the first normal code.
    return static_cast<std::uint8_t>(std::lround(v / kFp8MinSubnormal));
  }
  const int e = floor_log2(v);
  const auto m = static_cast<int>(std::lround(std::ldexp(v, 3 - e))) - 8;
  return static_cast<std::uint8_t>(((e + 7) << 3) | m);
}

// Quantum (spacing) of the E4M3 grid around a non-negative value.
double fp8_quantum(double v) {
  if (v < kFp8MinNormal) return kFp8MinSubnormal;
  return std::ldexp(1.0, floor_log2(v) - 3);
}

}  // namespace

double decode(Fp4Code code) {
  const double mag = kFp4Magnitudes[code.bits & 0x7];
  return (code.bits & kFp4SignBit) ? -mag : mag;
}

double decode(Fp8Code code) {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int c = 0; c < 256; ++c) {
      const int exp = (c >> 3) & 0xF;
      const int man = c & 0x7;
      if (exp == 0xF && man == 0x7) {
        t[c] = std::nan("");
        continue;
      }
      const double mag = exp == 0 ? std::ldexp(man, -9) : std::ldexp(8 + man, exp - 10);
      t[c] = (c & kFp8SignBit) ? -mag : mag;
    }
    return t;
  }();
  return table[code.bits];
}

Fp4Code encode_fp4_rtn(double x) {
  if (std::isnan(x)) throw FormatError("encode_fp4_rtn: NaN input");
  const std::uint8_t sign = std::signbit(x) ? kFp4SignBit : 0;
  return Fp4Code{static_cast<std::uint8_t>(sign | fp4_magnitude_rtn(std::fabs(x)))};
}

Fp4Code encode_fp4_sr(double x, double u) {
  if (!(std::fabs(x) <= kFp4Max)) {
    throw FormatError("encode_fp4_sr: |x| = " + std::to_string(x) +
                      " exceeds 6.0; would clip, unbiasedness broken");
  }
  const std::uint8_t sign = std::signbit(x) ? kFp4SignBit : 0;
  const double a = std::fabs(x);
  const std::uint8_t lo = fp4_magnitude_floor(a);
  if (kFp4Magnitudes[lo] == a) return Fp4Code{static_cast<std::uint8_t>(sign | lo)};

  // Round toward +inf with probability (x - a)/(b - a) on the signed axis.
  // For negative x that is the probability of the smaller magnitude.
  const double p_up_mag = (a - kFp4Magnitudes[lo]) /
                          (kFp4Magnitudes[lo + 1] - kFp4Magnitudes[lo]);
  const bool take_larger = sign ? !(u < 1.0 - p_up_mag) : (u < p_up_mag);
  const auto mag = static_cast<std::uint8_t>(take_larger ? lo + 1 : lo);
  return Fp4Code{static_cast<std::uint8_t>(sign | mag)};
}

Fp8Code encode_fp8_rtn(double x) {
  if (std::isnan(x) || x < 0.0) {
    throw FormatError("encode_fp8_rtn: input must be a non-negative number");
  }
  if (x >= kFp8Max) return Fp8Code{kFp8MaxCode};
  const double q = fp8_quantum(x);
  const double rounded = std::nearbyint(x / q) * q;
  if (rounded > kFp8Max) return Fp8Code{kFp8MaxCode};
  return Fp8Code{fp8_code_of(rounded)};
}

Fp8Code encode_fp8_sr(double x, double u) {
  if (std::isnan(x) || x < 0.0) {
    throw FormatError("encode_fp8_sr: input must be a non-negative number");
  }
  if (x > kFp8Max) {
    throw FormatError("encode_fp8_sr: EDEN-corrected scale " + std::to_string(x) +
                      " overflowed FP8; check grid cap");
  }
  if (x < kFp8MinNormal) return encode_fp8_rtn(x);
  const double q = fp8_quantum(x);
  const double lo = std::floor(x / q) * q;
  if (lo == x) return Fp8Code{fp8_code_of(x)};
  const double p = (x - lo) / q;
  return Fp8Code{fp8_code_of(u < p ? lo + q : lo)};
}

std::uint16_t E8M3Value::bf16_bits() const {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  return static_cast<std::uint16_t>(bits >> 16);
}

E8M3Value E8M3Value::from_bf16_bits(std::uint16_t bits) {
  const auto wide = static_cast<std::uint32_t>(bits) << 16;
  return E8M3Value{static_cast<double>(std::bit_cast<float>(wide))};
}

E8M3Value round_e8m3_rtn(double x) {
  if (std::isnan(x) || x < 0.0 || std::isinf(x)) {
    throw FormatError("round_e8m3_rtn: input must be finite and non-negative");
  }
  if (x == 0.0) return E8M3Value{0.0};
  int e = floor_log2(x);
  if (e < -126) e = -126;
  const double q = std::ldexp(1.0, e - 3);
  const double rounded = std::nearbyint(x / q) * q;
  if (rounded >= std::ldexp(1.0, 128)) {
    throw FormatError("round_e8m3_rtn: overflow beyond the bfloat16 carrier range");
  }
  return E8M3Value{rounded};
}

}  // namespace nvfp4

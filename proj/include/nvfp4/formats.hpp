#ifndef NVFP4_FORMATS_HPP
#define NVFP4_FORMATS_HPP

// Scalar codecs for the three element/scale formats used by NVFP4:
//
//   E2M1  4-bit element  grid {0, 0.5, 1, 1.5, 2, 3, 4, 6} with sign
//   E4M3  8-bit scale    OCP FP8, bias 7, max 448, no infinities
//   E8M3  pseudo-scale   3 mantissa bits with a bfloat16 exponent range
//
// Round-to-nearest encoders break ties toward the even mantissa bit.
// Stochastic encoders take the uniform sample explicitly so callers control
// where the randomness comes from.

#include <array>
#include <cstdint>
#include <stdexcept>

namespace nvfp4 {

/// 4-bit E2M1 code: bit 3 sign, bits 2..1 exponent, bit 0 mantissa.
struct Fp4Code {
  std::uint8_t bits = 0;

  friend constexpr bool operator==(Fp4Code, Fp4Code) = default;
};

/// 8-bit E4M3 code. 0x7F / 0xFF are NaN and never produced by the encoders.
struct Fp8Code {
  std::uint8_t bits = 0;

  friend constexpr bool operator==(Fp8Code, Fp8Code) = default;
};

inline constexpr double kFp4Max = 6.0;
inline constexpr double kFp8Max = 448.0;
inline constexpr double kFp8MinNormal = 0.015625;          // 2^-6
inline constexpr double kFp8MinSubnormal = 0.001953125;    // 2^-9
inline constexpr std::uint8_t kFp8MaxCode = 0x7E;

/// Non-negative E2M1 magnitudes, indexed by the low three code bits.
inline constexpr std::array<double, 8> kFp4Magnitudes = {0.0, 0.5, 1.0, 1.5,
                                                         2.0, 3.0, 4.0, 6.0};

/// Thrown when an encoder receives an input outside its contract.
class FormatError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

double decode(Fp4Code code);
double decode(Fp8Code code);

/// Nearest E2M1 value, ties to even mantissa, saturating at +-6.
/// Throws FormatError on NaN.
Fp4Code encode_fp4_rtn(double x);

/// Stochastic E2M1 rounding with sample u in [0, 1). For a < x < b adjacent
/// grid points the result is b iff u < (x - a) / (b - a). Throws FormatError
/// when |x| > 6, since clipping would break unbiasedness.
Fp4Code encode_fp4_sr(double x, double u);

/// Nearest E4M3 value of a non-negative input, ties to even, saturating at
/// 448. Subnormals are represented. Throws FormatError on NaN or x < 0.
Fp8Code encode_fp8_rtn(double x);

/// Stochastic E4M3 rounding of x in [0, 448]. Inputs below the smallest
/// normal (2^-6) are rounded to nearest instead.
Fp8Code encode_fp8_sr(double x, double u);

/// Pseudo-scale with a 3-bit mantissa and the bfloat16 exponent range.
/// Stored as the exact real it denotes; `bf16_bits` gives the carrier
/// encoding for I/O.
struct E8M3Value {
  double value = 0.0;

  std::uint16_t bf16_bits() const;
  static E8M3Value from_bf16_bits(std::uint16_t bits);

  friend constexpr bool operator==(E8M3Value, E8M3Value) = default;
};

/// Nearest E8M3 value (ties to even) of a non-negative finite input.
/// Exponents below -126 share the 2^-129 quantum. Throws FormatError on
/// negative/NaN input and on rounding past the carrier's largest binade.
E8M3Value round_e8m3_rtn(double x);

}  // namespace nvfp4

#endif  // NVFP4_FORMATS_HPP

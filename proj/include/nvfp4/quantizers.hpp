#ifndef NVFP4_QUANTIZERS_HPP
#define NVFP4_QUANTIZERS_HPP

// NVFP4 tensor quantizers.
//
// An NVFP4 tensor stores one E2M1 code per element, one E4M3 scale per 16
// consecutive elements and a single per-tensor scale, and represents
//
//   x[i] ~= decode(fp4[i]) * decode(scales8[i / 16]) * scale32.
//
// The quantizers differ in how the two scale levels are chosen and how the
// elements are rounded:
//
//   quantize_sr       scale32 = absmax / (6 * 16/17 * 448); stochastic
//                     elements; never clips; unbiased.
//   quantize_rtn      scale32 = absmax / (s * cap); nearest elements; may clip
//                     when s > 6 * 16/17.
//   quantize_rtn_46   per group, the better of grid ceilings 6 and 4.
//   quantize_sr_46    the same selection on top of stochastic rounding. The
//                     selection makes it biased; it exists for comparison.
//   quantize_square_block
//                     one scale per 16x16 block; transpose-compatible.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nvfp4/formats.hpp"
#include "nvfp4/matrix.hpp"

namespace nvfp4 {

inline constexpr std::size_t kGroupSize = 16;
/// Largest factor by which RTN to E4M3 can shrink a normal value.
inline constexpr double kFp8RoundingGuard = 16.0 / 17.0;
/// Scale ceiling leaving headroom for EDEN corrections (448 / 256 = 1.75).
inline constexpr double kRtnScaleCap = 256.0;

/// Grid ceiling targeted by the scale construction, 0 < s <= 6.
class GridMax {
 public:
  explicit GridMax(double s);
  double value() const { return s_; }

 private:
  double s_;
};

/// How the logical matrix maps onto group-contiguous storage.
enum class GroupLayout : std::uint8_t {
  kRowMajor = 0,  // groups run along columns; storage is row-major
  kColMajor = 1,  // groups run along rows; storage is column-major
};

struct NVFP4Tensor {
  std::vector<Fp4Code> fp4;
  std::vector<Fp8Code> scales8;
  float scale32 = 0.0f;
  Shape shape;
  GroupLayout layout = GroupLayout::kRowMajor;

  std::size_t size() const { return fp4.size(); }
  std::size_t groups() const { return scales8.size(); }

  friend bool operator==(const NVFP4Tensor&, const NVFP4Tensor&) = default;
};

struct SquareBlockTensor {
  std::vector<Fp4Code> fp4;      // row-major, shape.rows x shape.cols
  std::vector<Fp8Code> scales8;  // row-major, (rows/16) x (cols/16)
  float scale32 = 0.0f;
  Shape shape;

  /// Same representation of the transposed matrix; no requantization.
  SquareBlockTensor transposed() const;

  friend bool operator==(const SquareBlockTensor&, const SquareBlockTensor&) = default;
};

struct FourOverSix {
  double high = 6.0;
  double low = 4.0;
  /// Grid ceiling used to derive scale32 (= absmax / (scale_cap * 448)).
  double scale_cap = 6.0 * kFp8RoundingGuard;
};

class QuantizationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Stochastic-rounding quantizer. Uniforms come from
/// (seed, stream, element index) in the element-rounding domain.
/// Throws std::invalid_argument on length % 16 != 0 or non-finite input.
NVFP4Tensor quantize_sr(std::span<const double> x, std::uint64_t seed,
                        std::uint64_t stream = 0);

/// Clipping round-to-nearest quantizer.
NVFP4Tensor quantize_rtn(std::span<const double> x, GridMax s,
                         double scale_cap = kRtnScaleCap);

/// Round-to-nearest under a caller-chosen per-tensor scale: group scales
/// are E4M3(group absmax / (scale32 * s)). A zero scale32 yields all zeros.
NVFP4Tensor quantize_rtn_fixed_scale(std::span<const double> x, GridMax s, float scale32);

/// Four-over-Six round-to-nearest: per group, keep whichever of the 6- and
/// 4-ceiling candidates has the lower squared error after dequantization
/// (ties keep 6).
NVFP4Tensor quantize_rtn_46(std::span<const double> x, const FourOverSix& opts = {});

/// Four-over-Six selection over two stochastic-rounding branches with the
/// 16/17 guard on both ceilings. Biased.
NVFP4Tensor quantize_sr_46(std::span<const double> x, std::uint64_t seed,
                           std::uint64_t stream = 0);

/// 16x16 square-block round-to-nearest, scale32 = absmax / (6 * 256).
/// Throws std::invalid_argument unless both dimensions are multiples of 16.
SquareBlockTensor quantize_square_block(const Matrix& x, bool use_46);

/// Element values in storage order.
std::vector<double> dequantize(const NVFP4Tensor& t);
/// Logical matrix, undoing the storage layout.
Matrix dequantize_matrix(const NVFP4Tensor& t);
Matrix dequantize(const SquareBlockTensor& t);

/// Storage-order copy of a matrix for the given layout.
std::vector<double> group_storage(const Matrix& m, GroupLayout layout);

/// Attaches a logical shape and layout to a tensor produced from
/// group_storage(m, layout). Throws std::invalid_argument if the groups
/// would straddle a storage row.
NVFP4Tensor with_shape(NVFP4Tensor t, Shape shape, GroupLayout layout);

/// Convenience: group_storage + quantizer + with_shape.
template <typename Quantizer>
NVFP4Tensor quantize_matrix(const Matrix& m, GroupLayout layout, Quantizer&& quantize) {
  const std::vector<double> storage = group_storage(m, layout);
  return with_shape(quantize(std::span<const double>(storage)), m.shape(), layout);
}

}  // namespace nvfp4

#endif  // NVFP4_QUANTIZERS_HPP

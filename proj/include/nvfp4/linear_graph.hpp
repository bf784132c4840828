#ifndef NVFP4_LINEAR_GRAPH_HPP
#define NVFP4_LINEAR_GRAPH_HPP

// Emulated fully-quantized linear layer, Y = X W^T.
//
//   forward   Y  = Qf(X) Qf(W)^T                    (groups along in)
//   backward  dX = Q(E) Q(W^T)^T                    (groups along out)
//             dW = Q(E^T) Q(X^T)^T                  (groups along tokens)
//
// Backward operands start from the tape: the forward's quantized X and W,
// dequantized and transposed as needed. Which operands are quantized is set
// by the ablation:
//
//   a     dX = E W            dW = Q(E^T) Q(X^T)^T
//   b     dX = Q(E) W         dW = E^T X
//   c     dX = Q(E) Q(W^T)^T  dW = E^T X
//   d     dX = Q(E) W         dW = Q(E^T) Q(X^T)^T
//   e     dX = Q(E) Q(W^T)^T  dW = Q(E^T) Q(X^T)^T
//   full  e, or d when the forward weights are reused
//
// "W" without Q means the tape's weights as saved (no re-quantization).
// When both operands of a GEMM are quantized, rotating schemes apply a shared
// 128-chunk RHT along the inner dimension; it cancels in the product.

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "nvfp4/matrix.hpp"
#include "nvfp4/quantizers.hpp"
#include "nvfp4/rht.hpp"

namespace nvfp4::graph {

enum class ForwardScheme { kIdentity, kRtn1x16, kRtn1x16Fos, kRtn16x16, kRtn16x16Fos };
// kSrRhtFos applies Four-over-Six selection on the backward pass. It is
// biased and only exists to demonstrate that.
enum class BackwardScheme { kIdentity, kSr, kSrRht, kMsEden, kSrRhtFos };
enum class Ablation { kA, kB, kC, kD, kE, kFull };

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LayerConfig {
  ForwardScheme forward = ForwardScheme::kIdentity;
  BackwardScheme backward = BackwardScheme::kIdentity;
  Ablation ablation = Ablation::kFull;
  bool reuse_forward_weights = false;

  /// Throws ConfigError on an illegal combination.
  void validate() const;

  friend bool operator==(const LayerConfig&, const LayerConfig&) = default;
};

/// nvidia, tetrajet_v2, four_over_six, quartet2, identity, plus the biased
/// nvidia_46_backward comparison config. Throws ConfigError otherwise.
LayerConfig baseline_config(std::string_view name);

/// Key-value text form, one `key = value` per line; `#` starts a comment.
std::string to_text(const LayerConfig& cfg);
LayerConfig parse_config(std::string_view text);

std::string_view to_string(ForwardScheme s);
std::string_view to_string(BackwardScheme s);
std::string_view to_string(Ablation a);

using Operand = std::variant<Matrix, NVFP4Tensor, SquareBlockTensor>;

/// Logical matrix of an operand (dequantizing if needed).
Matrix materialize(const Operand& op);

/// a * b^T after dequantization. Throws std::invalid_argument on shape
/// mismatch.
Matrix gemm_emulated(const Operand& a, const Operand& b, Accumulate acc = Accumulate::kF32);

struct LinearTape {
  Operand x;  // [tokens x in], as quantized by the forward
  Operand w;  // [out x in]
  LayerConfig config;
};

struct ForwardResult {
  Matrix y;
  LinearTape tape;
};

ForwardResult forward(const Matrix& x, const Matrix& w, const LayerConfig& cfg,
                      Accumulate acc = Accumulate::kF32);

struct GradPair {
  Matrix dx;  // [tokens x in]; empty when not requested
  Matrix dw;  // [out x in]
};

struct BackwardOptions {
  Accumulate acc = Accumulate::kF32;
  bool input_grad = true;
};

inline constexpr std::uint64_t kInputGradGemm = 1;
inline constexpr std::uint64_t kWeightGradGemm = 2;

GradPair backward(const LinearTape& tape, const Matrix& e, const LayerConfig& cfg,
                  SeedPair seeds, const BackwardOptions& opts = {});

/// Per-step seeds derived from (run seed, step, layer).
SeedPair step_seeds(std::uint64_t run_seed, std::uint64_t step, std::uint64_t layer_id);

}  // namespace nvfp4::graph

#endif  // NVFP4_LINEAR_GRAPH_HPP

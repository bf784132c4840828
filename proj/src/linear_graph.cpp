#include "nvfp4/linear_graph.hpp"

#include <string>

#include "nvfp4/ms_eden.hpp"
#include "nvfp4/prng.hpp"

namespace nvfp4::graph {
namespace {

struct GemmMask {
  bool a = false;
  bool b = false;
};

struct AblationMask {
  GemmMask input_grad;   // dX = E W
  GemmMask weight_grad;  // dW = E^T X
};

AblationMask mask_for(const LayerConfig& cfg) {
  Ablation a = cfg.ablation;
  if (a == Ablation::kFull) a = cfg.reuse_forward_weights ? Ablation::kD : Ablation::kE;
  switch (a) {
    case Ablation::kA: return {{false, false}, {true, true}};
    case Ablation::kB: return {{true, false}, {false, false}};
    case Ablation::kC: return {{true, true}, {false, false}};
    case Ablation::kD: return {{true, false}, {true, true}};
    case Ablation::kE:
    case Ablation::kFull: break;
  }
  return {{true, true}, {true, true}};
}

bool rotates(BackwardScheme s) {
  return s == BackwardScheme::kSrRht || s == BackwardScheme::kSrRhtFos ||
         s == BackwardScheme::kMsEden;
}

Matrix quantize_operand(const Matrix& m, BackwardScheme scheme, std::uint64_t seed,
                        std::uint64_t stream) {
  switch (scheme) {
    case BackwardScheme::kSr:
    case BackwardScheme::kSrRht:
      return dequantize_matrix(quantize_matrix(m, GroupLayout::kRowMajor, [&](auto s) {
        return quantize_sr(s, seed, stream);
      }));
    case BackwardScheme::kSrRhtFos:
      return dequantize_matrix(quantize_matrix(m, GroupLayout::kRowMajor, [&](auto s) {
        return quantize_sr_46(s, seed, stream);
      }));
    case BackwardScheme::kIdentity:
    case BackwardScheme::kMsEden:
      break;
  }
  throw std::logic_error("quantize_operand: scheme has no single-operand form");
}

// a [M x K] * b [N x K]^T with the operands quantized along K per the mask.
Matrix backward_gemm(const Matrix& a, const Matrix& b, GemmMask mask, BackwardScheme scheme,
                     SeedPair seeds, std::uint64_t gemm_id, Accumulate acc) {
  if (scheme == BackwardScheme::kIdentity || (!mask.a && !mask.b)) {
    return matmul_nt(a, b, acc);
  }
  if (mask.a && (a.cols() % kGroupSize != 0)) {
    throw std::invalid_argument("backward: inner dimension " + std::to_string(a.cols()) +
                                " is not a multiple of 16");
  }
  if (scheme == BackwardScheme::kMsEden) {
    if (!(mask.a && mask.b)) {
      throw std::logic_error("backward: ms_eden needs both operands of a GEMM quantized");
    }
    auto [qa, qb] = ms_eden_estimate_pair(a, b, seeds, gemm_id);
    return matmul_nt(dequantize_matrix(qa), dequantize_matrix(qb), acc);
  }
  const bool rotate = rotates(scheme) && mask.a && mask.b;
  Matrix ra = a;
  Matrix rb = b;
  if (rotate) {
    const SignVector signs = SignVector::from_seed(seeds.rht, gemm_id);
    ra = rotate_rows(a, signs);
    rb = rotate_rows(b, signs);
  }
  if (mask.a) ra = quantize_operand(ra, scheme, seeds.sr, 2 * gemm_id);
  if (mask.b) rb = quantize_operand(rb, scheme, seeds.sr, 2 * gemm_id + 1);
  return matmul_nt(ra, rb, acc);
}

}  // namespace

Matrix materialize(const Operand& op) {
  struct Visitor {
    Matrix operator()(const Matrix& m) const { return m; }
    Matrix operator()(const NVFP4Tensor& t) const { return dequantize_matrix(t); }
    Matrix operator()(const SquareBlockTensor& t) const { return dequantize(t); }
  };
  return std::visit(Visitor{}, op);
}

Matrix gemm_emulated(const Operand& a, const Operand& b, Accumulate acc) {
  const Matrix ma = materialize(a);
  const Matrix mb = materialize(b);
  if (ma.cols() != mb.cols()) {
    throw std::invalid_argument("gemm_emulated: inner dimensions differ (" +
                                std::to_string(ma.cols()) + " vs " + std::to_string(mb.cols()) +
                                ")");
  }
  return matmul_nt(ma, mb, acc);
}

ForwardResult forward(const Matrix& x, const Matrix& w, const LayerConfig& cfg, Accumulate acc) {
  cfg.validate();
  if (x.cols() != w.cols()) {
    throw std::invalid_argument("forward: x has " + std::to_string(x.cols()) +
                                " columns but w has " + std::to_string(w.cols()));
  }
  if (cfg.forward != ForwardScheme::kIdentity && x.cols() % kGroupSize != 0) {
    throw std::invalid_argument("forward: in_features " + std::to_string(x.cols()) +
                                " is not a multiple of 16");
  }
  const auto rtn = [](auto s) { return quantize_rtn(s, GridMax(6.0)); };
  const auto rtn46 = [](auto s) { return quantize_rtn_46(s); };

  ForwardResult out;
  out.tape.config = cfg;
  switch (cfg.forward) {
    case ForwardScheme::kIdentity:
      out.tape.x = x;
      out.tape.w = w;
      break;
    case ForwardScheme::kRtn1x16:
      out.tape.x = quantize_matrix(x, GroupLayout::kRowMajor, rtn);
      out.tape.w = quantize_matrix(w, GroupLayout::kRowMajor, rtn);
      break;
    case ForwardScheme::kRtn1x16Fos:
      out.tape.x = quantize_matrix(x, GroupLayout::kRowMajor, rtn46);
      out.tape.w = quantize_matrix(w, GroupLayout::kRowMajor, rtn46);
      break;
    case ForwardScheme::kRtn16x16:
      out.tape.x = quantize_matrix(x, GroupLayout::kRowMajor, rtn);
      out.tape.w = quantize_square_block(w, false);
      break;
    case ForwardScheme::kRtn16x16Fos:
      out.tape.x = quantize_matrix(x, GroupLayout::kRowMajor, rtn46);
      out.tape.w = quantize_square_block(w, true);
      break;
  }
  out.y = gemm_emulated(out.tape.x, out.tape.w, acc);
  return out;
}

GradPair backward(const LinearTape& tape, const Matrix& e, const LayerConfig& cfg,
                  SeedPair seeds, const BackwardOptions& opts) {
  cfg.validate();
  const Matrix x = materialize(tape.x);
  const Matrix w = materialize(tape.w);
  if (e.rows() != x.rows() || e.cols() != w.rows()) {
    throw std::invalid_argument("backward: gradient shape " + std::to_string(e.rows()) + "x" +
                                std::to_string(e.cols()) + " does not match y = " +
                                std::to_string(x.rows()) + "x" + std::to_string(w.rows()));
  }
  const AblationMask mask = mask_for(cfg);
  GradPair g;
  if (opts.input_grad) {
    g.dx = backward_gemm(e, w.transposed(), mask.input_grad, cfg.backward, seeds, kInputGradGemm,
                         opts.acc);
  }
  g.dw = backward_gemm(e.transposed(), x.transposed(), mask.weight_grad, cfg.backward, seeds,
                       kWeightGradGemm, opts.acc);
  return g;
}

SeedPair step_seeds(std::uint64_t run_seed, std::uint64_t step, std::uint64_t layer_id) {
  return {derive_seed(run_seed, step, 2 * layer_id), derive_seed(run_seed, step, 2 * layer_id + 1)};
}

}  // namespace nvfp4::graph

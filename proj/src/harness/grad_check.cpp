#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nvfp4/harness.hpp"
#include "nvfp4/prng.hpp"

namespace nvfp4::harness {
namespace {

double loss(const GradCheckProblem& p, const Matrix& x, const Matrix& w) {
  const Matrix y = matmul_nt(x, w, Accumulate::kF64);
  double l = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y.data()[i] - p.target.data()[i];
    const double r2 = r * r;
    l += 0.5 * r2 + 0.25 * p.kappa * r2 * r2;
  }
  return l;
}

Matrix loss_gradient(const GradCheckProblem& p, const Matrix& y) {
  Matrix e(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y.data()[i] - p.target.data()[i];
    e.data()[i] = r + p.kappa * r * r * r;
  }
  return e;
}

}  // namespace

GradCheckProblem make_grad_check_problem(std::uint64_t seed, std::size_t tokens, std::size_t in,
                                         std::size_t out) {
  GradCheckProblem p{Matrix(tokens, in), Matrix(out, in), Matrix(tokens, out)};
  fill_gaussian(seed, 0, 0, p.x.data());
  fill_gaussian(seed, 1, 0, p.w.data());
  fill_gaussian(seed, 2, 0, p.target.data());
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& v : p.w.data()) v *= w_scale;
  return p;
}

GradCheckReport grad_check(const GradCheckProblem& p, const graph::LayerConfig& cfg,
                           std::uint64_t seed, double h, std::size_t coordinates) {
  if (cfg.forward != graph::ForwardScheme::kIdentity ||
      cfg.backward != graph::BackwardScheme::kIdentity) {
    throw graph::ConfigError("grad_check: finite differences need the identity scheme");
  }
  if (p.x.cols() != p.w.cols() || p.target.rows() != p.x.rows() ||
      p.target.cols() != p.w.rows()) {
    throw std::invalid_argument("grad_check: x, w and target shapes are inconsistent");
  }
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: h must be positive");

  const graph::ForwardResult fwd = graph::forward(p.x, p.w, cfg, Accumulate::kF64);
  const Matrix e = loss_gradient(p, fwd.y);
  const graph::GradPair g = graph::backward(fwd.tape, e, cfg, {}, {Accumulate::kF64, true});

  double max_diff = 0.0;
  double max_grad = 0.0;
  Matrix x = p.x;
  Matrix w = p.w;
  for (std::size_t c = 0; c < coordinates; ++c) {
    // Alternate between entries of X and W.
    const bool on_x = c % 2 == 0;
    Matrix& m = on_x ? x : w;
    const std::size_t i = prng_bits(seed, c, 0) % m.size();
    const double orig = m.data()[i];
    m.data()[i] = orig + h;
    const double lp = loss(p, x, w);
    m.data()[i] = orig - h;
    const double lm = loss(p, x, w);
    m.data()[i] = orig;
    const double fd = (lp - lm) / (2.0 * h);
    const double analytic = on_x ? g.dx.data()[i] : g.dw.data()[i];
    max_diff = std::max(max_diff, std::fabs(fd - analytic));
    max_grad = std::max(max_grad, std::fabs(analytic));
  }
  return {h, coordinates, max_grad > 0.0 ? max_diff / max_grad : max_diff};
}

}  // namespace nvfp4::harness

#include <cmath>
#include <stdexcept>

#include "nvfp4/harness.hpp"
#include "nvfp4/prng.hpp"

namespace nvfp4::harness {
namespace {

Matrix gaussian_matrix(std::uint64_t seed, std::uint64_t stream, std::size_t rows,
                       std::size_t cols, double stddev) {
  Matrix m(rows, cols);
  fill_gaussian(seed, stream, 0, m.data());
  for (double& v : m.data()) v *= stddev;
  return m;
}

void accumulate(Matrix& sum, const Matrix& x) {
  auto s = sum.data();
  auto d = x.data();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += d[i];
}

double scaled_distance(const Matrix& sum, double inv_b, const Matrix& ref) {
  double acc = 0.0;
  auto s = sum.data();
  auto r = ref.data();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = s[i] * inv_b - r[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

double fit_log_slope(const std::vector<std::size_t>& b, const std::vector<double>& err,
                     double b_min) {
  if (b.size() != err.size()) throw std::invalid_argument("fit_log_slope: size mismatch");
  double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (static_cast<double>(b[i]) < b_min) continue;
    const double x = std::log2(static_cast<double>(b[i]));
    const double y = std::log2(err[i]);
    n += 1.0;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2.0 || den == 0.0) {
    throw std::invalid_argument("fit_log_slope: fewer than two points above b_min");
  }
  return (n * sxy - sx * sy) / den;
}

ConcentrationReport concentration(const graph::LayerConfig& cfg, std::string name,
                                  std::size_t b_max, std::size_t trials, std::uint64_t seed,
                                  const ConcentrationLayer& layer) {
  if (b_max < 16 || (b_max & (b_max - 1)) != 0) {
    throw std::invalid_argument("concentration: b_max must be a power of two >= 16");
  }
  if (trials == 0) throw std::invalid_argument("concentration: trials must be positive");
  cfg.validate();

  const std::uint64_t data_seed = derive_seed(seed, 0);
  const Matrix x = gaussian_matrix(data_seed, 0, layer.tokens, layer.in, 1.0);
  // Unit-variance weights keep ||dX|| and ||dW|| comparable, so neither GEMM
  // dominates the concatenated error.
  const Matrix w = gaussian_matrix(data_seed, 1, layer.out, layer.in, 1.0);
  const Matrix e = gaussian_matrix(data_seed, 2, layer.tokens, layer.out, 1.0);

  const graph::ForwardResult fwd = graph::forward(x, w, cfg, Accumulate::kF64);
  graph::LayerConfig exact = cfg;
  exact.backward = graph::BackwardScheme::kIdentity;
  exact.ablation = graph::Ablation::kFull;
  const graph::BackwardOptions opts{Accumulate::kF64, true};
  const graph::GradPair ref = graph::backward(fwd.tape, e, exact, {}, opts);
  const double ref_norm = squared_norm(ref.dx.data()) + squared_norm(ref.dw.data());

  ConcentrationReport report;
  report.method = std::move(name);
  report.trials = trials;
  report.seed = seed;
  for (std::size_t b = 1; b <= b_max; b *= 2) report.b_values.push_back(b);
  report.errors.assign(report.b_values.size(), 0.0);

  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(seed, 1, t);
    Matrix sum_dx(ref.dx.rows(), ref.dx.cols());
    Matrix sum_dw(ref.dw.rows(), ref.dw.cols());
    std::size_t next = 0;
    for (std::size_t b = 1; b <= b_max; ++b) {
      const graph::GradPair g =
          graph::backward(fwd.tape, e, cfg, graph::step_seeds(trial_seed, b, 0), opts);
      accumulate(sum_dx, g.dx);
      accumulate(sum_dw, g.dw);
      if (b == report.b_values[next]) {
        const double inv_b = 1.0 / static_cast<double>(b);
        const double err =
            (scaled_distance(sum_dx, inv_b, ref.dx) + scaled_distance(sum_dw, inv_b, ref.dw)) /
            ref_norm;
        report.errors[next] += err / static_cast<double>(trials);
        ++next;
      }
    }
  }
  report.slope = fit_log_slope(report.b_values, report.errors, 16.0);
  report.tail_slope =
      fit_log_slope(report.b_values, report.errors, static_cast<double>(b_max) / 10.0);
  return report;
}

}  // namespace nvfp4::harness

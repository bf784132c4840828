#include <cmath>
#include <map>
#include <stdexcept>

#include "nvfp4/harness.hpp"
#include "nvfp4/prng.hpp"

namespace nvfp4::harness {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct Adam {
  std::vector<double> m;
  std::vector<double> v;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::span<double> w, std::span<const double> g, double lr, std::size_t t) {
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEps);
    }
  }
};

Matrix gaussian(std::uint64_t seed, std::uint64_t stream, std::size_t rows, std::size_t cols,
                double stddev) {
  Matrix m(rows, cols);
  fill_gaussian(seed, stream, 0, m.data());
  for (double& v : m.data()) v *= stddev;
  return m;
}

}  // namespace

TrainRun train_run(const NamedConfig& cfg, std::uint64_t seed, const TrainDemoOptions& o) {
  cfg.config.validate();
  if (o.steps == 0 || o.tokens == 0) throw std::invalid_argument("train_run: empty schedule");

  const std::uint64_t init_seed = derive_seed(seed, 0);
  const std::uint64_t data_seed = derive_seed(seed, 1);
  const std::uint64_t quant_seed = derive_seed(seed, 2);
  const Matrix teacher = gaussian(init_seed, 0, o.d_out, o.d_in, 1.0 / std::sqrt(double(o.d_in)));
  Matrix w1 = gaussian(init_seed, 1, o.hidden, o.d_in, std::sqrt(2.0 / double(o.d_in)));
  Matrix w2 = gaussian(init_seed, 2, o.d_out, o.hidden, 1.0 / std::sqrt(double(o.hidden)));
  Adam adam1(w1.size());
  Adam adam2(w2.size());

  TrainRun run{cfg.name, seed, {}, true, 0.0};
  run.losses.reserve(o.steps);
  const graph::BackwardOptions weight_only{Accumulate::kF32, false};
  const graph::BackwardOptions both{Accumulate::kF32, true};
  const double norm = 1.0 / static_cast<double>(o.tokens * o.d_out);

  for (std::size_t step = 0; step < o.steps; ++step) {
    Matrix x(o.tokens, o.d_in);
    fill_gaussian(data_seed, step, 0, x.data());
    const Matrix target = matmul_nt(x, teacher, Accumulate::kF64);

    const graph::ForwardResult f1 = graph::forward(x, w1, cfg.config);
    Matrix h = f1.y;
    for (double& v : h.data()) v = std::max(v, 0.0);
    const graph::ForwardResult f2 = graph::forward(h, w2, cfg.config);

    Matrix e(o.tokens, o.d_out);
    double loss = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double r = f2.y.data()[i] - target.data()[i];
      loss += r * r;
      e.data()[i] = 2.0 * r * norm;
    }
    loss *= norm;
    run.losses.push_back(loss);
    if (!std::isfinite(loss)) {
      run.finite = false;
      break;
    }

    const graph::GradPair g2 =
        graph::backward(f2.tape, e, cfg.config, graph::step_seeds(quant_seed, step, 1), both);
    Matrix dz1 = g2.dx;
    for (std::size_t i = 0; i < dz1.size(); ++i) {
      if (f1.y.data()[i] <= 0.0) dz1.data()[i] = 0.0;
    }
    const graph::GradPair g1 = graph::backward(f1.tape, dz1, cfg.config,
                                               graph::step_seeds(quant_seed, step, 0), weight_only);
    adam1.step(w1.data(), g1.dw.data(), o.lr, step + 1);
    adam2.step(w2.data(), g2.dw.data(), o.lr, step + 1);
  }

  const std::size_t n = run.losses.size();
  const std::size_t tail = std::min(o.tail, n);
  double sum = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) sum += run.losses[i];
  run.final_loss = run.finite ? sum / static_cast<double>(tail) : NAN;
  return run;
}

std::vector<TrainRun> train_demo(const std::vector<NamedConfig>& cfgs,
                                 const std::vector<std::uint64_t>& seeds,
                                 const TrainDemoOptions& opts) {
  std::vector<TrainRun> runs;
  for (const NamedConfig& c : cfgs) {
    for (std::uint64_t s : seeds) runs.push_back(train_run(c, s, opts));
  }
  return runs;
}

std::vector<TrainSummary> summarize(const std::vector<TrainRun>& runs) {
  std::vector<TrainSummary> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<double>> finals;
  for (const TrainRun& r : runs) {
    auto [it, inserted] = index.try_emplace(r.config, out.size());
    if (inserted) {
      out.push_back({r.config, 0, 0.0, 0.0, true});
      finals.emplace_back();
    }
    TrainSummary& s = out[it->second];
    ++s.runs;
    s.all_finite = s.all_finite && r.finite;
    finals[it->second].push_back(r.final_loss);
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& f = finals[k];
    const double n = static_cast<double>(f.size());
    double mean = 0.0;
    for (double v : f) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : f) var += (v - mean) * (v - mean);
    out[k].mean_final_loss = mean;
    out[k].std_error = f.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
  }
  return out;
}

}  // namespace nvfp4::harness

#ifndef NVFP4_HARNESS_HPP
#define NVFP4_HARNESS_HPP

// Statistical experiments over the quantizers and the linear-layer graph.
// Every result is a pure function of its arguments, seeds included.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nvfp4/linear_graph.hpp"
#include "nvfp4/matrix.hpp"
#include "nvfp4/posthoc.hpp"

namespace nvfp4::harness {

// ---- quantization error over N(0, 1) ----

struct MseReport {
  std::string method;
  std::string group_config;  // "1x16" or "16x16"
  double mse = 0.0;          // mean squared elementwise error
  double std_error = 0.0;    // Monte-Carlo standard error of mse
  std::size_t samples = 0;   // elements actually drawn
  std::uint64_t seed = 0;
};

/// rtn_1x16, rtn46_1x16, rtn_16x16, rtn46_16x16, sr_1x16, sr46_1x16,
/// ms_eden_1x16.
const std::vector<std::string>& mse_methods();

/// Reference error for a method, in units of 1e-3; nullopt if none.
std::optional<double> reference_mse_e3(std::string_view method);

/// Draws 4096-element vectors (65536-element 256x256 matrices for 16x16
/// methods) until n_samples elements are covered. The same draws are shared
/// by all methods of one group configuration. Throws std::invalid_argument
/// on an unknown method.
std::vector<MseReport> mse_bench(const std::vector<std::string>& methods, std::size_t n_samples,
                                 std::uint64_t seed);

/// True when [mse - 4 SE, mse + 4 SE] lies inside reference * (1 +- rel_band).
bool mse_within_band(const MseReport& r, double reference, double rel_band = 0.05);

// ---- unbiasedness concentration ----

struct ConcentrationReport {
  std::string method;
  std::vector<std::size_t> b_values;  // 1, 2, 4, ..., b_max
  std::vector<double> errors;         // relative squared error, averaged over trials
  double slope = 0.0;                 // fit over B >= 16
  double tail_slope = 0.0;            // fit over B >= b_max / 10
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

struct ConcentrationLayer {
  std::size_t in = 256;
  std::size_t out = 128;
  std::size_t tokens = 128;
};

/// Averages B backward passes with independent step seeds on a frozen random
/// layer and compares (dX, dW) against the exact backward on the same tape.
/// Throws std::invalid_argument unless b_max is a power of two >= 16.
ConcentrationReport concentration(const graph::LayerConfig& cfg, std::string name,
                                  std::size_t b_max, std::size_t trials, std::uint64_t seed,
                                  const ConcentrationLayer& layer = {});

/// Least-squares slope of log2(error) against log2(B) over B >= b_min.
double fit_log_slope(const std::vector<std::size_t>& b, const std::vector<double>& err,
                     double b_min);

// ---- finite-difference gradient check ----

/// Y = X W^T, loss = sum(r^2 / 2 + kappa r^4 / 4) with r = Y - target.
/// The quartic term keeps the third derivative nonzero so the central
/// difference error scales visibly with h^2.
struct GradCheckProblem {
  Matrix x;       // [tokens x in]
  Matrix w;       // [out x in]
  Matrix target;  // [tokens x out]
  double kappa = 0.1;
};

GradCheckProblem make_grad_check_problem(std::uint64_t seed, std::size_t tokens = 128,
                                         std::size_t in = 256, std::size_t out = 128);

struct GradCheckReport {
  double h = 0.0;
  std::size_t coordinates = 0;  // checked entries of X and W together
  /// max |fd - analytic| over the checked entries divided by the largest
  /// |analytic| among them.
  double max_rel_error = 0.0;
};

/// Throws graph::ConfigError unless cfg is the identity scheme and
/// std::invalid_argument on inconsistent problem shapes.
GradCheckReport grad_check(const GradCheckProblem& p, const graph::LayerConfig& cfg,
                           std::uint64_t seed, double h = 1e-3, std::size_t coordinates = 64);

// ---- training demo ----

struct TrainDemoOptions {
  std::size_t steps = 2000;
  std::size_t tokens = 128;
  std::size_t d_in = 256;
  std::size_t hidden = 512;
  std::size_t d_out = 256;
  double lr = 1e-3;
  /// Final loss = mean over this many trailing steps.
  std::size_t tail = 100;
};

struct TrainRun {
  std::string config;
  std::uint64_t seed = 0;
  std::vector<double> losses;
  bool finite = true;
  double final_loss = 0.0;
};

struct TrainSummary {
  std::string config;
  std::size_t runs = 0;
  double mean_final_loss = 0.0;
  double std_error = 0.0;
  bool all_finite = true;
};

struct NamedConfig {
  std::string name;
  graph::LayerConfig config;
};

/// Two-layer ReLU MLP without biases regressing a random linear teacher,
/// trained with Adam on fresh Gaussian batches. Both layers use cfg.
TrainRun train_run(const NamedConfig& cfg, std::uint64_t seed, const TrainDemoOptions& opts);

std::vector<TrainRun> train_demo(const std::vector<NamedConfig>& cfgs,
                                 const std::vector<std::uint64_t>& seeds,
                                 const TrainDemoOptions& opts);

std::vector<TrainSummary> summarize(const std::vector<TrainRun>& runs);

// ---- report serialization ----

std::string mse_csv(const std::vector<MseReport>& r);
std::string mse_json(const std::vector<MseReport>& r);
std::string concentration_csv(const std::vector<ConcentrationReport>& r);
std::string concentration_json(const std::vector<ConcentrationReport>& r);
std::string grad_check_json(const std::vector<GradCheckReport>& r);
/// Long format: config,seed,step,loss.
std::string train_csv(const std::vector<TrainRun>& runs);
std::string train_json(const std::vector<TrainSummary>& s);
/// Aligned text table of both pipelines and the saving.
std::string cost_table(const CostReport& naive, const CostReport& posthoc);
std::string cost_json(const CostReport& naive, const CostReport& posthoc);
/// code,bits,value rows for the 16 E2M1 and 256 E4M3 codes.
std::string formats_csv();

}  // namespace nvfp4::harness

#endif  // NVFP4_HARNESS_HPP

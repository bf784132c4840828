// Command-line front end for the NVFP4 emulation harness.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nvfp4/harness.hpp"
#include "nvfp4/linear_graph.hpp"
#include "nvfp4/ms_eden.hpp"
#include "nvfp4/posthoc.hpp"
#include "nvfp4/tensor_io.hpp"

namespace {

using namespace nvfp4;

constexpr int kCheckFailed = 2;

struct Common {
  std::uint64_t seed = 0x5EED;
  std::string out;
  std::string format = "json";
  bool check = false;
};

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file " + c.out);
  f << text;
}

// A config is either a baseline name or a path to a key = value file.
harness::NamedConfig load_config(const std::string& spec) {
  try {
    return {spec, graph::baseline_config(spec)};
  } catch (const graph::ConfigError&) {
  }
  std::ifstream f(spec);
  if (!f) throw graph::ConfigError("'" + spec + "' is neither a baseline name nor a readable file");
  std::stringstream ss;
  ss << f.rdbuf();
  return {spec, graph::parse_config(ss.str())};
}

std::vector<harness::NamedConfig> load_configs(const std::vector<std::string>& specs) {
  std::vector<harness::NamedConfig> out;
  for (const auto& s : specs) out.push_back(load_config(s));
  return out;
}

void add_common(CLI::App* app, Common& c, bool with_format = true) {
  app->add_option("--seed", c.seed, "Run seed");
  app->add_option("--out", c.out, "Write the report here instead of stdout");
  if (with_format) {
    app->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  }
  app->add_flag("--check", c.check, "Exit with status 2 when an acceptance threshold fails");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NVFP4 quantization emulation harness"};
  app.require_subcommand(1);

  // mse-bench
  Common mse;
  std::size_t samples = 10'000'000;
  std::vector<std::string> methods = harness::mse_methods();
  auto* mse_cmd = app.add_subcommand("mse-bench", "Quantization error over N(0,1) per method");
  add_common(mse_cmd, mse);
  mse_cmd->add_option("--samples", samples, "Elements per method");
  mse_cmd->add_option("--methods", methods, "Subset of methods");

  // concentration
  Common conc;
  std::size_t b_max = 1024;
  std::size_t trials = 4;
  std::vector<std::string> conc_cfgs = {"quartet2", "nvidia", "tetrajet_v2",
                                        "nvidia_46_backward"};
  auto* conc_cmd = app.add_subcommand("concentration", "Error of averaged gradient estimates vs B");
  add_common(conc_cmd, conc);
  conc_cmd->add_option("--b-max", b_max, "Largest B (power of two)");
  conc_cmd->add_option("--trials", trials, "Independent repetitions averaged per B");
  conc_cmd->add_option("--config", conc_cfgs, "Baseline names or config files");

  // grad-check
  Common gc;
  std::vector<double> hs = {1e-3};
  std::string gc_cfg = "identity";
  auto* gc_cmd = app.add_subcommand("grad-check", "Backward vs central finite differences");
  add_common(gc_cmd, gc, false);
  gc_cmd->add_option("--step", hs, "Perturbation sizes");
  gc_cmd->add_option("--config", gc_cfg, "Baseline name or config file");

  // train-demo
  Common td;
  harness::TrainDemoOptions topts;
  std::size_t n_seeds = 5;
  std::vector<std::string> td_cfgs = {"identity", "nvidia", "tetrajet_v2", "quartet2"};
  std::string summary_out;
  auto* td_cmd = app.add_subcommand("train-demo", "Small MLP regression under each scheme");
  add_common(td_cmd, td);
  td_cmd->add_option("--steps", topts.steps, "Optimizer steps");
  td_cmd->add_option("--seeds", n_seeds, "Runs per config");
  td_cmd->add_option("--config", td_cfgs, "Baseline names or config files");
  td_cmd->add_option("--lr", topts.lr, "Adam learning rate");
  td_cmd->add_option("--summary-out", summary_out, "Also write the JSON summary here");

  // cost-model
  Common cm;
  cm.format = "table";
  auto* cm_cmd = app.add_subcommand("cost-model", "Bits moved per element for both pipelines");
  cm_cmd->add_option("--out", cm.out, "Write the report here instead of stdout");
  cm_cmd->add_option("--format", cm.format, "Report format")
      ->check(CLI::IsMember({"table", "json", "both"}));
  cm_cmd->add_flag("--check", cm.check, "Exit with status 2 unless totals are 13.5 and 11.0");

  // formats dump
  Common fd;
  auto* fmt_cmd = app.add_subcommand("formats", "Format tables");
  auto* dump_cmd = fmt_cmd->add_subcommand("dump", "CSV of every E2M1 and E4M3 code");
  dump_cmd->add_option("--out", fd.out, "Write the table here instead of stdout");
  fmt_cmd->require_subcommand(1);

  // quantize: one vector in, one NVFP4 container out
  std::uint64_t seed_rht = 0;
  std::uint64_t seed_sr = 0;
  std::string q_method = "ms_eden";
  std::string q_in;
  std::string q_out;
  auto* q_cmd = app.add_subcommand("quantize", "Quantize whitespace-separated values to a container");
  q_cmd->add_option("--method", q_method, "Quantizer")
      ->check(CLI::IsMember({"rtn", "rtn46", "sr", "ms_eden", "posthoc"}));
  q_cmd->add_option("--in", q_in, "Input text file")->required();
  q_cmd->add_option("--out", q_out, "Output container")->required();
  q_cmd->add_option("--seed-rht", seed_rht, "Rotation seed (ms_eden, posthoc)");
  q_cmd->add_option("--seed-sr", seed_sr, "Rounding seed (sr, ms_eden, posthoc)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*mse_cmd) {
      const auto reports = harness::mse_bench(methods, samples, mse.seed);
      emit(mse, mse.format == "csv" ? harness::mse_csv(reports) : harness::mse_json(reports));
      if (mse.check) {
        bool ok = true;
        double sr = 0.0, eden = 0.0;
        for (const auto& r : reports) {
          if (const auto ref = harness::reference_mse_e3(r.method)) {
            ok = ok && harness::mse_within_band(r, *ref * 1e-3);
          }
          if (r.method == "sr_1x16") sr = r.mse;
          if (r.method == "ms_eden_1x16") eden = r.mse;
        }
        if (sr > 0.0 && eden > 0.0) ok = ok && eden < 0.5 * sr;
        if (!ok) return kCheckFailed;
      }
    } else if (*conc_cmd) {
      std::vector<harness::ConcentrationReport> reports;
      for (const auto& c : load_configs(conc_cfgs)) {
        reports.push_back(harness::concentration(c.config, c.name, b_max, trials, conc.seed));
      }
      emit(conc, conc.format == "csv" ? harness::concentration_csv(reports)
                                      : harness::concentration_json(reports));
      if (conc.check) {
        for (const auto& r : reports) {
          const bool biased = r.method == "nvidia_46_backward" ||
                              load_config(r.method).config.backward ==
                                  graph::BackwardScheme::kSrRhtFos;
          const bool ok = biased ? r.tail_slope > -0.3 : (r.slope >= -1.15 && r.slope <= -0.85);
          if (!ok) return kCheckFailed;
        }
      }
    } else if (*gc_cmd) {
      const auto cfg = load_config(gc_cfg);
      const auto problem = harness::make_grad_check_problem(gc.seed);
      std::vector<harness::GradCheckReport> reports;
      for (double h : hs) reports.push_back(harness::grad_check(problem, cfg.config, gc.seed, h));
      emit(gc, harness::grad_check_json(reports));
      if (gc.check) {
        for (const auto& r : reports) {
          if (!(r.max_rel_error < 1e-4)) return kCheckFailed;
        }
      }
    } else if (*td_cmd) {
      std::vector<std::uint64_t> seeds;
      for (std::size_t i = 0; i < n_seeds; ++i) seeds.push_back(td.seed + i);
      const auto runs = harness::train_demo(load_configs(td_cfgs), seeds, topts);
      const auto summary = harness::summarize(runs);
      emit(td, td.format == "csv" ? harness::train_csv(runs) : harness::train_json(summary));
      if (!summary_out.empty()) {
        std::ofstream(summary_out) << harness::train_json(summary);
      }
      if (td.check) {
        double quartet = NAN, tetrajet = NAN;
        for (const auto& s : summary) {
          if (!s.all_finite) return kCheckFailed;
          if (s.config == "quartet2") quartet = s.mean_final_loss;
          if (s.config == "tetrajet_v2") tetrajet = s.mean_final_loss;
        }
        if (!std::isnan(quartet) && !std::isnan(tetrajet) && quartet > tetrajet) {
          return kCheckFailed;
        }
      }
    } else if (*cm_cmd) {
      const auto naive = cost_model(Pipeline::kNaive);
      const auto posthoc = cost_model(Pipeline::kPostHoc);
      std::string text;
      if (cm.format != "json") text += harness::cost_table(naive, posthoc);
      if (cm.format != "table") text += harness::cost_json(naive, posthoc);
      emit(cm, text);
      if (cm.check && !(naive.total_bits() == 13.5 && posthoc.total_bits() == 11.0)) {
        return kCheckFailed;
      }
    } else if (*q_cmd) {
      std::ifstream f(q_in);
      if (!f) throw std::runtime_error("cannot open " + q_in);
      std::vector<double> x;
      for (double v; f >> v;) x.push_back(v);
      NVFP4Tensor t;
      if (q_method == "rtn") {
        t = quantize_rtn(x, GridMax(6.0));
      } else if (q_method == "rtn46") {
        t = quantize_rtn_46(x);
      } else if (q_method == "sr") {
        t = quantize_sr(x, seed_sr);
      } else if (q_method == "ms_eden") {
        t = ms_eden_quantize(x, {seed_rht, seed_sr}, 0).tensor;
      } else {
        const auto p1 = posthoc_pass1(x, seed_rht, GridMax(6.0), 0);
        t = posthoc_pass2(p1.tensor, p1.reductions, seed_sr, 0);
      }
      std::ofstream os(q_out, std::ios::binary);
      if (!os) throw std::runtime_error("cannot open output file " + q_out);
      write_tensor(os, t);
    } else if (*fmt_cmd) {
      emit(fd, harness::formats_csv());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

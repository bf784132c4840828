#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "nvfp4/formats.hpp"
#include "nvfp4/harness.hpp"

namespace nvfp4::harness {
namespace {

using nlohmann::ordered_json;

// Shortest text that round-trips a double.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json kernel_json(const KernelCost& k) {
  return {{"gmem_to_sm_bits_per_elem", k.gmem_to_sm}, {"sm_to_gmem_bits_per_elem", k.sm_to_gmem}};
}

ordered_json cost_entry(const CostReport& c) {
  return {{"pipeline", to_string(c.pipeline)},
          {"kernel1", kernel_json(c.kernel1)},
          {"kernel2", kernel_json(c.kernel2)},
          {"mma_calls_per_group", c.mma_calls_per_group},
          {"total_bits_per_elem", c.total_bits()}};
}

std::string fmt(const char* f, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string mse_csv(const std::vector<MseReport>& r) {
  std::ostringstream os;
  os << "method,group_config,mse_e3,std_error_e3,samples,seed\n";
  for (const auto& m : r) {
    os << m.method << ',' << m.group_config << ',' << num(m.mse * 1e3) << ','
       << num(m.std_error * 1e3) << ',' << m.samples << ',' << m.seed << '\n';
  }
  return os.str();
}

std::string mse_json(const std::vector<MseReport>& r) {
  ordered_json out = ordered_json::array();
  for (const auto& m : r) {
    ordered_json j = {{"method", m.method},
                      {"group_config", m.group_config},
                      {"mse_e3", m.mse * 1e3},
                      {"std_error_e3", m.std_error * 1e3},
                      {"samples", m.samples},
                      {"seed", m.seed}};
    if (const auto ref = reference_mse_e3(m.method)) {
      j["reference_e3"] = *ref;
      j["within_band"] = mse_within_band(m, *ref * 1e-3);
    }
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

std::string concentration_csv(const std::vector<ConcentrationReport>& r) {
  std::ostringstream os;
  os << "method,b,relative_error\n";
  for (const auto& c : r) {
    for (std::size_t i = 0; i < c.b_values.size(); ++i) {
      os << c.method << ',' << c.b_values[i] << ',' << num(c.errors[i]) << '\n';
    }
  }
  return os.str();
}

std::string concentration_json(const std::vector<ConcentrationReport>& r) {
  ordered_json out = ordered_json::array();
  for (const auto& c : r) {
    out.push_back({{"method", c.method},
                   {"b", c.b_values},
                   {"relative_error", c.errors},
                   {"slope", c.slope},
                   {"tail_slope", c.tail_slope},
                   {"trials", c.trials},
                   {"seed", c.seed}});
  }
  return out.dump(2) + "\n";
}

std::string grad_check_json(const std::vector<GradCheckReport>& r) {
  ordered_json out = ordered_json::array();
  for (const auto& g : r) {
    out.push_back(
        {{"h", g.h}, {"coordinates", g.coordinates}, {"max_rel_error", g.max_rel_error}});
  }
  return out.dump(2) + "\n";
}

std::string train_csv(const std::vector<TrainRun>& runs) {
  std::ostringstream os;
  os << "config,seed,step,loss\n";
  for (const auto& r : runs) {
    for (std::size_t s = 0; s < r.losses.size(); ++s) {
      os << r.config << ',' << r.seed << ',' << s << ',' << num(r.losses[s]) << '\n';
    }
  }
  return os.str();
}

std::string train_json(const std::vector<TrainSummary>& s) {
  ordered_json out = ordered_json::array();
  for (const auto& t : s) {
    out.push_back({{"config", t.config},
                   {"runs", t.runs},
                   {"mean_final_loss", t.mean_final_loss},
                   {"std_error", t.std_error},
                   {"all_finite", t.all_finite}});
  }
  return out.dump(2) + "\n";
}

std::string cost_table(const CostReport& naive, const CostReport& posthoc) {
  const auto pair = [](const KernelCost& a, const KernelCost& b, bool in) {
    return fmt("%g", in ? a.gmem_to_sm : a.sm_to_gmem) + "+" +
           fmt("%g", in ? b.gmem_to_sm : b.sm_to_gmem);
  };
  char line[128];
  std::ostringstream os;
  std::snprintf(line, sizeof line, "%-22s %10s %10s\n", "Kernel:", "naive", "posthoc");
  os << line;
  std::snprintf(line, sizeof line, "%-22s %10s %10s\n", "GMEM->SM bits/elem:",
                pair(naive.kernel1, naive.kernel2, true).c_str(),
                pair(posthoc.kernel1, posthoc.kernel2, true).c_str());
  os << line;
  std::snprintf(line, sizeof line, "%-22s %10s %10s\n", "SM->GMEM bits/elem:",
                pair(naive.kernel1, naive.kernel2, false).c_str(),
                pair(posthoc.kernel1, posthoc.kernel2, false).c_str());
  os << line;
  std::snprintf(line, sizeof line, "%-22s %10g %10g\n", "total bits/elem:", naive.total_bits(),
                posthoc.total_bits());
  os << line;
  std::snprintf(line, sizeof line, "%-22s %10d %10d\n", "mma per NVFP4 group:",
                naive.mma_calls_per_group, posthoc.mma_calls_per_group);
  os << line;
  const double saving = 1.0 - posthoc.total_bits() / naive.total_bits();
  std::snprintf(line, sizeof line, "saving: %.1f%%\n", 100.0 * saving);
  os << line;
  return os.str();
}

std::string cost_json(const CostReport& naive, const CostReport& posthoc) {
  const ordered_json j = {{"naive", cost_entry(naive)},
                          {"posthoc", cost_entry(posthoc)},
                          {"saving", 1.0 - posthoc.total_bits() / naive.total_bits()}};
  return j.dump(2) + "\n";
}

std::string formats_csv() {
  std::ostringstream os;
  os << "format,code,bits,value\n";
  for (unsigned c = 0; c < 16; ++c) {
    char bits[8];
    std::snprintf(bits, sizeof bits, "0x%X", c);
    os << "e2m1," << c << ',' << bits << ',' << num(decode(Fp4Code{static_cast<std::uint8_t>(c)}))
       << '\n';
  }
  for (unsigned c = 0; c < 256; ++c) {
    char bits[8];
    std::snprintf(bits, sizeof bits, "0x%02X", c);
    const double v = decode(Fp8Code{static_cast<std::uint8_t>(c)});
    os << "e4m3," << c << ',' << bits << ',' << (std::isnan(v) ? std::string("nan") : num(v))
       << '\n';
  }
  return os.str();
}

}  // namespace nvfp4::harness

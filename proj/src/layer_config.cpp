#include <array>
#include <sstream>
#include <utility>

#include "nvfp4/linear_graph.hpp"

namespace nvfp4::graph {
namespace {

constexpr std::array<std::pair<ForwardScheme, std::string_view>, 5> kForwardNames = {{
    {ForwardScheme::kIdentity, "identity"},
    {ForwardScheme::kRtn1x16, "rtn_1x16"},
    {ForwardScheme::kRtn1x16Fos, "rtn_1x16_46"},
    {ForwardScheme::kRtn16x16, "rtn_16x16"},
    {ForwardScheme::kRtn16x16Fos, "rtn_16x16_46"},
}};

constexpr std::array<std::pair<BackwardScheme, std::string_view>, 5> kBackwardNames = {{
    {BackwardScheme::kIdentity, "identity"},
    {BackwardScheme::kSr, "sr"},
    {BackwardScheme::kSrRht, "sr_rht"},
    {BackwardScheme::kMsEden, "ms_eden"},
    {BackwardScheme::kSrRhtFos, "sr_rht_46"},
}};

constexpr std::array<std::pair<Ablation, std::string_view>, 6> kAblationNames = {{
    {Ablation::kA, "a"},
    {Ablation::kB, "b"},
    {Ablation::kC, "c"},
    {Ablation::kD, "d"},
    {Ablation::kE, "e"},
    {Ablation::kFull, "full"},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum v) {
  for (const auto& [e, name] : table) {
    if (e == v) return name;
  }
  return "?";
}

template <typename Enum, std::size_t N>
Enum parse_enum(const std::array<std::pair<Enum, std::string_view>, N>& table,
                std::string_view text, std::string_view key) {
  for (const auto& [e, name] : table) {
    if (name == text) return e;
  }
  throw ConfigError("unknown " + std::string(key) + " '" + std::string(text) + "'");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool is_square_block(ForwardScheme s) {
  return s == ForwardScheme::kRtn16x16 || s == ForwardScheme::kRtn16x16Fos;
}

}  // namespace

std::string_view to_string(ForwardScheme s) { return name_of(kForwardNames, s); }
std::string_view to_string(BackwardScheme s) { return name_of(kBackwardNames, s); }
std::string_view to_string(Ablation a) { return name_of(kAblationNames, a); }

void LayerConfig::validate() const {
  if (reuse_forward_weights && !is_square_block(forward)) {
    throw ConfigError("reuse_forward_weights requires a 16x16 square-block forward scheme");
  }
  if (reuse_forward_weights && (ablation == Ablation::kC || ablation == Ablation::kE)) {
    throw ConfigError("ablations c and e re-quantize the weights; incompatible with reuse");
  }
  if (backward == BackwardScheme::kMsEden) {
    if (ablation == Ablation::kB || ablation == Ablation::kD) {
      throw ConfigError("ms_eden requires weight re-quantization; ablations b and d are rejected");
    }
    if (reuse_forward_weights) {
      throw ConfigError("ms_eden requires weight re-quantization; cannot reuse forward weights");
    }
  }
}

LayerConfig baseline_config(std::string_view name) {
  if (name == "nvidia") {
    return {ForwardScheme::kRtn16x16, BackwardScheme::kSrRht, Ablation::kFull, true};
  }
  if (name == "tetrajet_v2") {
    return {ForwardScheme::kRtn1x16, BackwardScheme::kSrRht, Ablation::kFull, false};
  }
  if (name == "four_over_six") {
    return {ForwardScheme::kRtn16x16Fos, BackwardScheme::kSrRht, Ablation::kFull, true};
  }
  if (name == "quartet2") {
    return {ForwardScheme::kRtn1x16Fos, BackwardScheme::kMsEden, Ablation::kFull, false};
  }
  if (name == "identity") {
    return {ForwardScheme::kIdentity, BackwardScheme::kIdentity, Ablation::kFull, false};
  }
  if (name == "nvidia_46_backward") {
    return {ForwardScheme::kRtn16x16, BackwardScheme::kSrRhtFos, Ablation::kFull, true};
  }
  throw ConfigError("unknown baseline config '" + std::string(name) + "'");
}

std::string to_text(const LayerConfig& cfg) {
  std::ostringstream os;
  os << "forward_scheme = " << to_string(cfg.forward) << "\n"
     << "backward_scheme = " << to_string(cfg.backward) << "\n"
     << "ablation = " << to_string(cfg.ablation) << "\n"
     << "reuse_forward_weights = " << (cfg.reuse_forward_weights ? "true" : "false") << "\n";
  return os.str();
}

LayerConfig parse_config(std::string_view text) {
  LayerConfig cfg;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line without '=': " + std::string(line));
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "forward_scheme") {
      cfg.forward = parse_enum(kForwardNames, value, key);
    } else if (key == "backward_scheme") {
      cfg.backward = parse_enum(kBackwardNames, value, key);
    } else if (key == "ablation") {
      cfg.ablation = parse_enum(kAblationNames, value, key);
    } else if (key == "reuse_forward_weights") {
      if (value == "true") {
        cfg.reuse_forward_weights = true;
      } else if (value == "false") {
        cfg.reuse_forward_weights = false;
      } else {
        throw ConfigError("reuse_forward_weights must be true or false");
      }
    } else {
      throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace nvfp4::graph

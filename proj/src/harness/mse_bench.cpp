#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "nvfp4/harness.hpp"
#include "nvfp4/ms_eden.hpp"
#include "nvfp4/prng.hpp"
#include "nvfp4/quantizers.hpp"
#include "nvfp4/rht.hpp"

namespace nvfp4::harness {
namespace {

constexpr std::size_t kVectorLength = 4096;
constexpr std::size_t kBlockSide = 256;

// Returns the dequantized estimate of x; `seed` is private to this draw.
using Method = std::function<std::vector<double>(std::span<const double> x, std::uint64_t seed)>;

struct MethodSpec {
  const char* group_config;
  double reference_e3;
  Method run;
};

std::vector<double> square_block(std::span<const double> x, bool use_46) {
  const Matrix m(kBlockSide, kBlockSide, std::vector<double>(x.begin(), x.end()));
  const Matrix d = dequantize(quantize_square_block(m, use_46));
  return {d.data().begin(), d.data().end()};
}

const std::map<std::string, MethodSpec, std::less<>>& registry() {
  static const std::map<std::string, MethodSpec, std::less<>> methods = {
      {"rtn_1x16",
       {"1x16", 9.0,
        [](auto x, auto) { return dequantize(quantize_rtn(x, GridMax(6.0))); }}},
      {"rtn46_1x16",
       {"1x16", 7.6, [](auto x, auto) { return dequantize(quantize_rtn_46(x)); }}},
      {"rtn_16x16", {"16x16", 12.4, [](auto x, auto) { return square_block(x, false); }}},
      {"rtn46_16x16", {"16x16", 12.4, [](auto x, auto) { return square_block(x, true); }}},
      {"sr_1x16",
       {"1x16", 23.5, [](auto x, auto seed) { return dequantize(quantize_sr(x, seed)); }}},
      {"sr46_1x16",
       {"1x16", 17.5, [](auto x, auto seed) { return dequantize(quantize_sr_46(x, seed)); }}},
      {"ms_eden_1x16",
       {"1x16", 9.8,
        [](auto x, auto seed) {
          const SeedPair seeds{derive_seed(seed, 1), derive_seed(seed, 2)};
          const MsEdenResult q = ms_eden_quantize(x, seeds, 0);
          return rht_inverse(dequantize(q.tensor), SignVector::from_seed(seeds.rht, 0));
        }}},
  };
  return methods;
}

const MethodSpec& lookup(std::string_view name) {
  const auto it = registry().find(name);
  if (it == registry().end()) {
    throw std::invalid_argument("mse_bench: unknown method '" + std::string(name) + "'");
  }
  return it->second;
}

}  // namespace

const std::vector<std::string>& mse_methods() {
  static const std::vector<std::string> names = {"rtn_1x16",  "rtn46_1x16", "rtn_16x16",
                                                 "rtn46_16x16", "sr_1x16",  "sr46_1x16",
                                                 "ms_eden_1x16"};
  return names;
}

std::optional<double> reference_mse_e3(std::string_view method) {
  const auto it = registry().find(method);
  if (it == registry().end()) return std::nullopt;
  return it->second.reference_e3;
}

std::vector<MseReport> mse_bench(const std::vector<std::string>& methods, std::size_t n_samples,
                                 std::uint64_t seed) {
  std::vector<MseReport> reports;
  for (const std::string& name : methods) {
    const MethodSpec& spec = lookup(name);
    const std::size_t length =
        std::string_view(spec.group_config) == "16x16" ? kBlockSide * kBlockSide : kVectorLength;
    const std::size_t draws = std::max<std::size_t>(1, (n_samples + length - 1) / length);
    // Per-draw means are i.i.d., so their spread gives the standard error.
    double sum = 0.0;
    double sum_sq = 0.0;
    std::vector<double> x(length);
    for (std::size_t v = 0; v < draws; ++v) {
      fill_gaussian(seed, v, 0, x);
      const std::vector<double> q = spec.run(x, derive_seed(seed, v, 1));
      const double m = squared_distance(x, q) / static_cast<double>(length);
      sum += m;
      sum_sq += m * m;
    }
    const double n = static_cast<double>(draws);
    const double mean = sum / n;
    const double var = draws > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
    reports.push_back({name, spec.group_config, mean, std::sqrt(var / n), draws * length, seed});
  }
  return reports;
}

bool mse_within_band(const MseReport& r, double reference, double rel_band) {
  const double lo = reference * (1.0 - rel_band);
  const double hi = reference * (1.0 + rel_band);
  return r.mse - 4.0 * r.std_error >= lo && r.mse + 4.0 * r.std_error <= hi;
}

}  // namespace nvfp4::harness

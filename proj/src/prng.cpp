#include "nvfp4/prng.hpp"

#include <cmath>
#include <numbers>

namespace nvfp4 {
namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

__extension__ using Uint128 = unsigned __int128;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const Uint128 p = static_cast<Uint128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline double to_unit(std::uint64_t w) {
  return static_cast<double>(w >> 11) * kTwoPow53Inv;
}

inline std::array<std::uint64_t, 4> block(std::uint64_t seed, std::uint64_t stream,
                                          PrngDomain domain, std::uint64_t index) {
  return philox4x64({index >> 2, stream, static_cast<std::uint64_t>(domain), 0},
                    {seed, 0});
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr,
                                        std::array<std::uint64_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t prng_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                        PrngDomain domain) {
  return block(seed, stream, domain, index)[index & 3];
}

double prng_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                    PrngDomain domain) {
  return to_unit(prng_bits(seed, stream, index, domain));
}

void fill_uniform(std::uint64_t seed, std::uint64_t stream, PrngDomain domain,
                  std::uint64_t first, std::span<double> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    const std::uint64_t index = first + i;
    const auto words = block(seed, stream, domain, index);
    for (std::uint64_t lane = index & 3; lane < 4 && i < out.size(); ++lane, ++i) {
      out[i] = to_unit(words[lane]);
    }
  }
}

void fill_gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t first_pair,
                   std::span<double> out) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double u[2];
  std::size_t i = 0;
  std::uint64_t pair = first_pair;
  while (i < out.size()) {
    fill_uniform(seed, stream, PrngDomain::kGaussian, 2 * pair, std::span<double>(u, 2));
    const double r = std::sqrt(-2.0 * std::log(1.0 - u[0]));
    const double theta = kTwoPi * u[1];
    out[i++] = r * std::cos(theta);
    if (i < out.size()) out[i++] = r * std::sin(theta);
    ++pair;
  }
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label_a,
                          std::uint64_t label_b) {
  return philox4x64({label_a, label_b, static_cast<std::uint64_t>(PrngDomain::kSeedDerivation), 0},
                    {parent, 0})[0];
}

}  // namespace nvfp4

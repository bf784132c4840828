#include "nvfp4/rht.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace nvfp4 {
namespace {

void check_chunked(std::size_t n, std::size_t chunk, const char* what) {
  if (chunk == 0 || n % chunk != 0) {
    throw std::invalid_argument(std::string(what) + ": length " + std::to_string(n) +
                                " is not a multiple of the rotation chunk " +
                                std::to_string(chunk));
  }
}

}  // namespace

SignVector SignVector::from_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::size_t size) {
  std::vector<double> signs(size);
  for (std::size_t i = 0; i < size; ++i) {
    const std::uint64_t bits = prng_bits(seed, stream, i, PrngDomain::kRotationSigns);
    signs[i] = (bits >> 63) ? -1.0 : 1.0;
  }
  return SignVector(std::move(signs));
}

SignVector SignVector::ones(std::size_t size) {
  return SignVector(std::vector<double>(size, 1.0));
}

void hadamard_inplace(std::span<double> x) {
  const std::size_t n = x.size();
  if (n == 0 || !std::has_single_bit(n)) {
    throw std::invalid_argument("hadamard: size must be a power of two");
  }
  for (std::size_t half = 1; half < n; half <<= 1) {
    for (std::size_t base = 0; base < n; base += 2 * half) {
      for (std::size_t j = base; j < base + half; ++j) {
        const double a = x[j];
        const double b = x[j + half];
        x[j] = a + b;
        x[j + half] = a - b;
      }
    }
  }
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (double& v : x) v *= norm;
}

std::vector<double> hadamard_128(std::span<const double> x) {
  if (x.size() != kRotationChunk) {
    throw std::invalid_argument("hadamard_128: expected 128 elements, got " +
                                std::to_string(x.size()));
  }
  std::vector<double> out(x.begin(), x.end());
  hadamard_inplace(out);
  return out;
}

void rht_apply_inplace(std::span<double> x, const SignVector& signs) {
  const std::size_t chunk = signs.size();
  check_chunked(x.size(), chunk, "rht_apply");
  for (std::size_t h = 0; h < x.size(); h += chunk) {
    auto part = x.subspan(h, chunk);
    for (std::size_t i = 0; i < chunk; ++i) part[i] *= signs[i];
    hadamard_inplace(part);
  }
}

void rht_inverse_inplace(std::span<double> y, const SignVector& signs) {
  const std::size_t chunk = signs.size();
  check_chunked(y.size(), chunk, "rht_inverse");
  for (std::size_t h = 0; h < y.size(); h += chunk) {
    auto part = y.subspan(h, chunk);
    hadamard_inplace(part);
    for (std::size_t i = 0; i < chunk; ++i) part[i] *= signs[i];
  }
}

std::vector<double> rht_apply(std::span<const double> x, const SignVector& signs) {
  std::vector<double> out(x.begin(), x.end());
  rht_apply_inplace(out, signs);
  return out;
}

std::vector<double> rht_inverse(std::span<const double> y, const SignVector& signs) {
  std::vector<double> out(y.begin(), y.end());
  rht_inverse_inplace(out, signs);
  return out;
}

std::vector<double> rht_apply(std::span<const double> x, std::uint64_t seed,
                              std::uint64_t tensor_id) {
  return rht_apply(x, SignVector::from_seed(seed, tensor_id));
}

std::vector<double> rht_inverse(std::span<const double> y, std::uint64_t seed,
                                std::uint64_t tensor_id) {
  return rht_inverse(y, SignVector::from_seed(seed, tensor_id));
}

}  // namespace nvfp4

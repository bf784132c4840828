#include <doctest.h>

#include <cmath>
#include <vector>

#include "nvfp4/prng.hpp"
#include "nvfp4/quantizers.hpp"

using namespace nvfp4;

namespace {

std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::vector<double> x(n);
  fill_gaussian(seed, 0, 0, x);
  for (double& v : x) v *= scale;
  return x;
}

double absmax(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

double sq_err(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

TEST_CASE("GridMax bounds") {
  CHECK_NOTHROW(GridMax(6.0));
  CHECK_NOTHROW(GridMax(0.5));
  CHECK_THROWS_AS(GridMax(0.0), std::invalid_argument);
  CHECK_THROWS_AS(GridMax(6.5), std::invalid_argument);
}

TEST_CASE("quantizers reject ungrouped lengths") {
  const std::vector<double> x(20, 1.0);
  CHECK_THROWS_AS(quantize_rtn(x, GridMax(6.0)), std::invalid_argument);
  CHECK_THROWS_AS(quantize_sr(x, 1), std::invalid_argument);
  CHECK_THROWS_AS(quantize_rtn_46(x), std::invalid_argument);
  CHECK_THROWS_AS(quantize_sr_46(x, 1), std::invalid_argument);
  CHECK_THROWS_AS(quantize_square_block(Matrix(16, 20), false), std::invalid_argument);
}

TEST_CASE("zero tensors quantize to zero") {
  const std::vector<double> z(64, 0.0);
  for (const NVFP4Tensor& t :
       {quantize_rtn(z, GridMax(6.0)), quantize_sr(z, 3), quantize_rtn_46(z), quantize_sr_46(z, 3)}) {
    CHECK(t.scale32 == 0.0f);
    CHECK(t.size() == 64);
    CHECK(t.groups() == 4);
    for (double v : dequantize(t)) CHECK(v == 0.0);
  }
  const SquareBlockTensor s = quantize_square_block(Matrix(32, 32), true);
  CHECK(s.scale32 == 0.0f);
}

TEST_CASE("stochastic rounding rejects non-finite input") {
  std::vector<double> x(16, 1.0);
  x[3] = std::nan("");
  CHECK_THROWS_AS(quantize_sr(x, 1), std::invalid_argument);
  x[3] = INFINITY;
  CHECK_THROWS_AS(quantize_sr(x, 1), std::invalid_argument);
}

TEST_CASE("round-to-nearest scale construction") {
  const auto x = gaussian(4096, 1);
  const NVFP4Tensor t = quantize_rtn(x, GridMax(6.0));
  CHECK(t.scale32 == static_cast<float>(absmax(x) / (6.0 * 256.0)));
  for (std::size_t g = 0; g < t.groups(); ++g) {
    const auto group = std::span<const double>(x).subspan(g * 16, 16);
    CHECK(t.scales8[g] == encode_fp8_rtn(absmax(group) / (double(t.scale32) * 6.0)));
    // Scales stay at or below the 256 ceiling (plus E4M3 rounding).
    CHECK(decode(t.scales8[g]) <= 256.0);
  }
  const auto d = dequantize(t);
  // Every element is within half a grid step of its scaled value, except
  // where the 6.0 ceiling clips.
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double unit = decode(t.scales8[i / 16]) * t.scale32;
    const double q = x[i] / unit;
    if (std::fabs(q) <= 6.0) CHECK(std::fabs(d[i] - x[i]) <= 1.0 * unit + 1e-12);
  }
}

TEST_CASE("stochastic rounding never clips and is unbiased") {
  const auto x = gaussian(256, 2, 3.0);
  const int reps = 4000;
  std::vector<double> mean(x.size(), 0.0);
  const NVFP4Tensor first = quantize_sr(x, 9, 0);
  CHECK(first.scale32 == static_cast<float>(absmax(x) / (6.0 * 16.0 / 17.0 * 448.0)));
  for (int r = 0; r < reps; ++r) {
    const NVFP4Tensor t = quantize_sr(x, 9, r);
    CHECK(t.scales8 == first.scales8);  // scales are deterministic
    const auto d = dequantize(t);
    for (std::size_t i = 0; i < x.size(); ++i) mean[i] += d[i] / reps;
  }
  double chi = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double unit = decode(first.scales8[i / 16]) * first.scale32;
    const double a = std::fabs(x[i]) / unit;
    REQUIRE(a <= 6.0);
    std::size_t k = 0;
    while (k < 7 && kFp4Magnitudes[k + 1] <= a) ++k;
    const double gap = k < 7 ? kFp4Magnitudes[k + 1] - kFp4Magnitudes[k] : 0.0;
    const double p = gap > 0 ? (a - kFp4Magnitudes[k]) / gap : 0.0;
    const double var = p * (1 - p) * gap * gap * unit * unit / reps;
    if (var > 0) chi += (mean[i] - x[i]) * (mean[i] - x[i]) / var;
  }
  // Sum of ~256 squared z-scores; a biased quantizer blows this up.
  CHECK(chi / x.size() < 1.3);
}

TEST_CASE("stochastic rounding streams") {
  const auto x = gaussian(64, 5);
  CHECK(quantize_sr(x, 1, 0) == quantize_sr(x, 1, 0));
  CHECK(!(quantize_sr(x, 1, 0) == quantize_sr(x, 1, 1)));
  CHECK(!(quantize_sr(x, 1, 0) == quantize_sr(x, 2, 0)));
}

TEST_CASE("stochastic rounding bumps scales in the E4M3 subnormal range") {
  // One huge group forces the others deep into the E4M3 subnormal range,
  // where nearest-rounding the scale could shrink it by more than 16/17.
  std::vector<double> x(64, 0.0);
  x[0] = 1e4;
  for (std::size_t i = 16; i < 64; ++i) x[i] = 0.0011 * (1 + (i % 5));
  const NVFP4Tensor t = quantize_sr(x, 4);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double unit = decode(t.scales8[i / 16]) * t.scale32;
    if (x[i] != 0.0) CHECK(std::fabs(x[i]) / unit <= 6.0);
  }
}

TEST_CASE("Four-over-Six picks the lower-error branch per group") {
  const auto x = gaussian(2048, 7);
  const NVFP4Tensor t = quantize_rtn_46(x);
  const FourOverSix opts;
  CHECK(t.scale32 == static_cast<float>(absmax(x) / (opts.scale_cap * 448.0)));
  const auto d = dequantize(t);
  int low_chosen = 0;
  for (std::size_t g = 0; g < t.groups(); ++g) {
    const auto group = std::span<const double>(x).subspan(g * 16, 16);
    const double gmax = absmax(group);
    const double s32 = t.scale32;
    const auto branch = [&](double c) {
      const Fp8Code sc = encode_fp8_rtn(gmax / (s32 * c));
      const double unit = decode(sc) * s32;
      std::vector<double> q(16);
      for (int i = 0; i < 16; ++i) q[i] = decode(encode_fp4_rtn(group[i] / unit)) * unit;
      return std::pair{sc, sq_err(group, q)};
    };
    const auto [sc6, e6] = branch(6.0);
    const auto [sc4, e4] = branch(4.0);
    const Fp8Code expect = e4 < e6 ? sc4 : sc6;
    CHECK(t.scales8[g] == expect);
    low_chosen += e4 < e6;
    CHECK(sq_err(group, std::span<const double>(d).subspan(g * 16, 16)) ==
          doctest::Approx(std::min(e4, e6)).epsilon(1e-12));
  }
  CHECK(low_chosen > 0);
  CHECK(low_chosen < int(t.groups()));
}

TEST_CASE("Four-over-Six with stochastic rounding is biased") {
  const auto x = gaussian(512, 8);
  const int reps = 3000;
  std::vector<double> m46(x.size(), 0.0), msr(x.size(), 0.0);
  for (int r = 0; r < reps; ++r) {
    const auto a = dequantize(quantize_sr_46(x, 3, r));
    const auto b = dequantize(quantize_sr(x, 3, r));
    for (std::size_t i = 0; i < x.size(); ++i) {
      m46[i] += a[i] / reps;
      msr[i] += b[i] / reps;
    }
  }
  const double norm = sq_err(x, std::vector<double>(x.size(), 0.0));
  const double bias46 = sq_err(m46, x) / norm;
  const double biassr = sq_err(msr, x) / norm;
  // The selection bias (~6e-4) dwarfs the Monte-Carlo floor (~8e-6).
  CHECK(bias46 > 2e-4);
  CHECK(biassr < 5e-5);
}

TEST_CASE("square blocks are transpose-compatible") {
  Matrix m(48, 32);
  fill_gaussian(6, 0, 0, m.data());
  for (bool use_46 : {false, true}) {
    const SquareBlockTensor t = quantize_square_block(m, use_46);
    CHECK(t.scale32 == static_cast<float>(absmax(m.data()) / (6.0 * 256.0)));
    CHECK(t.scales8.size() == 6);
    CHECK(dequantize(t.transposed()) == dequantize(t).transposed());
    CHECK(t.transposed().transposed() == t);
  }
  const double e6 = squared_distance(dequantize(quantize_square_block(m, false)).data(), m.data());
  const double e46 = squared_distance(dequantize(quantize_square_block(m, true)).data(), m.data());
  CHECK(e46 <= e6);
}

TEST_CASE("group layouts") {
  Matrix m(32, 48);
  fill_gaussian(10, 0, 0, m.data());
  const auto rtn = [](auto s) { return quantize_rtn(s, GridMax(6.0)); };
  const NVFP4Tensor rows = quantize_matrix(m, GroupLayout::kRowMajor, rtn);
  const NVFP4Tensor cols = quantize_matrix(m, GroupLayout::kColMajor, rtn);
  CHECK(rows.shape == m.shape());
  CHECK(cols.shape == m.shape());
  // Column-major groups of m are row-major groups of m^T.
  const NVFP4Tensor tr = quantize_matrix(m.transposed(), GroupLayout::kRowMajor, rtn);
  CHECK(dequantize_matrix(cols) == dequantize_matrix(tr).transposed());
  CHECK(dequantize_matrix(rows).shape() == m.shape());
  CHECK_THROWS_AS(with_shape(rows, Shape{8, 8}, GroupLayout::kRowMajor), std::invalid_argument);
  CHECK_THROWS_AS(with_shape(quantize_rtn(std::vector<double>(48, 1.0), GridMax(6.0)),
                             Shape{6, 8}, GroupLayout::kRowMajor),
                  std::invalid_argument);
}

TEST_CASE("reduced grid ceiling clips less aggressively in RTN") {
  const auto x = gaussian(4096, 12);
  const NVFP4Tensor t4 = quantize_rtn(x, GridMax(4.0));
  for (std::size_t g = 0; g < t4.groups(); ++g) {
    CHECK(decode(t4.scales8[g]) <= 256.0 * 17.0 / 16.0);
  }
  const auto d = dequantize(t4);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::fabs(decode(t4.fp4[i])) <= 6.0);
    CHECK(std::isfinite(d[i]));
  }
}

#include <doctest.h>

#include <vector>

#include "nvfp4/linear_graph.hpp"
#include "nvfp4/ms_eden.hpp"
#include "nvfp4/prng.hpp"
#include "oracles.hpp"

using namespace nvfp4;
using namespace nvfp4::graph;

namespace {

Matrix gaussian(std::size_t r, std::size_t c, std::uint64_t stream) {
  Matrix m(r, c);
  fill_gaussian(21, stream, 0, m.data());
  return m;
}

struct Layer {
  Matrix x = gaussian(128, 256, 0);  // tokens x in
  Matrix w = gaussian(128, 256, 1);  // out x in
  Matrix e = gaussian(128, 128, 2);  // tokens x out
};

const BackwardOptions kExact{Accumulate::kF64, true};

}  // namespace

TEST_CASE("baseline configs") {
  CHECK(baseline_config("nvidia") ==
        LayerConfig{ForwardScheme::kRtn16x16, BackwardScheme::kSrRht, Ablation::kFull, true});
  CHECK(baseline_config("tetrajet_v2") ==
        LayerConfig{ForwardScheme::kRtn1x16, BackwardScheme::kSrRht, Ablation::kFull, false});
  CHECK(baseline_config("four_over_six") ==
        LayerConfig{ForwardScheme::kRtn16x16Fos, BackwardScheme::kSrRht, Ablation::kFull, true});
  CHECK(baseline_config("quartet2") ==
        LayerConfig{ForwardScheme::kRtn1x16Fos, BackwardScheme::kMsEden, Ablation::kFull, false});
  CHECK(baseline_config("identity").forward == ForwardScheme::kIdentity);
  CHECK_THROWS_AS(baseline_config("fp8"), ConfigError);
  for (const char* name :
       {"nvidia", "tetrajet_v2", "four_over_six", "quartet2", "identity", "nvidia_46_backward"}) {
    CHECK_NOTHROW(baseline_config(name).validate());
  }
}

TEST_CASE("config validation") {
  LayerConfig c{ForwardScheme::kRtn1x16, BackwardScheme::kMsEden, Ablation::kB, false};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.ablation = Ablation::kD;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.ablation = Ablation::kC;
  CHECK_NOTHROW(c.validate());
  c = {ForwardScheme::kRtn16x16, BackwardScheme::kMsEden, Ablation::kFull, true};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {ForwardScheme::kRtn1x16, BackwardScheme::kSrRht, Ablation::kFull, true};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {ForwardScheme::kRtn16x16, BackwardScheme::kSrRht, Ablation::kE, true};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.ablation = Ablation::kD;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config text round trip") {
  for (const char* name : {"nvidia", "tetrajet_v2", "quartet2", "identity"}) {
    const LayerConfig c = baseline_config(name);
    CHECK(parse_config(to_text(c)) == c);
  }
  const LayerConfig c = parse_config(
      "# ablation study\n"
      "forward_scheme = rtn_1x16\n"
      "backward_scheme=sr   # plain SR\n"
      "\n"
      "ablation = a\n");
  CHECK(c == LayerConfig{ForwardScheme::kRtn1x16, BackwardScheme::kSr, Ablation::kA, false});
  CHECK_THROWS_AS(parse_config("forward_scheme = fp8"), ConfigError);
  CHECK_THROWS_AS(parse_config("colour = red"), ConfigError);
  CHECK_THROWS_AS(parse_config("forward_scheme"), ConfigError);
  CHECK_THROWS_AS(parse_config("reuse_forward_weights = maybe"), ConfigError);
  CHECK_THROWS_AS(parse_config("backward_scheme = ms_eden\nablation = b"), ConfigError);
}

TEST_CASE("identity forward and backward are exact") {
  const Layer l;
  const LayerConfig id = baseline_config("identity");
  const ForwardResult f = forward(l.x, l.w, id, Accumulate::kF64);
  const auto y = oracle::matmul_nt({l.x.data().begin(), l.x.data().end()},
                                   {l.w.data().begin(), l.w.data().end()}, 128, 128, 256);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(f.y.data()[i] == doctest::Approx(y[i]));
  const GradPair g = backward(f.tape, l.e, id, {1, 2}, kExact);
  const Matrix dx = matmul_nt(l.e, l.w.transposed(), Accumulate::kF64);
  const Matrix dw = matmul_nt(l.e.transposed(), l.x.transposed(), Accumulate::kF64);
  CHECK(squared_distance(g.dx.data(), dx.data()) < 1e-18 * squared_norm(dx.data()));
  CHECK(squared_distance(g.dw.data(), dw.data()) < 1e-18 * squared_norm(dw.data()));
}

TEST_CASE("forward quantizes along the inner dimension") {
  const Layer l;
  const auto rtn = [](auto s) { return quantize_rtn(s, GridMax(6.0)); };
  const ForwardResult f = forward(l.x, l.w, baseline_config("tetrajet_v2"), Accumulate::kF64);
  const Matrix qx = dequantize_matrix(quantize_matrix(l.x, GroupLayout::kRowMajor, rtn));
  const Matrix qw = dequantize_matrix(quantize_matrix(l.w, GroupLayout::kRowMajor, rtn));
  CHECK(f.y == matmul_nt(qx, qw, Accumulate::kF64));
  CHECK(materialize(f.tape.x) == qx);

  const ForwardResult n = forward(l.x, l.w, baseline_config("nvidia"), Accumulate::kF64);
  REQUIRE(std::holds_alternative<SquareBlockTensor>(n.tape.w));
  CHECK(materialize(n.tape.w) == dequantize(quantize_square_block(l.w, false)));

  CHECK_THROWS_AS(forward(l.x, gaussian(128, 128, 3), baseline_config("identity")),
                  std::invalid_argument);
  CHECK_THROWS_AS(forward(gaussian(4, 24, 4), gaussian(4, 24, 5), baseline_config("tetrajet_v2")),
                  std::invalid_argument);
}

TEST_CASE("gemm_emulated checks shapes") {
  CHECK_THROWS_AS(gemm_emulated(Matrix(2, 16), Matrix(2, 32)), std::invalid_argument);
}

TEST_CASE("ablation masks select which GEMM is exact") {
  const Layer l;
  const LayerConfig fwd = baseline_config("tetrajet_v2");
  const ForwardResult f = forward(l.x, l.w, fwd, Accumulate::kF64);
  const GradPair exact = backward(f.tape, l.e, baseline_config("identity"), {}, kExact);
  const auto run = [&](Ablation a) {
    LayerConfig c = fwd;
    c.backward = BackwardScheme::kSr;
    c.ablation = a;
    return backward(f.tape, l.e, c, {3, 4}, kExact);
  };
  const auto close = [](const Matrix& a, const Matrix& b) {
    return squared_distance(a.data(), b.data()) <= 1e-20 * squared_norm(b.data());
  };
  CHECK(close(run(Ablation::kA).dx, exact.dx));
  CHECK(!close(run(Ablation::kA).dw, exact.dw));
  CHECK(close(run(Ablation::kB).dw, exact.dw));
  CHECK(!close(run(Ablation::kB).dx, exact.dx));
  CHECK(close(run(Ablation::kC).dw, exact.dw));
  CHECK(!close(run(Ablation::kE).dx, exact.dx));
  CHECK(!close(run(Ablation::kE).dw, exact.dw));
}

TEST_CASE("reused square-block weights are not re-quantized") {
  const Layer l;
  const LayerConfig c = baseline_config("nvidia");
  const ForwardResult f = forward(l.x, l.w, c, Accumulate::kF64);
  const SeedPair seeds{5, 6};
  const GradPair g = backward(f.tape, l.e, c, seeds, kExact);
  // dX = SR(E) W_tape with no rotation; E's stream is 2 * gemm id.
  const Matrix qe = dequantize_matrix(quantize_matrix(
      l.e, GroupLayout::kRowMajor, [&](auto s) { return quantize_sr(s, seeds.sr, 2 * kInputGradGemm); }));
  const Matrix expect = matmul_nt(qe, materialize(f.tape.w).transposed(), Accumulate::kF64);
  CHECK(squared_distance(g.dx.data(), expect.data()) <= 1e-20 * squared_norm(expect.data()));
}

TEST_CASE("MS-EDEN backward uses the paired estimator") {
  const Layer l;
  const LayerConfig c = baseline_config("quartet2");
  const ForwardResult f = forward(l.x, l.w, c, Accumulate::kF64);
  const SeedPair seeds{7, 8};
  const GradPair g = backward(f.tape, l.e, c, seeds, kExact);
  const Matrix w = materialize(f.tape.w);
  const auto [qa, qb] = ms_eden_estimate_pair(l.e, w.transposed(), seeds, kInputGradGemm);
  const Matrix expect = matmul_nt(dequantize_matrix(qa), dequantize_matrix(qb), Accumulate::kF64);
  CHECK(g.dx == expect);
  CHECK(backward(f.tape, l.e, c, seeds, kExact).dw == g.dw);
  CHECK(!(backward(f.tape, l.e, c, {7, 9}, kExact).dw == g.dw));
}

TEST_CASE("backward options and shape checks") {
  const Layer l;
  const LayerConfig c = baseline_config("quartet2");
  const ForwardResult f = forward(l.x, l.w, c);
  const GradPair g = backward(f.tape, l.e, c, {1, 1}, {Accumulate::kF32, false});
  CHECK(g.dx.size() == 0);
  CHECK(g.dw.shape() == l.w.shape());
  CHECK_THROWS_AS(backward(f.tape, gaussian(128, 64, 9), c, {1, 1}), std::invalid_argument);
}

TEST_CASE("rotating backward schemes need 128-aligned inner dimensions") {
  const Matrix x = gaussian(48, 64, 10);
  const Matrix w = gaussian(32, 64, 11);
  const Matrix e = gaussian(48, 32, 12);
  const LayerConfig c = baseline_config("tetrajet_v2");
  const ForwardResult f = forward(x, w, c);
  CHECK_THROWS_AS(backward(f.tape, e, c, {1, 2}), std::invalid_argument);
  LayerConfig sr = c;
  sr.backward = BackwardScheme::kSr;
  CHECK_NOTHROW(backward(f.tape, e, sr, {1, 2}));
}

TEST_CASE("step seeds") {
  CHECK(step_seeds(1, 2, 3) == step_seeds(1, 2, 3));
  CHECK(!(step_seeds(1, 2, 3) == step_seeds(1, 3, 3)));
  CHECK(!(step_seeds(1, 2, 3) == step_seeds(1, 2, 4)));
  CHECK(step_seeds(1, 2, 3).rht != step_seeds(1, 2, 3).sr);
}

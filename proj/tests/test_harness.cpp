#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <sstream>
#include <string>

#include "nvfp4/harness.hpp"

using namespace nvfp4;
using namespace nvfp4::harness;

TEST_CASE("mse bench is reproducible and validates methods") {
  const auto a = mse_bench({"rtn_1x16", "ms_eden_1x16"}, 40000, 3);
  const auto b = mse_bench({"rtn_1x16", "ms_eden_1x16"}, 40000, 3);
  REQUIRE(a.size() == 2);
  CHECK(a[0].mse == b[0].mse);
  CHECK(a[1].mse == b[1].mse);
  CHECK(a[0].samples == 40960);
  CHECK(a[0].group_config == "1x16");
  CHECK(a[0].std_error > 0.0);
  CHECK(mse_bench({"rtn_1x16"}, 40000, 4)[0].mse != a[0].mse);
  CHECK_THROWS_AS(mse_bench({"fp8"}, 100, 1), std::invalid_argument);
}

TEST_CASE("mse bench lands near the reference values at small sample counts") {
  const auto r = mse_bench(mse_methods(), 300000, 11);
  REQUIRE(r.size() == 7);
  for (const auto& m : r) {
    const auto ref = reference_mse_e3(m.method);
    REQUIRE(ref.has_value());
    CHECK(m.mse * 1e3 == doctest::Approx(*ref).epsilon(0.05));
  }
  CHECK(!reference_mse_e3("nope").has_value());
}

TEST_CASE("acceptance band uses four standard errors") {
  MseReport r{"x", "1x16", 1.0, 0.01, 1, 0};
  CHECK(mse_within_band(r, 1.0));
  r.std_error = 0.02;
  CHECK(!mse_within_band(r, 1.0));
  r = {"x", "1x16", 1.04, 0.0, 1, 0};
  CHECK(mse_within_band(r, 1.0));
  r.mse = 1.06;
  CHECK(!mse_within_band(r, 1.0));
}

TEST_CASE("log-log slope fit") {
  std::vector<std::size_t> b;
  std::vector<double> e;
  for (std::size_t k = 1; k <= 1024; k *= 2) {
    b.push_back(k);
    e.push_back(3.0 / k + (k < 16 ? 1.0 : 0.0));  // early points ignored
  }
  CHECK(fit_log_slope(b, e, 16) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(fit_log_slope(b, e, 2048), std::invalid_argument);
  CHECK_THROWS_AS(fit_log_slope(b, {1.0}, 1), std::invalid_argument);
}

TEST_CASE("concentration report shape") {
  ConcentrationLayer small{128, 128, 128};
  const auto r = concentration(graph::baseline_config("quartet2"), "quartet2", 32, 1, 5, small);
  CHECK(r.b_values == std::vector<std::size_t>{1, 2, 4, 8, 16, 32});
  REQUIRE(r.errors.size() == 6);
  for (double e : r.errors) CHECK(e > 0.0);
  CHECK(r.errors.back() < r.errors.front());
  CHECK_THROWS_AS(concentration(graph::baseline_config("quartet2"), "q", 48, 1, 5, small),
                  std::invalid_argument);
  const auto id = concentration(graph::baseline_config("tetrajet_v2"), "t", 32, 1, 5, small);
  CHECK(id.method == "t");
}

TEST_CASE("gradient check against finite differences") {
  const GradCheckProblem p = make_grad_check_problem(7);
  const graph::LayerConfig id = graph::baseline_config("identity");
  const GradCheckReport r = grad_check(p, id, 1);
  CHECK(r.max_rel_error < 1e-4);
  CHECK(r.coordinates == 64);

  SUBCASE("second-order convergence") {
    const double e1 = grad_check(p, id, 1, 1e-2).max_rel_error;
    const double e2 = grad_check(p, id, 1, 5e-3).max_rel_error;
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
  }
  SUBCASE("errors are surfaced") {
    GradCheckProblem bad = p;
    bad.target = Matrix(3, 3);
    CHECK_THROWS_AS(grad_check(bad, id, 1), std::invalid_argument);
    CHECK_THROWS_AS(grad_check(p, graph::baseline_config("quartet2"), 1), graph::ConfigError);
  }
}

TEST_CASE("training demo") {
  TrainDemoOptions o;
  o.steps = 60;
  o.tail = 10;
  const NamedConfig id{"identity", graph::baseline_config("identity")};
  const TrainRun a = train_run(id, 1, o);
  const TrainRun b = train_run(id, 1, o);
  CHECK(a.losses == b.losses);
  CHECK(a.finite);
  CHECK(a.losses.size() == 60);
  CHECK(a.final_loss < 0.5 * a.losses.front());

  const auto runs = train_demo({id, {"quartet2", graph::baseline_config("quartet2")}}, {1, 2}, o);
  REQUIRE(runs.size() == 4);
  const auto s = summarize(runs);
  REQUIRE(s.size() == 2);
  CHECK(s[0].config == "identity");
  CHECK(s[0].runs == 2);
  CHECK(s[1].all_finite);
  CHECK(s[1].std_error >= 0.0);
}

TEST_CASE("reports") {
  const auto m = mse_bench({"sr_1x16"}, 4096, 1);
  CHECK(mse_csv(m).rfind("method,group_config,mse_e3,std_error_e3,samples,seed\nsr_1x16,1x16,", 0) == 0);
  const auto mj = nlohmann::json::parse(mse_json(m));
  CHECK(mj[0]["reference_e3"] == 23.5);

  const auto naive = cost_model(Pipeline::kNaive);
  const auto post = cost_model(Pipeline::kPostHoc);
  const auto cj = nlohmann::json::parse(cost_json(naive, post));
  CHECK(cj["naive"]["total_bits_per_elem"] == 13.5);
  CHECK(cj["posthoc"]["kernel1"]["sm_to_gmem_bits_per_elem"] == 5.0);
  const std::string table = cost_table(naive, post);
  CHECK(table.find("4.5+4.5") != std::string::npos);
  CHECK(table.find("5+0.5") != std::string::npos);
  CHECK(table.find("18.5%") != std::string::npos);

  const std::string f = formats_csv();
  std::istringstream is(f);
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 1 + 16 + 256);
  CHECK(f.find("e4m3,126,0x7E,448\n") != std::string::npos);
  CHECK(f.find("e4m3,127,0x7F,nan\n") != std::string::npos);
  CHECK(f.find("e2m1,7,0x7,6\n") != std::string::npos);

  TrainRun r{"c", 3, {1.5, 0.5}, true, 0.5};
  CHECK(train_csv({r}) == "config,seed,step,loss\nc,3,0,1.5\nc,3,1,0.5\n");
}

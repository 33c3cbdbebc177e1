#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "condu/harness.hpp"
#include "condu/stats.hpp"

#include <cmath>
#include <vector>

using namespace condu;

TEST_CASE("sample generation")
{
  auto m = truncated_normal_model();
  auto a = generate_sample(m, 50000, 9);
  auto b = generate_sample(m, 50000, 9);
  CHECK(a.xs().data() == b.xs().data());
  CHECK(a.zs().data() == b.zs().data());
  std::vector<double> resid(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(std::abs(a.z(i)[0]) <= 1.0);
    resid[i] = a.x(i)[0] - a.z(i)[0];
  }
  CHECK(std::abs(stats::mean(resid)) <= 4.0 / std::sqrt(50000.0));
  CHECK(stats::variance(resid) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(generate_sample(m, 10, 10).xs().data() != a.xs().data());
}

TEST_CASE("bandwidth and penalty schedules")
{
  Bandwidth fixed{0.2, 0.0};
  CHECK(fixed.at(1000) == 0.2);
  Bandwidth rate{1.0, -0.2};
  CHECK(rate.at(32) == doctest::Approx(0.5));
  PenaltyRule r{"lasso", false, 0.5, -0.5};
  CHECK(r.lambda(400, 0.25, 1) == doctest::Approx(0.5 / 10.0));
  CHECK(rep_seed(1, 0, 3) == rep_seed(1, 0, 3));
  CHECK(rep_seed(1, 0, 3) != rep_seed(1, 1, 3));
}

TEST_CASE("existence experiment records and aggregates")
{
  auto c = preset_experiment("existence_ladder");
  c.reps = 40;
  c.workers = 1;
  auto r = run_experiment(c);
  REQUIRE(r.records.size() == 3 * 40);
  REQUIRE(r.columns.size() == r.records.front().size());
  // frequencies recomputed from the raw records
  for (const auto& agg : r.aggregates["by_n"]) {
    const double n = agg["n"].get<double>();
    double hits = 0;
    for (const auto& row : r.records) {
      if (row[0] == n) {
        hits += row[5];
      }
    }
    CHECK(agg["frequency"].get<double>() == hits / 40.0);
  }
  c.workers = 3;
  CHECK(run_experiment(c).csv() == r.csv());
}

TEST_CASE("more reps shrink the standard error")
{
  auto c = preset_experiment("existence_ladder");
  c.n_values = {300};
  c.reps = 400;
  auto small = run_experiment(c);
  c.reps = 1600;
  auto large = run_experiment(c);
  const double se_small = small.aggregates["by_n"][0]["std_error"].get<double>();
  const double se_large = large.aggregates["by_n"][0]["std_error"].get<double>();
  CHECK(se_large / se_small == doctest::Approx(0.5).epsilon(0.25));
  // a prefix of the reps is the same draw
  for (std::size_t i = 0; i < small.records.size(); ++i) {
    CHECK(small.records[i] == large.records[i]);
  }
}

TEST_CASE("concentration experiment")
{
  auto c = preset_experiment("concentration");
  c.reps = 50;
  c.n_values = {651};
  auto r = run_experiment(c);
  CHECK(r.records.size() == 50);
  CHECK(!r.checks.empty());
  CHECK(r.to_json()["experiment"] == "concentration");
}

TEST_CASE("two-step experiment runs small")
{
  auto c = preset_experiment("two_step");
  c.n_values = {300, 600};
  c.reps = 3;
  c.workers = 2;
  auto r = run_experiment(c);
  CHECK(r.records.size() == 2 * 3 * 2);
  c.workers = 1;
  CHECK(run_experiment(c).csv() == r.csv());
}

TEST_CASE("presets")
{
  for (const auto& name : preset_experiment_names()) {
    CHECK_NOTHROW(preset_experiment(name));
  }
  CHECK_THROWS_AS(preset_experiment("bootstrap"), std::invalid_argument);
  CHECK(sparse_design_basis().size() == 8);
  auto bad = preset_experiment("existence");
  bad.reps = 0;
  CHECK_THROWS_AS(run_experiment(bad), std::invalid_argument);
}

TEST_CASE("report serialisation")
{
  ExperimentReport r;
  r.columns = {"a", "b"};
  r.records = {{1.0, 0.1}, {2.0, 1e-300}};
  r.checks = {{"x", true, true, ""}, {"y", false, false, ""}};
  CHECK(r.passed());
  CHECK(r.csv() == "a,b\n1,0.10000000000000001\n2,1e-300\n");
  r.checks.push_back({"z", false, true, ""});
  CHECK(!r.passed());
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "condu/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace condu;

namespace {

std::string temp_path(const std::string& name)
{
  return (std::filesystem::temp_directory_path() / ("condu_test_" + name)).string();
}

void write_file(const std::string& path, const std::string& text)
{
  std::ofstream(path) << text;
}

} // namespace

TEST_CASE("sample csv round trip is exact")
{
  PointSet x{{0.1}, {1.0 / 3.0}, {-2.5e-17}};
  PointSet z{{0.7}, {-0.2}, {M_PI}};
  ObservationSample s(x, z);
  const auto path = temp_path("sample.csv");
  io::write_sample_csv(path, s);
  auto back = io::read_sample_csv(path);
  CHECK(back.xs().data() == s.xs().data());
  CHECK(back.zs().data() == s.zs().data());
  std::remove(path.c_str());
}

TEST_CASE("column order and errors")
{
  const auto path = temp_path("cols.csv");
  write_file(path, "z1,x1\n0.5,2\n-0.5,3\n");
  auto s = io::read_sample_csv(path);
  CHECK(s.x(1)[0] == 3.0);
  CHECK(s.z(1)[0] == -0.5);

  write_file(path, "x1,z1\n1,abc\n");
  CHECK_THROWS_AS(io::read_sample_csv(path), std::invalid_argument);
  write_file(path, "x1,z2\n1,2\n");
  CHECK_THROWS_AS(io::read_sample_csv(path), std::invalid_argument);
  std::remove(path.c_str());
  CHECK_THROWS(io::read_sample_csv(temp_path("missing.csv")));
}

TEST_CASE("queries csv")
{
  const auto path = temp_path("q.csv");
  write_file(path, "z1,z2\n0,0\n0.3,-0.3\n");
  auto q = io::read_queries_csv(path);
  REQUIRE(q.size() == 2);
  CHECK(q[1] == std::vector<double>{0.3, -0.3});
  std::remove(path.c_str());
}

TEST_CASE("model configuration")
{
  auto j = nlohmann::json::parse(R"({
    "functional": {"name": "rank_prob"},
    "kernel": {"name": "epanechnikov"},
    "h": 0.3,
    "basis": {"type": "concat", "parts": [
      {"type": "polynomial", "degree": 1, "intercept": false},
      {"type": "trigonometric", "max_freq": 1, "terms": "sin"}]},
    "link": "probit",
    "design_points": [-0.5, 0.0, 0.5],
    "tuples": {"mode": "subsample", "m": 4, "seed": 3},
    "penalty": {"adaptive": true, "tilde_lambda": 0.01, "delta": 2},
    "lasso": {"kkt_tol": 1e-9},
    "kappa": {"s": 2, "strategy": "sampled", "samples": 500}
  })");
  auto c = io::parse_model_config(j);
  CHECK(c.h == 0.3);
  REQUIRE(c.basis.has_value());
  CHECK(c.basis->size() == 4);
  CHECK(c.basis->link().kind() == LinkKind::probit);
  CHECK(c.design_points == std::vector<double>{-0.5, 0.0, 0.5});
  CHECK(c.tuple_mode == TupleMode::subsample);
  CHECK(c.tuple_count == 4);
  CHECK(c.penalty.adaptive);
  CHECK(c.penalty.delta == 2.0);
  CHECK(c.lasso.kkt_tol == 1e-9);
  REQUIRE(c.kappa.has_value());
  CHECK(c.kappa->options.strategy == REStrategy::sampled);
  CHECK(c.kappa->options.samples == 500);

  auto bad = j;
  bad["basis"] = {{"type", "wavelet"}};
  CHECK_THROWS_AS(io::parse_model_config(bad), std::invalid_argument);
  bad = j;
  bad.erase("h");
  CHECK_THROWS_AS(io::parse_model_config(bad), std::invalid_argument);
  CHECK_THROWS_AS(io::parse_tuple_mode("random"), std::invalid_argument);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "condu/functionals.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace condu;

namespace {

double call2(const UStatFunctional& g, std::vector<double> a, std::vector<double> b)
{
  std::vector<Point> xs{Point(a), Point(b)};
  return g.evaluate(xs);
}

} // namespace

TEST_CASE("built-in kernels")
{
  auto rank = builtin_functional("rank_prob");
  CHECK(call2(rank, {0.1}, {0.2}) == 1.0);
  CHECK(call2(rank, {0.2}, {0.2}) == 1.0);
  CHECK(call2(rank, {0.3}, {0.2}) == 0.0);
  CHECK(std::holds_alternative<BoundedTail>(rank.tail()));

  auto var = builtin_functional("cond_variance");
  CHECK(call2(var, {2.0}, {0.5}) == doctest::Approx(4.0 - 1.0));

  auto cov = builtin_functional("cond_covariance");
  CHECK(cov.x_dim() == 2);
  CHECK(call2(cov, {2.0, 3.0}, {5.0, 7.0}) == doctest::Approx(2.0 * 5.0 - 2.0 * 7.0));

  auto gini = builtin_functional("gini");
  CHECK(gini.symmetric());
  CHECK(call2(gini, {1.0}, {-2.5}) == doctest::Approx(3.5));
  CHECK(call2(gini, {-2.5}, {1.0}) == call2(gini, {1.0}, {-2.5}));

  CHECK_THROWS_AS(builtin_functional("median"), std::invalid_argument);
}

TEST_CASE("evaluate checks arity and dimension")
{
  auto rank = builtin_functional("rank_prob");
  std::vector<double> a{0.0};
  std::vector<Point> one{Point(a)};
  CHECK_THROWS_AS(rank.evaluate(one), std::invalid_argument);
  CHECK_THROWS_AS(call2(rank, {0.0, 1.0}, {0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("links")
{
  Link logit(LinkKind::logit);
  Link probit(LinkKind::probit);
  Link id;
  CHECK(logit.apply(0.5) == doctest::Approx(0.0));
  CHECK(probit.apply(0.5) == doctest::Approx(0.0));
  CHECK(logit.derivative(0.5) == doctest::Approx(4.0));
  CHECK(probit.derivative(0.5) == doctest::Approx(std::sqrt(2.0 * M_PI)));
  CHECK(id.apply(-7.0) == -7.0);
  CHECK(id.derivative(3.0) == 1.0);

  for (double x : {0.01, 0.3, 0.77, 0.999}) {
    CHECK(logit.inverse(logit.apply(x)) == doctest::Approx(x).epsilon(1e-12));
    CHECK(probit.inverse(probit.apply(x)) == doctest::Approx(x).epsilon(1e-10));
  }

  auto edge = logit.apply_checked(0.0);
  CHECK(edge.clamped);
  CHECK(std::isfinite(edge.value));
  CHECK(!probit.apply_checked(0.4).clamped);
  CHECK_THROWS_AS(logit.apply(1.5), std::domain_error);
  CHECK_THROWS_AS(probit.apply(-0.1), std::domain_error);
  CHECK_THROWS_AS(make_link("cloglog"), std::invalid_argument);
}

TEST_CASE("polynomial basis")
{
  auto b = polynomial_basis(2, 1, 2);
  REQUIRE(b.size() == 6);
  std::vector<std::string> labels;
  for (auto& f : b.functions()) {
    labels.push_back(f.label);
  }
  CHECK(labels == std::vector<std::string>{"1", "z1", "z2", "z1^2", "z1*z2", "z2^2"});
  std::vector<double> z{0.5, -2.0};
  CHECK(b.eval(z) == std::vector<double>{1.0, 0.5, -2.0, 0.25, -1.0, 4.0});
  CHECK_THROWS_AS(b.eval(std::vector<double>{1.0}), std::invalid_argument);

  auto noint = polynomial_basis(2, 1, 1, 1.0, false);
  CHECK(noint.size() == 2);
}

TEST_CASE("trigonometric, indicator and concatenated bases")
{
  auto s = trigonometric_basis(2, 1, 1, TrigTerms::sin);
  REQUIRE(s.size() == 2);
  std::vector<double> z{0.5, -0.25};
  auto v = s.eval(z);
  CHECK(v[0] == doctest::Approx(1.0));
  CHECK(v[1] == doctest::Approx(-std::sqrt(0.5)));
  CHECK(trigonometric_basis(1, 1, 3).size() == 6);

  auto ind = indicator_basis(1, 1, 4, -1.0, 1.0);
  REQUIRE(ind.size() == 4);
  CHECK(ind.eval(std::vector<double>{-0.9}) == std::vector<double>{1, 0, 0, 0});
  CHECK(ind.eval(std::vector<double>{1.0}) == std::vector<double>{0, 0, 0, 1});
  CHECK(ind.eval(std::vector<double>{1.1}) == std::vector<double>{0, 0, 0, 0});

  auto cat = concat_bases({polynomial_basis(2, 1, 1).with_link(Link(LinkKind::probit)), s});
  CHECK(cat.size() == 5);
  CHECK(cat.link().kind() == LinkKind::probit);
  CHECK_THROWS_AS(concat_bases({polynomial_basis(1, 1, 1), s}), std::invalid_argument);
}

TEST_CASE("identifiability")
{
  PointSet design{{-0.5}, {0.0}, {0.5}};
  auto full = enumerate_tuples(3, 2, TupleMode::full);
  auto ok = check_identifiability(polynomial_basis(2, 1, 1), design, full);
  CHECK(ok.identifiable);
  CHECK(ok.rank == 3);

  // two tuples cannot identify six coefficients
  auto few = enumerate_tuples(2, 2, TupleMode::full);
  auto bad = check_identifiability(polynomial_basis(2, 1, 2), PointSet{{-0.5}, {0.5}}, few);
  CHECK(!bad.identifiable);
  CHECK(bad.rank == 2);
  CHECK(bad.smallest_singular_value == 0.0);
}

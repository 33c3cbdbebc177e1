#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "../support/oracles.hpp"

#include "condu/asymptotics.hpp"
#include "condu/stats.hpp"

#include <cmath>
#include <vector>

using namespace condu;

namespace {

bool within_se(double est, double se, double truth, double z = 4.0)
{
  return std::abs(est - truth) <= z * se + 1e-12;
}

UStatFunctional constant_functional()
{
  return UStatFunctional("const", 2, 1, [](std::span<const Point>) { return 0.7; }, BoundedTail{1.0}, true);
}

} // namespace

TEST_CASE("truncated normal sampler")
{
  Rng a(5), b(6);
  const int n = 200000;
  std::vector<double> inv(n), rej(n);
  for (int i = 0; i < n; ++i) {
    inv[i] = sample_truncated_normal(a, -1.0, 1.0);
    rej[i] = sample_truncated_normal_rejection(b, -1.0, 1.0);
    REQUIRE(std::abs(inv[i]) <= 1.0);
  }
  // variance of N(0,1) truncated to [-1, 1]
  const double var = 1.0 - 2.0 * oracle::profile("gaussian", 1.0) / (1.0 - 2.0 * oracle::phi_cdf(-1.0));
  const double se = std::sqrt(var / n);
  CHECK(within_se(stats::mean(inv), se, 0.0));
  CHECK(within_se(stats::mean(rej), se, 0.0));
  CHECK(stats::variance(inv) == doctest::Approx(var).epsilon(0.01));
  CHECK(stats::variance(rej) == doctest::Approx(var).epsilon(0.01));
}

TEST_CASE("model density and oracle")
{
  auto m = truncated_normal_model();
  std::vector<double> z{0.0};
  CHECK(m.f_z(z) == doctest::Approx(oracle::profile("gaussian", 0.0) / (1.0 - 2.0 * oracle::phi_cdf(-1.0))));
  z[0] = 1.5;
  CHECK(m.f_z(z) == 0.0);
  std::vector<double> zz{0.3, -0.3};
  CHECK(m.theta_oracle(zz) == doctest::Approx(oracle::phi_cdf(-0.6 / std::sqrt(2.0))));
  CHECK(m.has_oracle_for(builtin_functional("rank_prob")));
  CHECK(!m.has_oracle_for(builtin_functional("gini")));
}

TEST_CASE("conditional moments against quadrature")
{
  auto m = truncated_normal_model();
  auto g = builtin_functional("rank_prob");
  std::vector<double> z{0.3, -0.3};

  auto th = mc_conditional_moment(m, g, {MomentKind::theta}, z, 40000, 1);
  CHECK(within_se(th.estimate, th.std_error, oracle::phi_cdf(-0.6 / std::sqrt(2.0))));

  // theta_{1,1}: shared X_1 at z1, independent X_2 at z2
  MomentSpec s11{MomentKind::theta_jl, 0, 0, 0, false};
  auto t11 = mc_conditional_moment(m, g, s11, z, 40000, 2);
  CHECK(within_se(t11.estimate, t11.std_error, oracle::rank_second_moment(0.3, -0.3)));

  // decoupled copies give theta(z) * theta(z')
  MomentSpec dec = s11;
  dec.decouple = true;
  auto td = mc_conditional_moment(m, g, dec, z, 40000, 3);
  const double t = oracle::phi_cdf(-0.6 / std::sqrt(2.0));
  CHECK(within_se(td.estimate, td.std_error, t * t));

  CHECK_THROWS_AS(mc_conditional_moment(m, g, {MomentKind::theta}, z, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(mc_conditional_moment(m, g, {MomentKind::theta}, std::vector<double>{0.0}, 10, 1),
                  std::invalid_argument);
}

TEST_CASE("moments are reproducible across worker counts")
{
  auto m = truncated_normal_model();
  auto g = builtin_functional("rank_prob");
  MomentSpec s{MomentKind::theta_jl, 1, 0, 0, false};
  std::vector<double> z{0.1, 0.1};
  auto a = mc_conditional_moment(m, g, s, z, 10000, 77, 1);
  auto b = mc_conditional_moment(m, g, s, z, 10000, 77, 3);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("rho squared")
{
  auto m = truncated_normal_model();
  auto kernel = make_kernel("epanechnikov", 1);
  OracleOptions o;
  o.reps = 20000;
  o.seed = 4;

  OracleOptions mc = o;
  mc.mode = OracleMode::mc;
  auto c = rho_squared(m, constant_functional(), kernel, std::vector<double>{0.3, -0.3}, mc);
  CHECK(c.rho_sq == doctest::Approx(0.0).epsilon(1e-12));

  auto g = builtin_functional("rank_prob");
  auto distinct = rho_squared(m, g, kernel, std::vector<double>{0.3, -0.3}, o);
  CHECK(distinct.terms.size() == 2);
  CHECK(distinct.rho_sq > 0.0);
  auto equal = rho_squared(m, g, kernel, std::vector<double>{0.2, 0.2}, o);
  CHECK(equal.terms.size() == 4);
  CHECK_THROWS_AS(rho_squared(m, g, kernel, std::vector<double>{1.5, 0.0}, o), std::domain_error);
}

TEST_CASE("covariance matrices")
{
  auto m = truncated_normal_model();
  auto kernel = make_kernel("epanechnikov", 1);
  auto g = builtin_functional("rank_prob");
  OracleOptions o;
  o.reps = 20000;
  o.seed = 8;

  auto one = h_matrix(m, g, kernel, {{0.3, -0.3}}, o);
  auto rho = rho_squared(m, g, kernel, std::vector<double>{0.3, -0.3}, o);
  CHECK(one.matrix(0, 0) == rho.rho_sq);

  auto two = h_matrix(m, g, kernel, {{0.3, -0.3}, {0.5, 0.6}}, o);
  CHECK(two.matrix(0, 1) == 0.0);
  CHECK(two.matrix(1, 0) == 0.0);

  auto shared = h_matrix(m, g, kernel, {{0.3, -0.3}, {-0.3, 0.5}}, o);
  CHECK(shared.matrix(0, 1) == shared.matrix(1, 0));
  CHECK(shared.matrix(0, 1) != 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shared.matrix);
  CHECK(es.eigenvalues().minCoeff() >= -4.0 * shared.std_error.maxCoeff());

  PointSet design{{-0.5}, {0.5}};
  auto tuples = enumerate_tuples(2, 2, TupleMode::full);
  auto plain = tilde_h_matrix(m, g, kernel, Link(), design, tuples, o);
  auto probit = tilde_h_matrix(m, g, kernel, Link(LinkKind::probit), design, tuples, o);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double da = Link(LinkKind::probit).derivative(plain.theta[a]);
      const double db = Link(LinkKind::probit).derivative(plain.theta[b]);
      CHECK(probit.matrix(a, b) == doctest::Approx(plain.matrix(a, b) * da * db).epsilon(1e-12));
    }
  }
}

TEST_CASE("limit covariance of the coefficients")
{
  Eigen::MatrixXd h(2, 2);
  h << 2.0, 0.5, 0.5, 1.0;
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  CHECK(beta_limit_covariance(id, h).isApprox(h, 1e-14));

  Eigen::MatrixXd psi(2, 2);
  psi << 2.0, 0.0, 1.0, 1.0;
  Eigen::MatrixXd inv = psi.inverse();
  CHECK(beta_limit_covariance(psi, h).isApprox(inv * h * inv.transpose(), 1e-12));

  Eigen::MatrixXd singular(2, 2);
  singular << 1.0, 2.0, 2.0, 4.0;
  CHECK_THROWS(beta_limit_covariance(singular, h));
}

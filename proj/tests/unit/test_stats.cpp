#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "condu/stats.hpp"

#include <cmath>
#include <vector>

using namespace condu;

TEST_CASE("normal distribution")
{
  CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(stats::normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
  for (double p : {1e-9, 0.01, 0.3, 0.5, 0.9, 1 - 1e-9}) {
    CHECK(stats::normal_cdf(stats::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
}

TEST_CASE("moments")
{
  std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(stats::mean(v) == 3.0);
  CHECK(stats::variance(v) == doctest::Approx(2.5));
  CHECK(stats::sd(v) == doctest::Approx(std::sqrt(2.5)));
  CHECK(stats::skewness(v) == doctest::Approx(0.0));
  std::vector<double> skewed{0.0, 0.0, 0.0, 10.0};
  CHECK(stats::skewness(skewed) > 0.0);
}

TEST_CASE("frequency and sign test")
{
  CHECK(stats::binomial_se(0.5, 100) == doctest::Approx(0.05));
  CHECK(stats::binomial_se(1.0, 100) == 0.0);
  CHECK(stats::sign_test_pvalue(5, 0) == doctest::Approx(1.0 / 32.0));
  CHECK(stats::sign_test_pvalue(0, 0) == 1.0);
  CHECK(stats::sign_test_pvalue(2, 2) == doctest::Approx(11.0 / 16.0));
}

#include "condu/stats.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <stdexcept>

namespace condu::stats {

double normal_cdf(double x)
{
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_pdf(double x)
{
  static const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double normal_quantile(double p)
{
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie in (0, 1)");
  }
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

double mean(std::span<const double> v)
{
  if (v.empty()) {
    throw std::invalid_argument("mean of empty sample");
  }
  double s = 0.0;
  for (double x : v) {
    s += x;
  }
  return s / static_cast<double>(v.size());
}

double variance(std::span<const double> v)
{
  if (v.size() < 2) {
    throw std::invalid_argument("variance needs at least two values");
  }
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) {
    s += (x - m) * (x - m);
  }
  return s / static_cast<double>(v.size() - 1);
}

double sd(std::span<const double> v)
{
  return std::sqrt(variance(v));
}

namespace {

double central_moment(std::span<const double> v, int order)
{
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) {
    s += std::pow(x - m, order);
  }
  return s / static_cast<double>(v.size());
}

} // namespace

double skewness(std::span<const double> v)
{
  const double m2 = central_moment(v, 2);
  return central_moment(v, 3) / std::pow(m2, 1.5);
}

double kurtosis(std::span<const double> v)
{
  const double m2 = central_moment(v, 2);
  return central_moment(v, 4) / (m2 * m2) - 3.0;
}

double binomial_se(double p, std::size_t reps)
{
  if (reps == 0) {
    throw std::invalid_argument("binomial_se: reps must be positive");
  }
  return std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
}

double sign_test_pvalue(std::size_t wins, std::size_t losses)
{
  const std::size_t trials = wins + losses;
  if (trials == 0) {
    return 1.0;
  }
  if (wins == 0) {
    return 1.0;
  }
  boost::math::binomial_distribution<double> dist(static_cast<double>(trials), 0.5);
  return boost::math::cdf(boost::math::complement(dist, static_cast<double>(wins) - 1.0));
}

} // namespace condu::stats

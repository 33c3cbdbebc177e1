#pragma once

#include <cstddef>
#include <span>

namespace condu::stats {

double normal_cdf(double x);
double normal_pdf(double x);
//! Standard normal quantile; p must lie in (0, 1).
double normal_quantile(double p);

double mean(std::span<const double> v);
//! Unbiased sample variance (n - 1 denominator).
double variance(std::span<const double> v);
double sd(std::span<const double> v);
double skewness(std::span<const double> v);
//! Excess kurtosis.
double kurtosis(std::span<const double> v);

//! Standard error of an empirical frequency p estimated from `reps` draws.
double binomial_se(double p, std::size_t reps);

//! One-sided exact sign test: P(Bin(wins + losses, 1/2) >= wins).
double sign_test_pvalue(std::size_t wins, std::size_t losses);

} // namespace condu::stats

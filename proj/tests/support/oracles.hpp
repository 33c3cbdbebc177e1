#pragma once

// Reference computations used by the tests. They share no code with the
// library: plain loops, textbook formulas, dense linear algebra.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace oracle {

inline double profile(const std::string& kernel, double u)
{
  if (kernel == "epanechnikov") {
    return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  }
  if (kernel == "uniform") {
    return std::abs(u) <= 1.0 ? 0.5 : 0.0;
  }
  return std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
}

struct BruteResult
{
  double num = 0.0;
  double den = 0.0;
  double count = 0.0;
};

// Sum over every injective index tuple by k nested loops written as an
// odometer over {0..n-1}^k, skipping tuples with a repeated index.
inline BruteResult brute_force(const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& z,
                               const std::vector<double>& z_tuple, std::size_t k, const std::string& kernel, double h,
                               const std::function<double(const std::vector<const std::vector<double>*>&)>& g)
{
  const std::size_t n = x.size();
  const std::size_t p = z.front().size();
  BruteResult out;
  std::vector<std::size_t> idx(k, 0);
  while (true) {
    bool injective = true;
    for (std::size_t a = 0; a < k && injective; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        if (idx[a] == idx[b]) {
          injective = false;
          break;
        }
      }
    }
    if (injective) {
      double w = 1.0;
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t c = 0; c < p; ++c) {
          w *= profile(kernel, (z[idx[a]][c] - z_tuple[a * p + c]) / h) / h;
        }
      }
      std::vector<const std::vector<double>*> args;
      for (std::size_t a = 0; a < k; ++a) {
        args.push_back(&x[idx[a]]);
      }
      out.den += w;
      if (w != 0.0) {
        out.num += w * g(args);
      }
      out.count += 1.0;
    }
    std::size_t pos = 0;
    while (pos < k && ++idx[pos] == n) {
      idx[pos] = 0;
      ++pos;
    }
    if (pos == k) {
      break;
    }
  }
  return out;
}

// Least squares through the normal equations.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
{
  return (x.transpose() * x).ldlt().solve(x.transpose() * y);
}

inline double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& b,
                              double lambda)
{
  return (y - x * b).squaredNorm() / static_cast<double>(x.rows()) + lambda * b.lpNorm<1>();
}

// Minimum of the two-coefficient Lasso criterion over a 201 x 201 grid.
inline double grid_minimum(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda, double lo0, double hi0,
                           double lo1, double hi1)
{
  double best = INFINITY;
  Eigen::VectorXd b(2);
  for (int i = 0; i <= 200; ++i) {
    b[0] = lo0 + (hi0 - lo0) * i / 200.0;
    for (int j = 0; j <= 200; ++j) {
      b[1] = lo1 + (hi1 - lo1) * j / 200.0;
      best = std::min(best, lasso_objective(x, y, b, lambda));
    }
  }
  return best;
}

inline double phi_cdf(double x)
{
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// E[Phi(z2 - X)^2] for X ~ N(z1, 1), composite Simpson on
// [z1 - 12, z1 + 12].
inline double rank_second_moment(double z1, double z2)
{
  const int m = 20000;
  const double a = z1 - 12.0;
  const double w = 24.0 / m;
  double s = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double x = a + i * w;
    const double dens = std::exp(-0.5 * (x - z1) * (x - z1)) / std::sqrt(2.0 * M_PI);
    const double f = phi_cdf(z2 - x);
    const double c = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += c * dens * f * f;
  }
  return s * w / 3.0;
}

} // namespace oracle

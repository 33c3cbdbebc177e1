#include "condu/kernels.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace condu {

namespace {

constexpr double kGaussianDefaultTruncation = 6.0;

double univariate_sup(KernelProfile profile, double scale)
{
  switch (profile) {
    case KernelProfile::epanechnikov:
      return 0.75;
    case KernelProfile::uniform:
      return 0.5 / scale;
    case KernelProfile::gaussian:
      return 1.0 / std::sqrt(2.0 * M_PI);
  }
  return 0.0;
}

double univariate_l2(KernelProfile profile, double scale)
{
  switch (profile) {
    case KernelProfile::epanechnikov:
      return 0.6;
    case KernelProfile::uniform:
      return 0.5 / scale;
    case KernelProfile::gaussian:
      return 1.0 / (2.0 * std::sqrt(M_PI));
  }
  return 0.0;
}

} // namespace

SmoothingKernel::SmoothingKernel(KernelProfile profile, std::size_t dim, double scale)
  : profile_(profile)
  , dim_(dim)
  , scale_(scale)
{
  if (dim == 0) {
    throw std::invalid_argument("kernel dimension must be positive");
  }
  if (scale_ <= 0.0) {
    scale_ = profile == KernelProfile::gaussian ? kGaussianDefaultTruncation : 1.0;
  }
  const auto p = static_cast<double>(dim_);
  sup_bound_ = std::pow(univariate_sup(profile_, scale_), p);
  l2_norm_sq_ = std::pow(univariate_l2(profile_, scale_), p);
  switch (profile_) {
    case KernelProfile::epanechnikov:
      support_radius_ = 1.0;
      break;
    case KernelProfile::uniform:
      support_radius_ = scale_;
      break;
    case KernelProfile::gaussian:
      support_radius_ = std::numeric_limits<double>::infinity();
      break;
  }
}

double SmoothingKernel::profile_value(double x) const
{
  switch (profile_) {
    case KernelProfile::epanechnikov:
      return std::abs(x) <= 1.0 ? 0.75 * (1.0 - x * x) : 0.0;
    case KernelProfile::uniform:
      return std::abs(x) <= scale_ ? 0.5 / scale_ : 0.0;
    case KernelProfile::gaussian:
      return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  }
  return 0.0;
}

double SmoothingKernel::operator()(std::span<const double> u) const
{
  if (u.size() != dim_) {
    throw std::invalid_argument("kernel argument has dimension " + std::to_string(u.size()) +
                                ", expected " + std::to_string(dim_));
  }
  double value = 1.0;
  for (double x : u) {
    value *= profile_value(x);
    if (value == 0.0) {
      break;
    }
  }
  return value;
}

double SmoothingKernel::scaled(double h, std::span<const double> u) const
{
  if (!(h > 0.0)) {
    throw std::invalid_argument("bandwidth must be positive");
  }
  if (u.size() != dim_) {
    throw std::invalid_argument("kernel argument has dimension " + std::to_string(u.size()) +
                                ", expected " + std::to_string(dim_));
  }
  double value = 1.0;
  for (double x : u) {
    value *= profile_value(x / h);
    if (value == 0.0) {
      return 0.0;
    }
  }
  return value / std::pow(h, static_cast<double>(dim_));
}

double SmoothingKernel::quadrature_radius() const
{
  return profile_ == KernelProfile::gaussian ? scale_ : support_radius_;
}

std::string SmoothingKernel::name() const
{
  switch (profile_) {
    case KernelProfile::epanechnikov:
      return "epanechnikov";
    case KernelProfile::uniform:
      return "uniform";
    case KernelProfile::gaussian:
      return "gaussian";
  }
  return "unknown";
}

SmoothingKernel make_kernel(const std::string& name, std::size_t dim, double scale)
{
  if (name == "epanechnikov") {
    return SmoothingKernel(KernelProfile::epanechnikov, dim, scale);
  }
  if (name == "uniform") {
    return SmoothingKernel(KernelProfile::uniform, dim, scale);
  }
  if (name == "gaussian") {
    return SmoothingKernel(KernelProfile::gaussian, dim, scale);
  }
  throw std::invalid_argument("unknown kernel '" + name + "'");
}

double kernel_eval(const SmoothingKernel& kernel, std::span<const double> u)
{
  return kernel(u);
}

double scaled_kernel_eval(const SmoothingKernel& kernel, double h, std::span<const double> u)
{
  return kernel.scaled(h, u);
}

namespace {

// All exponent vectors of length dim with total degree `degree`.
void multi_indices(std::size_t dim, std::size_t degree, std::vector<std::vector<std::size_t>>& out)
{
  std::vector<std::size_t> current(dim, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t axis, std::size_t left) {
    if (axis + 1 == dim) {
      current[axis] = left;
      out.push_back(current);
      return;
    }
    for (std::size_t e = left + 1; e-- > 0;) {
      current[axis] = e;
      rec(axis + 1, left - e);
    }
  };
  rec(0, degree);
}

} // namespace

MomentReport verify_kernel_order(const SmoothingKernel& kernel, const QuadratureSpec& spec)
{
  const std::size_t p = kernel.dim();
  MomentReport report;
  report.radius = spec.radius > 0.0 ? spec.radius : kernel.quadrature_radius();
  report.points_per_axis = spec.points_per_axis;
  if (report.points_per_axis == 0) {
    report.points_per_axis = p == 1 ? 10000 : (p == 2 ? 2000 : 40);
  }
  const std::size_t m = report.points_per_axis;
  const double width = 2.0 * report.radius / static_cast<double>(m);
  report.low_confidence = m < 100;

  std::vector<std::vector<std::size_t>> exponents;
  for (int degree = 1; degree < kernel.order(); ++degree) {
    multi_indices(p, static_cast<std::size_t>(degree), exponents);
  }
  std::vector<double> sums(exponents.size(), 0.0);

  // Tensor grid: the kernel is a product, so precompute the 1-d profile.
  std::vector<double> nodes(m);
  std::vector<double> weights(m);
  for (std::size_t i = 0; i < m; ++i) {
    nodes[i] = -report.radius + (static_cast<double>(i) + 0.5) * width;
    weights[i] = kernel.profile_value(nodes[i]);
  }

  std::size_t total = 1;
  for (std::size_t a = 0; a < p; ++a) {
    if (total > std::numeric_limits<std::size_t>::max() / m) {
      throw std::invalid_argument("quadrature grid too large");
    }
    total *= m;
  }

  const double cell = std::pow(width, static_cast<double>(p));
  std::vector<std::size_t> idx(p, 0);
  double integral = 0.0;
  double l2 = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    double k = 1.0;
    for (std::size_t a = 0; a < p; ++a) {
      k *= weights[idx[a]];
    }
    if (k != 0.0) {
      integral += k;
      l2 += k * k;
      for (std::size_t e = 0; e < exponents.size(); ++e) {
        double mono = 1.0;
        for (std::size_t a = 0; a < p; ++a) {
          for (std::size_t r = 0; r < exponents[e][a]; ++r) {
            mono *= nodes[idx[a]];
          }
        }
        sums[e] += k * mono;
      }
    }
    for (std::size_t a = 0; a < p; ++a) {
      if (++idx[a] < m) {
        break;
      }
      idx[a] = 0;
    }
  }

  report.integral = integral * cell;
  report.l2_norm_sq = l2 * cell;
  bool ok = std::abs(report.integral - 1.0) <= spec.tolerance;
  for (std::size_t e = 0; e < exponents.size(); ++e) {
    const double value = sums[e] * cell;
    report.moments.push_back({exponents[e], value});
    ok = ok && std::abs(value) <= spec.tolerance;
  }
  report.pass = ok && !report.low_confidence;
  return report;
}

} // namespace condu

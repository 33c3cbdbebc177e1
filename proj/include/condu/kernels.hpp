#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace condu {

enum class KernelProfile
{
  epanechnikov,
  uniform,
  gaussian
};

//! Tensor-product smoothing kernel K(u) = prod_i k(u_i) on R^p, built from a
//! symmetric univariate profile k of order 2. Immutable after construction.
class SmoothingKernel
{
public:
  //! `scale` is the half-width of the uniform profile and the moment-check
  //! truncation radius of the Gaussian profile; it is ignored for
  //! Epanechnikov.
  SmoothingKernel(KernelProfile profile, std::size_t dim, double scale = 0.0);

  //! K(u); throws std::invalid_argument when u.size() != dim().
  double operator()(std::span<const double> u) const;

  //! K_h(u) = h^{-p} K(u / h).
  double scaled(double h, std::span<const double> u) const;

  //! Univariate profile value k(x).
  double profile_value(double x) const;

  KernelProfile profile() const { return profile_; }
  std::size_t dim() const { return dim_; }
  int order() const { return 2; }
  //! sup K, i.e. C_K.
  double sup_bound() const { return sup_bound_; }
  //! ||K||_2^2.
  double l2_norm_sq() const { return l2_norm_sq_; }
  //! Support radius in the sup-norm; +inf for the Gaussian profile.
  double support_radius() const { return support_radius_; }
  bool compact() const { return support_radius_ < std::numeric_limits<double>::infinity(); }
  //! Radius used to truncate the domain in moment checks.
  double quadrature_radius() const;

  std::string name() const;

private:
  KernelProfile profile_;
  std::size_t dim_;
  double scale_;
  double sup_bound_;
  double l2_norm_sq_;
  double support_radius_;
};

//! Builds a kernel from its CLI/config name: "epanechnikov", "uniform" or
//! "gaussian". A nonpositive `scale` selects the default (uniform half-width 1,
//! Gaussian truncation 6).
SmoothingKernel make_kernel(const std::string& name, std::size_t dim, double scale = 0.0);

double kernel_eval(const SmoothingKernel& kernel, std::span<const double> u);
double scaled_kernel_eval(const SmoothingKernel& kernel, double h, std::span<const double> u);

struct QuadratureSpec
{
  //! Midpoint-rule cells per axis; 0 picks 10^4 for p = 1, 2000 for p = 2
  //! and 40 otherwise.
  std::size_t points_per_axis = 0;
  //! Truncation radius; 0 uses the kernel's quadrature radius.
  double radius = 0.0;
  double tolerance = 1e-6;
};

struct MixedMoment
{
  std::vector<std::size_t> exponents; // one exponent per axis
  double value;
};

struct MomentReport
{
  double integral = 0.0;
  std::vector<MixedMoment> moments; // total degree 1 .. order - 1
  double l2_norm_sq = 0.0;
  std::size_t points_per_axis = 0;
  double radius = 0.0;
  //! Grid too coarse to resolve the support (fewer than 100 cells across it).
  bool low_confidence = false;
  bool pass = false;
};

MomentReport verify_kernel_order(const SmoothingKernel& kernel, const QuadratureSpec& spec = {});

} // namespace condu

#pragma once

#include "condu/functionals.hpp"
#include "condu/kernels.hpp"
#include "condu/tuples.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace condu {

//! i.i.d. observations (X_i, Z_i), X_i in R^{p_X}, Z_i in R^p.
class ObservationSample
{
public:
  //! Throws std::invalid_argument on unequal row counts or non-finite entries.
  ObservationSample(PointSet xs, PointSet zs);

  std::size_t size() const { return xs_.size(); }
  std::size_t x_dim() const { return xs_.dim(); }
  std::size_t z_dim() const { return zs_.dim(); }
  Point x(std::size_t i) const { return xs_[i]; }
  Point z(std::size_t i) const { return zs_[i]; }
  const PointSet& xs() const { return xs_; }
  const PointSet& zs() const { return zs_; }

private:
  PointSet xs_;
  PointSet zs_;
};

//! Raised when a caller requires the value of an estimate whose
//! normalization N_k is zero.
class EstimatorUndefined : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct CondEstimate
{
  double value = std::numeric_limits<double>::quiet_NaN();
  double nk = 0.0;
  bool valid = false;
  std::vector<double> z_tuple;

  //! The estimate, or EstimatorUndefined when !valid.
  double require_value() const;
};

//! N_k(z_1..z_k) = (n-k)!/n! * sum over all injective sigma of
//! prod_i K_h(Z_{sigma(i)} - z_i). `z_tuple` is flat (k * p coordinates).
double compute_nk(const ObservationSample& sample, const SmoothingKernel& kernel, double h, std::size_t k,
                  std::span<const double> z_tuple);

//! Kernel-weighted conditional U-statistic at one query tuple.
CondEstimate estimate_theta(const ObservationSample& sample, const UStatFunctional& functional,
                            const SmoothingKernel& kernel, double h, std::span<const double> z_tuple);

//! Elementwise estimate_theta over queries; `workers` = 0 uses all cores.
//! Each query is reduced sequentially, so results do not depend on workers.
std::vector<CondEstimate> estimate_theta_batch(const ObservationSample& sample, const UStatFunctional& functional,
                                               const SmoothingKernel& kernel, double h,
                                               const std::vector<std::vector<double>>& queries,
                                               std::size_t workers = 1);

//! Lambda^{-1}(psi(z)^T beta).
double predict_theta(const BasisModel& basis, std::span<const double> beta, std::span<const double> z_tuple);

} // namespace condu

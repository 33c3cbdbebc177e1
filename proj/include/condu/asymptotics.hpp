#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "condu/functionals.hpp"
#include "condu/kernels.hpp"
#include "condu/rng.hpp"
#include "condu/tuples.hpp"

namespace condu {

//! Joint law of (X, Z): a sampler for Z, a conditional sampler for X | Z and
//! optionally the density of Z and an analytic theta for a named functional.
struct GenerativeModel
{
  std::string name;
  std::size_t z_dim = 1;
  std::size_t x_dim = 1;
  std::function<void(Rng&, std::span<double>)> sample_z;
  std::function<void(Rng&, std::span<const double>, std::span<double>)> sample_x_given_z;
  std::function<double(std::span<const double>)> f_z;
  //! Analytic theta(z_1..z_k) for `oracle_functional` (flat k*p input).
  std::function<double(std::span<const double>)> theta_oracle;
  std::string oracle_functional;

  bool has_oracle_for(const UStatFunctional& functional) const
  {
    return theta_oracle && functional.name() == oracle_functional;
  }
};

//! Z ~ N(0,1) truncated to [-1, 1], X | Z = z ~ N(z, 1), with the
//! rank-probability oracle Phi((z2 - z1) / sqrt 2).
GenerativeModel truncated_normal_model();

//! Inverse-CDF draw from N(0,1) restricted to [lo, hi].
double sample_truncated_normal(Rng& rng, double lo, double hi);
//! Rejection draw from the same law (cross-check only).
double sample_truncated_normal_rejection(Rng& rng, double lo, double hi);

enum class MomentKind
{
  theta,
  theta_jl,
  tilde_theta_jl,
  theta_jlm
};

struct MomentSpec
{
  MomentKind kind = MomentKind::theta;
  // zero-based slots
  std::size_t j = 0;
  std::size_t l = 0;
  std::size_t m = 0;
  //! Replace the shared X by independent copies drawn at the same z.
  bool decouple = false;
};

struct MCEstimate
{
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
};

//! z_args holds k, k, 2k or 3k points of dimension p, flattened. Throws
//! std::invalid_argument when reps < 2 or the arity does not match.
MCEstimate mc_conditional_moment(const GenerativeModel& model, const UStatFunctional& functional,
                                 const MomentSpec& spec, std::span<const double> z_args, std::size_t reps,
                                 std::uint64_t seed, std::size_t workers = 1);

enum class OracleMode
{
  analytic, // theta from the model oracle, theta_{j,l} by Monte Carlo
  mc        // everything by Monte Carlo
};

struct OracleOptions
{
  OracleMode mode = OracleMode::analytic;
  std::size_t reps = 100000;
  std::uint64_t seed = 0;
  //! 0 means exact coordinate equality in the z_j = z_l indicator.
  double z_equal_tol = 0.0;
  std::size_t workers = 1;
};

struct RhoReport
{
  double rho_sq = 0.0;
  double std_error = 0.0;
  double theta = 0.0;
  std::uint64_t seed = 0;
  //! (j, l, theta_{j,l}) for every contributing pair.
  struct Term
  {
    std::size_t j;
    std::size_t l;
    MCEstimate moment;
  };
  std::vector<Term> terms;
};

//! Throws std::domain_error if f_Z(z_j) = 0 for a contributing j.
RhoReport rho_squared(const GenerativeModel& model, const UStatFunctional& functional,
                      const SmoothingKernel& kernel, std::span<const double> z_tuple, const OracleOptions& options);

struct AsymptoticCovariance
{
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd std_error;
  //! theta per query (analytic or MC).
  std::vector<double> theta;
  std::vector<std::vector<double>> queries;
  std::uint64_t seed = 0;
};

//! Limiting covariance of sqrt(n h^p)(theta_hat - theta) over N queries.
AsymptoticCovariance h_matrix(const GenerativeModel& model, const UStatFunctional& functional,
                              const SmoothingKernel& kernel, const std::vector<std::vector<double>>& queries,
                              const OracleOptions& options);

//! Same over the tuples of `tuples` on `design`, with Lambda' factors.
AsymptoticCovariance tilde_h_matrix(const GenerativeModel& model, const UStatFunctional& functional,
                                    const SmoothingKernel& kernel, const Link& link, const PointSet& design,
                                    const TupleSet& tuples, const OracleOptions& options);

//! (Psi^T Psi)^{-1} Psi^T H Psi (Psi^T Psi)^{-1}: covariance of the minimizer
//! of the unpenalized limiting criterion.
Eigen::MatrixXd beta_limit_covariance(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& h_tilde);

} // namespace condu

#pragma once

#include "condu/estimator.hpp"
#include "condu/functionals.hpp"
#include "condu/tuples.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace condu {

//! Rows psi(z'_{sigma_i(1)}, ..., z'_{sigma_i(k)}) for sigma_i in the tuple set.
struct DesignMatrix
{
  Eigen::MatrixXd rows;
  TupleSet tuples;

  //! |v|_2 / sqrt(|tuples|).
  double scaled_norm(const Eigen::VectorXd& v) const;
};

DesignMatrix build_design(const BasisModel& basis, const PointSet& z_points, const TupleSet& tuples);

struct Response
{
  Eigen::VectorXd y;             // Lambda(theta_hat) on kept rows
  std::vector<std::size_t> kept; // design rows used, increasing
  std::vector<std::size_t> dropped;
  std::size_t clamped = 0; // link arguments clamped into the link domain
  //! More than 10% of the rows were dropped.
  bool degraded = false;

  //! Design restricted to the kept rows.
  Eigen::MatrixXd restrict(const Eigen::MatrixXd& design) const;
};

//! Throws std::invalid_argument when every estimate is invalid.
Response build_response(const std::vector<CondEstimate>& estimates, const Link& link);

struct LassoOptions
{
  double change_tol = 1e-10;
  double kkt_tol = 1e-8;
  std::size_t max_sweeps = 100000;
  //! Penalize column-standardized coefficients; the returned beta is on the
  //! original scale and solves the equivalent weighted problem.
  bool standardize = false;
  //! Record the objective after every sweep.
  bool record_objective = false;
};

struct LassoSolution
{
  Eigen::VectorXd beta;
  double lambda = 0.0;
  //! Per-coordinate penalty multipliers; +inf forces the coordinate to zero.
  Eigen::VectorXd penalty_weights;
  double objective = 0.0;
  std::vector<std::size_t> active_set;
  std::vector<std::size_t> forced_zero;
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> objective_history;
};

//! Criterion (1/N) |y - X beta|_2^2 + lambda * sum_j w_j |beta_j|.
double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                       double lambda, const Eigen::VectorXd& weights);

//! Largest violation of the subgradient optimality conditions.
double lasso_kkt_residual(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                          double lambda, const Eigen::VectorXd& weights);

//! Cyclic coordinate descent with soft-thresholding.
LassoSolution fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                        const LassoOptions& options = {});

LassoSolution fit_weighted_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                                 const Eigen::VectorXd& weights, const LassoOptions& options = {});

//! Penalty tilde_lambda / |pilot_j|^delta per coordinate; zero pilots force
//! zero coefficients. Throws when every pilot coefficient is zero.
LassoSolution fit_adaptive_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tilde_lambda,
                                 double delta, const Eigen::VectorXd& pilot_beta, const LassoOptions& options = {});

enum class REStrategy
{
  exhaustive,
  sampled
};

enum class RECertificate
{
  exact,      // lower and upper bounds coincide
  upper_bound // value attained by a feasible direction
};

struct REReport
{
  double kappa = 0.0;       // best (smallest) value found
  double lower_bound = 0.0; // sqrt of the smallest Gram eigenvalue
  RECertificate certificate = RECertificate::upper_bound;
  Eigen::VectorXd direction;
  std::vector<std::size_t> support;
};

struct REOptions
{
  REStrategy strategy = REStrategy::exhaustive;
  std::uint64_t seed = 0;
  std::size_t samples = 20000;  // sampled strategy: random directions
  std::size_t restarts = 8;     // exhaustive strategy: random starts per support
  std::size_t descent_steps = 300;
};

//! Estimate of kappa(s, c0) = min ||X delta|| / |delta|_2 over the cone
//! |delta_{J^c}|_1 <= c0 |delta_J|_1, |J| <= s. Every reported value is
//! attained by a feasible direction, hence an upper bound on kappa.
REReport restricted_eigenvalue(const DesignMatrix& design, std::size_t s, double c0, const REOptions& options = {});
REReport restricted_eigenvalue(const Eigen::MatrixXd& rows, std::size_t s, double c0, const REOptions& options = {});

std::string to_string(RECertificate c);

struct PenaltySpec
{
  double lambda = 0.0;
  //! Adaptive fit: pilot is a plain fit at pilot_lambda, then tilde_lambda / |pilot|^delta.
  bool adaptive = false;
  double tilde_lambda = 0.0;
  double delta = 1.0;
  double pilot_lambda = 0.0;
};

struct TwoStepResult
{
  std::vector<CondEstimate> estimates;
  Response response;
  LassoSolution solution;
  std::optional<LassoSolution> pilot;
  DesignMatrix design;
};

//! estimate_theta_batch -> build_response -> (adaptive) Lasso.
TwoStepResult two_step_fit(const ObservationSample& sample, const UStatFunctional& functional,
                           const SmoothingKernel& kernel, double h, const BasisModel& basis, const PointSet& z_points,
                           const TupleSet& tuples, const PenaltySpec& penalty, const LassoOptions& options = {},
                           std::size_t workers = 1);

//! Predictions Lambda^{-1}(psi(z)^T beta) at flat query tuples.
std::vector<double> predict_many(const BasisModel& basis, const Eigen::VectorXd& beta,
                                 const std::vector<std::vector<double>>& queries);

} // namespace condu

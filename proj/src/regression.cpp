#include "condu/regression.hpp"

#include "condu/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace condu {

double DesignMatrix::scaled_norm(const Eigen::VectorXd& v) const
{
  if (static_cast<std::size_t>(v.size()) != tuples.size()) {
    throw std::invalid_argument("scaled_norm: vector length does not match the tuple count");
  }
  return v.norm() / std::sqrt(static_cast<double>(tuples.size()));
}

DesignMatrix build_design(const BasisModel& basis, const PointSet& z_points, const TupleSet& tuples)
{
  if (tuples.k() != basis.k()) {
    throw std::invalid_argument("build_design: tuple arity does not match the basis");
  }
  if (z_points.dim() != basis.p()) {
    throw std::invalid_argument("build_design: design point dimension does not match the basis");
  }
  const auto rows = static_cast<Eigen::Index>(tuples.size());
  const auto cols = static_cast<Eigen::Index>(basis.size());
  DesignMatrix design{Eigen::MatrixXd(rows, cols), tuples};
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto psi = basis.eval(tuples.gather(z_points, static_cast<std::size_t>(i)));
    for (Eigen::Index j = 0; j < cols; ++j) {
      design.rows(i, j) = psi[static_cast<std::size_t>(j)];
    }
  }
  return design;
}

Eigen::MatrixXd Response::restrict(const Eigen::MatrixXd& design) const
{
  Eigen::MatrixXd out(static_cast<Eigen::Index>(kept.size()), design.cols());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = design.row(static_cast<Eigen::Index>(kept[i]));
  }
  return out;
}

Response build_response(const std::vector<CondEstimate>& estimates, const Link& link)
{
  Response response;
  std::vector<double> values;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!estimates[i].valid) {
      response.dropped.push_back(i);
      continue;
    }
    const auto v = link.apply_checked(estimates[i].value);
    response.clamped += v.clamped ? 1 : 0;
    response.kept.push_back(i);
    values.push_back(v.value);
  }
  if (values.empty()) {
    throw std::invalid_argument("build_response: every estimate is invalid");
  }
  response.y = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  response.degraded = 10 * response.dropped.size() > estimates.size();
  return response;
}

// ---------------------------------------------------------------------------

double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta, double lambda,
                       const Eigen::VectorXd& weights)
{
  const double n = static_cast<double>(x.rows());
  double penalty = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta(j) != 0.0) {
      penalty += weights(j) * std::abs(beta(j));
    }
  }
  return (y - x * beta).squaredNorm() / n + lambda * penalty;
}

double lasso_kkt_residual(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                          double lambda, const Eigen::VectorXd& weights)
{
  const double n = static_cast<double>(x.rows());
  const Eigen::VectorXd grad = (2.0 / n) * (x.transpose() * (y - x * beta));
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (std::isinf(weights(j))) {
      continue; // coordinate pinned at zero
    }
    const double pen = lambda * weights(j);
    double violation = 0.0;
    if (beta(j) == 0.0) {
      violation = std::max(0.0, std::abs(grad(j)) - pen);
    } else {
      violation = std::abs(grad(j) - (beta(j) > 0.0 ? pen : -pen));
    }
    worst = std::max(worst, violation);
  }
  return worst;
}

namespace {

double soft_threshold(double z, double t)
{
  if (z > t) {
    return z - t;
  }
  if (z < -t) {
    return z + t;
  }
  return 0.0;
}

void check_inputs(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda)
{
  if (x.rows() != y.size()) {
    throw std::invalid_argument("lasso: design has " + std::to_string(x.rows()) + " rows, response has " +
                                std::to_string(y.size()));
  }
  if (x.rows() == 0 || x.cols() == 0) {
    throw std::invalid_argument("lasso: empty design");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lasso: lambda must be finite and nonnegative");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("lasso: non-finite design or response");
  }
}

} // namespace

LassoSolution fit_weighted_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                                 const Eigen::VectorXd& weights_in, const LassoOptions& options)
{
  check_inputs(x, y, lambda);
  const Eigen::Index r = x.cols();
  if (weights_in.size() != r) {
    throw std::invalid_argument("lasso: penalty weight vector has the wrong length");
  }
  for (Eigen::Index j = 0; j < r; ++j) {
    if (!(weights_in(j) >= 0.0)) {
      throw std::invalid_argument("lasso: penalty weights must be nonnegative");
    }
  }
  const double n = static_cast<double>(x.rows());
  const Eigen::VectorXd col_sq = x.colwise().squaredNorm().transpose() / n;

  Eigen::VectorXd weights = weights_in;
  if (options.standardize) {
    for (Eigen::Index j = 0; j < r; ++j) {
      weights(j) *= std::sqrt(col_sq(j));
    }
  }

  LassoSolution sol;
  sol.lambda = lambda;
  sol.penalty_weights = weights;
  sol.beta = Eigen::VectorXd::Zero(r);
  Eigen::VectorXd residual = y;

  for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < r; ++j) {
      const double old = sol.beta(j);
      double updated = 0.0;
      if (!std::isinf(weights(j)) && col_sq(j) > 0.0) {
        const double z = x.col(j).dot(residual) / n + col_sq(j) * old;
        updated = soft_threshold(z, 0.5 * lambda * weights(j)) / col_sq(j);
      }
      if (updated != old) {
        residual -= (updated - old) * x.col(j);
        sol.beta(j) = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    residual = y - x * sol.beta;
    sol.iterations = sweep + 1;
    if (options.record_objective) {
      sol.objective_history.push_back(lasso_objective(x, y, sol.beta, lambda, weights));
    }
    sol.kkt_residual = lasso_kkt_residual(x, y, sol.beta, lambda, weights);
    if (sol.kkt_residual <= options.kkt_tol) {
      sol.converged = true;
      break;
    }
    if (max_change == 0.0 || (max_change < options.change_tol && sol.kkt_residual <= 100.0 * options.kkt_tol)) {
      break;
    }
  }

  sol.objective = lasso_objective(x, y, sol.beta, lambda, weights);
  for (Eigen::Index j = 0; j < r; ++j) {
    if (sol.beta(j) != 0.0) {
      sol.active_set.push_back(static_cast<std::size_t>(j));
    }
    if (std::isinf(weights(j))) {
      sol.forced_zero.push_back(static_cast<std::size_t>(j));
    }
  }
  return sol;
}

LassoSolution fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda, const LassoOptions& options)
{
  return fit_weighted_lasso(x, y, lambda, Eigen::VectorXd::Ones(x.cols()), options);
}

LassoSolution fit_adaptive_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tilde_lambda, double delta,
                                 const Eigen::VectorXd& pilot_beta, const LassoOptions& options)
{
  if (!(tilde_lambda > 0.0) || !(delta > 0.0)) {
    throw std::invalid_argument("adaptive lasso: tilde_lambda and delta must be positive");
  }
  if (pilot_beta.size() != x.cols() || !pilot_beta.allFinite()) {
    throw std::invalid_argument("adaptive lasso: pilot must be finite with one entry per column");
  }
  if ((pilot_beta.array() == 0.0).all()) {
    throw std::invalid_argument("adaptive lasso: every pilot coefficient is zero");
  }
  Eigen::VectorXd weights(pilot_beta.size());
  for (Eigen::Index j = 0; j < pilot_beta.size(); ++j) {
    weights(j) = pilot_beta(j) == 0.0 ? std::numeric_limits<double>::infinity()
                                      : 1.0 / std::pow(std::abs(pilot_beta(j)), delta);
  }
  return fit_weighted_lasso(x, y, tilde_lambda, weights, options);
}

// ---------------------------------------------------------------------------

std::string to_string(RECertificate c)
{
  return c == RECertificate::exact ? "exact" : "upper_bound";
}

namespace {

// Pulls delta back into the cone |delta_{J^c}|_1 <= c0 |delta_J|_1 by
// shrinking the off-support part, then normalizes. Returns false when the
// support part vanishes (no feasible rescaling exists).
bool retract(Eigen::VectorXd& delta, const std::vector<bool>& in_support, double c0)
{
  double on = 0.0;
  double off = 0.0;
  for (Eigen::Index j = 0; j < delta.size(); ++j) {
    (in_support[static_cast<std::size_t>(j)] ? on : off) += std::abs(delta(j));
  }
  if (on == 0.0) {
    return false;
  }
  if (off > c0 * on) {
    const double shrink = c0 * on / off;
    for (Eigen::Index j = 0; j < delta.size(); ++j) {
      if (!in_support[static_cast<std::size_t>(j)]) {
        delta(j) *= shrink;
      }
    }
  }
  delta.normalize();
  return true;
}

double quad(const Eigen::MatrixXd& gram, const Eigen::VectorXd& d)
{
  return std::max(0.0, d.dot(gram * d));
}

void next_subset(std::vector<std::size_t>& subset, std::size_t r, bool& done)
{
  const std::size_t s = subset.size();
  std::size_t pos = s;
  while (pos > 0 && subset[pos - 1] == r - s + pos - 1) {
    --pos;
  }
  if (pos == 0) {
    done = true;
    return;
  }
  ++subset[pos - 1];
  for (std::size_t j = pos; j < s; ++j) {
    subset[j] = subset[j - 1] + 1;
  }
}

} // namespace

REReport restricted_eigenvalue(const Eigen::MatrixXd& rows, std::size_t s, double c0, const REOptions& options)
{
  const auto r = static_cast<std::size_t>(rows.cols());
  if (s == 0 || s > r) {
    throw std::invalid_argument("restricted_eigenvalue: s must lie in [1, r]");
  }
  if (!(c0 > 0.0)) {
    throw std::invalid_argument("restricted_eigenvalue: c0 must be positive");
  }
  if (options.strategy == REStrategy::exhaustive && r > 12) {
    throw std::invalid_argument("restricted_eigenvalue: exhaustive strategy supports r <= 12");
  }
  const double n = static_cast<double>(rows.rows());
  const Eigen::MatrixXd gram = rows.transpose() * rows / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double lambda_min = std::max(0.0, eig.eigenvalues()(0));
  const double lambda_max = std::max(eig.eigenvalues()(static_cast<Eigen::Index>(r) - 1), 1e-300);

  REReport report;
  report.lower_bound = std::sqrt(lambda_min);
  double best = std::numeric_limits<double>::infinity();
  Rng rng(options.seed);
  std::normal_distribution<double> normal;

  auto consider = [&](const Eigen::VectorXd& d, const std::vector<std::size_t>& support) {
    const double v = quad(gram, d);
    if (v < best) {
      best = v;
      report.direction = d;
      report.support = support;
    }
  };

  auto random_direction = [&]() {
    Eigen::VectorXd d(static_cast<Eigen::Index>(r));
    for (std::size_t j = 0; j < r; ++j) {
      d(static_cast<Eigen::Index>(j)) = normal(rng);
    }
    return d;
  };

  if (options.strategy == REStrategy::sampled) {
    std::vector<std::size_t> perm(r);
    for (std::size_t i = 0; i < options.samples; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        perm[j] = j;
      }
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<std::size_t> support(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(s));
      std::sort(support.begin(), support.end());
      std::vector<bool> in_support(r, false);
      for (auto j : support) {
        in_support[j] = true;
      }
      Eigen::VectorXd d = random_direction();
      if (retract(d, in_support, c0)) {
        consider(d, support);
      }
    }
  } else {
    std::vector<std::size_t> support(s);
    for (std::size_t j = 0; j < s; ++j) {
      support[j] = j;
    }
    bool done = false;
    while (!done) {
      std::vector<bool> in_support(r, false);
      for (auto j : support) {
        in_support[j] = true;
      }
      std::vector<Eigen::VectorXd> starts;
      for (std::size_t j = 0; j < r; ++j) {
        starts.push_back(eig.eigenvectors().col(static_cast<Eigen::Index>(j)));
      }
      for (auto j : support) {
        starts.push_back(Eigen::VectorXd::Unit(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)));
      }
      for (std::size_t i = 0; i < options.restarts; ++i) {
        starts.push_back(random_direction());
      }
      for (auto d : starts) {
        if (!retract(d, in_support, c0)) {
          continue;
        }
        double value = quad(gram, d);
        double step = 1.0 / lambda_max;
        // Projected gradient on the Rayleigh quotient; every iterate is feasible.
        for (std::size_t it = 0; it < options.descent_steps && step > 1e-12 / lambda_max; ++it) {
          Eigen::VectorXd grad = gram * d - value * d;
          Eigen::VectorXd trial = d - step * grad;
          if (!retract(trial, in_support, c0)) {
            step *= 0.5;
            continue;
          }
          const double trial_value = quad(gram, trial);
          if (trial_value < value) {
            d = trial;
            value = trial_value;
            step *= 1.5;
          } else {
            step *= 0.5;
          }
        }
        consider(d, support);
      }
      next_subset(support, r, done);
    }
  }

  report.kappa = std::sqrt(best);
  if (report.kappa - report.lower_bound <= 1e-9 * std::max(1.0, report.kappa)) {
    report.certificate = RECertificate::exact;
  }
  return report;
}

REReport restricted_eigenvalue(const DesignMatrix& design, std::size_t s, double c0, const REOptions& options)
{
  return restricted_eigenvalue(design.rows, s, c0, options);
}

// ---------------------------------------------------------------------------

TwoStepResult two_step_fit(const ObservationSample& sample, const UStatFunctional& functional,
                           const SmoothingKernel& kernel, double h, const BasisModel& basis, const PointSet& z_points,
                           const TupleSet& tuples, const PenaltySpec& penalty, const LassoOptions& options,
                           std::size_t workers)
{
  if (functional.arity() != basis.k()) {
    throw std::invalid_argument("two_step_fit: functional arity does not match the basis");
  }
  DesignMatrix design = build_design(basis, z_points, tuples);
  std::vector<std::vector<double>> queries;
  queries.reserve(tuples.size());
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    queries.push_back(tuples.gather(z_points, i));
  }
  auto estimates = estimate_theta_batch(sample, functional, kernel, h, queries, workers);
  Response response = build_response(estimates, basis.link());
  const Eigen::MatrixXd x = response.restrict(design.rows);

  std::optional<LassoSolution> pilot;
  LassoSolution solution;
  if (penalty.adaptive) {
    pilot = fit_lasso(x, response.y, penalty.pilot_lambda, options);
    solution = fit_adaptive_lasso(x, response.y, penalty.tilde_lambda, penalty.delta, pilot->beta, options);
  } else {
    solution = fit_lasso(x, response.y, penalty.lambda, options);
  }
  return TwoStepResult{std::move(estimates), std::move(response), std::move(solution), std::move(pilot),
                       std::move(design)};
}

std::vector<double> predict_many(const BasisModel& basis, const Eigen::VectorXd& beta,
                                 const std::vector<std::vector<double>>& queries)
{
  std::vector<double> out;
  out.reserve(queries.size());
  const std::span<const double> b(beta.data(), static_cast<std::size_t>(beta.size()));
  for (const auto& q : queries) {
    out.push_back(predict_theta(basis, b, q));
  }
  return out;
}

} // namespace condu

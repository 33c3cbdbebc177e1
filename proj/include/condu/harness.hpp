#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "condu/asymptotics.hpp"
#include "condu/bounds.hpp"
#include "condu/estimator.hpp"
#include "condu/functionals.hpp"
#include "condu/tuples.hpp"

namespace condu {

//! n draws of (X, Z) from `model`; deterministic under `seed`.
ObservationSample generate_sample(const GenerativeModel& model, std::size_t n, std::uint64_t seed);

//! h = c * n^exponent; exponent 0 gives a fixed bandwidth.
struct Bandwidth
{
  double c = 1.0;
  double exponent = -0.2;

  double at(std::size_t n) const;
};

//! lambda = c * (n h^p)^exponent; for an adaptive rule this is tilde-lambda.
struct PenaltyRule
{
  std::string name;
  bool adaptive = false;
  double c = 1.0;
  double exponent = -0.5;
  double delta = 1.0;
  double pilot_lambda = 0.0;

  double lambda(std::size_t n, double h, std::size_t p) const;
};

struct Thresholds
{
  double min_existence_frequency = 0.99;
  double dominance_se = 3.0;
  double sd_tolerance = 0.15;
  double cov_tolerance = 0.20;
  double trend_z = 2.0;
  double sign_test_alpha = 0.05;
};

struct ExperimentConfig
{
  //! existence | concentration | normality | beta_normality | two_step
  std::string experiment;
  GenerativeModel model = truncated_normal_model();
  std::string functional = "rank_prob";
  std::string kernel = "epanechnikov";
  Bandwidth bandwidth;
  std::vector<std::size_t> n_values;
  //! Flat k * p query tuples (existence, concentration, normality).
  std::vector<std::vector<double>> queries;
  // concentration
  std::vector<double> t_grid;
  std::vector<double> t_prime_grid;
  bounds::ModelConstants constants = bounds::worked_example_preset();
  // regression experiments
  std::vector<double> design_points; // flat, p coordinates per point
  TupleMode tuple_mode = TupleMode::full;
  std::size_t tuple_count = 0; // subsample mode only
  std::optional<BasisModel> basis;
  std::vector<double> beta_star;
  std::vector<PenaltyRule> penalties;

  std::size_t oracle_reps = 100000;
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  Thresholds thresholds;
};

struct Check
{
  std::string name;
  bool pass = false;
  //! Non-gating checks are diagnostics and do not fail the report.
  bool gating = true;
  std::string detail;
};

struct ExperimentReport
{
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  std::size_t workers = 1;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> records;
  nlohmann::json aggregates;
  std::vector<Check> checks;

  bool passed() const;
  //! One line per record, "%.17g" fields; independent of the worker count.
  std::string csv() const;
  nlohmann::json to_json() const;
};

//! Seed of rep `rep` at sample size index `n_index`; shared by every
//! experiment so runs at equal (seed, rep) are paired across n.
std::uint64_t rep_seed(std::uint64_t master, std::size_t n_index, std::size_t rep);

ExperimentReport run_existence_experiment(const ExperimentConfig& config);
ExperimentReport run_concentration_experiment(const ExperimentConfig& config);
ExperimentReport run_normality_experiment(const ExperimentConfig& config);
ExperimentReport run_beta_normality_experiment(const ExperimentConfig& config);
ExperimentReport run_two_step_experiment(const ExperimentConfig& config);

//! Dispatch on config.experiment.
ExperimentReport run_experiment(const ExperimentConfig& config);

//! Built-in campaigns: existence, existence_ladder, concentration,
//! normality, beta_normality, two_step. Throws on an unknown name.
ExperimentConfig preset_experiment(const std::string& name);
std::vector<std::string> preset_experiment_names();

//! Basis of the sparse two-step campaign: polynomial of degree 2 in (z1, z2)
//! followed by sin(pi z1), sin(pi z2), with the probit link.
BasisModel sparse_design_basis();

} // namespace condu

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "condu/estimator.hpp"
#include "condu/functionals.hpp"
#include "condu/kernels.hpp"
#include "condu/regression.hpp"
#include "condu/tuples.hpp"

namespace condu::io {

//! Header x1..x{pX},z1..z{p} (any column order); one observation per row.
ObservationSample read_sample_csv(const std::string& path);
void write_sample_csv(const std::string& path, const ObservationSample& sample);

//! Header z1..z{k p}; one flat query tuple per row.
std::vector<std::vector<double>> read_queries_csv(const std::string& path);

struct KappaSpec
{
  std::size_t s = 1;
  double c0 = 3.0;
  REOptions options;
};

//! Parsed JSON configuration shared by estimate, fit and predict.
struct ModelConfig
{
  ModelConfig(SmoothingKernel k, UStatFunctional g)
    : kernel(std::move(k))
    , functional(std::move(g))
  {
  }

  SmoothingKernel kernel;
  UStatFunctional functional;
  double h = 0.0;
  std::optional<BasisModel> basis;
  std::vector<double> design_points; // flat
  std::size_t design_dim = 0;
  TupleMode tuple_mode = TupleMode::full;
  std::size_t tuple_count = 0;
  std::uint64_t tuple_seed = 0;
  PenaltySpec penalty;
  LassoOptions lasso;
  std::optional<KappaSpec> kappa;
  std::size_t workers = 1;
};

//! Throws std::invalid_argument with the offending key on schema errors.
ModelConfig parse_model_config(const nlohmann::json& j);
ModelConfig read_model_config(const std::string& path);

BasisModel parse_basis(const nlohmann::json& j, std::size_t k, std::size_t p);
TupleMode parse_tuple_mode(const std::string& name);

nlohmann::json read_json(const std::string& path);
void write_text(const std::string& path, const std::string& text);

} // namespace condu::io

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "condu/asymptotics.hpp"
#include "condu/bounds.hpp"
#include "condu/estimator.hpp"
#include "condu/harness.hpp"
#include "condu/io.hpp"
#include "condu/regression.hpp"

using nlohmann::json;
using namespace condu;

namespace {

std::string num(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(const std::string& out, const std::string& text)
{
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    io::write_text(out, text);
  }
}

std::string z_header(std::size_t count)
{
  std::string h;
  for (std::size_t a = 0; a < count; ++a) {
    h += (a ? ",z" : "z") + std::to_string(a + 1);
  }
  return h;
}

json bound_json(const bounds::Bound& b)
{
  return {{"raw", b.raw}, {"clamped", b.clamped}, {"vacuous", b.vacuous}};
}

json matrix_json(const Eigen::MatrixXd& m)
{
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(row);
  }
  return rows;
}

int run_estimate(const std::string& data, const std::string& queries, const std::string& config,
                 const std::string& out)
{
  const auto sample = io::read_sample_csv(data);
  const auto cfg = io::read_model_config(config);
  const auto qs = io::read_queries_csv(queries);
  const auto est = estimate_theta_batch(sample, cfg.functional, cfg.kernel, cfg.h, qs, cfg.workers);
  std::string text = z_header(qs.empty() ? 0 : qs.front().size()) + ",theta_hat,nk,valid\n";
  for (const auto& e : est) {
    for (double z : e.z_tuple) {
      text += num(z) + ",";
    }
    text += (e.valid ? num(e.value) : std::string("nan")) + "," + num(e.nk) + "," + (e.valid ? "1" : "0") + "\n";
  }
  emit(out, text);
  return 0;
}

struct FitInputs
{
  io::ModelConfig cfg;
  PointSet design;
  TupleSet tuples;
};

FitInputs fit_inputs(const std::string& config)
{
  auto cfg = io::read_model_config(config);
  if (!cfg.basis) {
    throw std::invalid_argument("config: fit needs a basis");
  }
  if (cfg.design_points.empty()) {
    throw std::invalid_argument("config: fit needs design_points");
  }
  PointSet design(cfg.design_dim, cfg.design_points);
  auto tuples = enumerate_tuples(design.size(), cfg.functional.arity(), cfg.tuple_mode, cfg.tuple_count,
                                 cfg.tuple_seed);
  return {std::move(cfg), std::move(design), std::move(tuples)};
}

int run_fit(const std::string& data, const std::string& config, const std::string& out, const std::string& rows_out)
{
  const auto sample = io::read_sample_csv(data);
  auto in = fit_inputs(config);
  const auto& cfg = in.cfg;
  const auto res = two_step_fit(sample, cfg.functional, cfg.kernel, cfg.h, *cfg.basis, in.design, in.tuples,
                                cfg.penalty, cfg.lasso, cfg.workers);
  const auto& sol = res.solution;
  json j;
  j["beta"] = std::vector<double>(sol.beta.data(), sol.beta.data() + sol.beta.size());
  std::vector<std::string> labels;
  for (const auto& f : cfg.basis->functions()) {
    labels.push_back(f.label);
  }
  j["basis"] = labels;
  j["link"] = cfg.basis->link().name();
  j["lambda"] = sol.lambda;
  j["active_set"] = sol.active_set;
  j["forced_zero"] = sol.forced_zero;
  j["kkt_residual"] = sol.kkt_residual;
  j["iterations"] = sol.iterations;
  j["converged"] = sol.converged;
  j["objective"] = sol.objective;
  j["tuples"] = in.tuples.size();
  j["dropped_rows"] = res.response.dropped;
  j["clamped_rows"] = res.response.clamped;
  j["degraded"] = res.response.degraded;
  if (res.pilot) {
    j["pilot_beta"] = std::vector<double>(res.pilot->beta.data(), res.pilot->beta.data() + res.pilot->beta.size());
  }
  if (cfg.kappa) {
    const auto re = restricted_eigenvalue(res.design, cfg.kappa->s, cfg.kappa->c0, cfg.kappa->options);
    j["kappa_report"] = {{"s", cfg.kappa->s},
                         {"c0", cfg.kappa->c0},
                         {"kappa", re.kappa},
                         {"lower_bound", re.lower_bound},
                         {"certificate", to_string(re.certificate)},
                         {"support", re.support}};
  }
  emit(out, j.dump(2) + "\n");

  if (!rows_out.empty()) {
    const std::size_t width = in.tuples.k() * in.design.dim();
    std::string text = "tuple";
    for (std::size_t s = 0; s < in.tuples.k(); ++s) {
      text += ",index" + std::to_string(s + 1);
    }
    text += "," + z_header(width) + ",theta_hat,nk,valid,response,kept\n";
    std::size_t next_kept = 0;
    for (std::size_t t = 0; t < in.tuples.size(); ++t) {
      text += std::to_string(t);
      for (auto idx : in.tuples[t]) {
        text += "," + std::to_string(idx);
      }
      const auto& e = res.estimates[t];
      for (double z : e.z_tuple) {
        text += "," + num(z);
      }
      const bool kept = next_kept < res.response.kept.size() && res.response.kept[next_kept] == t;
      text += "," + (e.valid ? num(e.value) : std::string("nan")) + "," + num(e.nk) + "," + (e.valid ? "1" : "0");
      text += "," + (kept ? num(res.response.y(static_cast<Eigen::Index>(next_kept))) : std::string("nan"));
      text += kept ? ",1\n" : ",0\n";
      next_kept += kept;
    }
    io::write_text(rows_out, text);
  }
  return 0;
}

int run_predict(const std::string& fit, const std::string& config, const std::string& queries, const std::string& out)
{
  auto cfg = io::read_model_config(config);
  if (!cfg.basis) {
    throw std::invalid_argument("config: predict needs a basis");
  }
  const auto fj = io::read_json(fit);
  const auto beta_v = fj.at("beta").get<std::vector<double>>();
  if (beta_v.size() != cfg.basis->size()) {
    throw std::invalid_argument("fit: beta length differs from the basis size");
  }
  const Eigen::Map<const Eigen::VectorXd> beta(beta_v.data(), static_cast<Eigen::Index>(beta_v.size()));
  const auto qs = io::read_queries_csv(queries);
  const auto pred = predict_many(*cfg.basis, beta, qs);
  std::string text = z_header(qs.empty() ? 0 : qs.front().size()) + ",prediction\n";
  for (std::size_t i = 0; i < qs.size(); ++i) {
    for (double z : qs[i]) {
      text += num(z) + ",";
    }
    text += num(pred[i]) + "\n";
  }
  emit(out, text);
  return 0;
}

struct BoundsArgs
{
  std::string preset = "worked-example";
  double h = 0.2;
  std::size_t n = 651;
  double target = 0.99;
  std::vector<double> t;
  std::vector<double> t_prime;
  double kappa = 0.0;
  std::size_t s = 1;
  double gamma = 4.0;
  double beta_t = 0.0;
  std::size_t tuple_count = 1;
  std::string out;
};

int run_bounds(const BoundsArgs& a)
{
  if (a.preset != "worked-example") {
    throw std::invalid_argument("bounds: unknown preset '" + a.preset + "'");
  }
  const auto c = bounds::derive_constants(bounds::worked_example_preset());
  json j;
  j["preset"] = a.preset;
  j["inputs"] = {{"h", a.h}, {"n", a.n}, {"target", a.target}};
  j["constants"] = {{"C1", c.c1}, {"C2", c.c2}, {"C3", c.c3}, {"C4", c.c4},
                    {"C5", c.c5}, {"C6", c.c6}, {"C7", c.c7}, {"C8", c.c8}};
  j["formulas"] = json::object();
  for (const auto& f : bounds::formulas()) {
    j["formulas"][f.name] = f.expression;
  }
  try {
    const auto e = bounds::existence_probability(c, a.n, a.h);
    j["existence"] = {{"probability", bound_json(e.prob_lower)},
                      {"margin", e.margin},
                      {"kth_power_condition_stricter", e.kth_power_condition_stricter}};
    j["min_sample_size"] = bounds::min_sample_size_for_existence(c, a.h, a.target);
  } catch (const std::domain_error& err) {
    j["existence"] = {{"error", err.what()}};
  }
  j["closed_form_threshold"] = bounds::worked_example_threshold(a.h);
  j["nk_deviation"] = json::array();
  for (double t : a.t) {
    const auto d = bounds::nk_deviation_bound(c, a.n, a.h, t);
    j["nk_deviation"].push_back({{"t", t}, {"epsilon", d.epsilon}, {"probability", bound_json(d.prob_lower)}});
  }
  j["theta_deviation"] = json::array();
  for (std::size_t i = 0; i < a.t.size(); ++i) {
    const double tp = i < a.t_prime.size() ? a.t_prime[i] : a.t[i];
    json entry = {{"t", a.t[i]}, {"t_prime", tp}};
    try {
      const auto d = bounds::theta_deviation_bound(c, a.n, a.h, a.t[i], tp);
      entry["epsilon"] = d.epsilon;
      entry["probability"] = bound_json(d.prob_lower);
    } catch (const std::domain_error& err) {
      entry["error"] = err.what();
    }
    j["theta_deviation"].push_back(entry);
  }
  if (a.kappa > 0.0) {
    bounds::BetaErrorInput in;
    in.kappa = a.kappa;
    in.s = a.s;
    in.gamma = a.gamma;
    in.t = a.beta_t;
    in.h = a.h;
    in.n = a.n;
    in.tuple_count = a.tuple_count;
    const auto b = bounds::beta_error_bound(c, in);
    j["beta_error"] = {{"h_ok", b.h_ok},
                       {"h_max", b.h_max},
                       {"lambda", b.lambda},
                       {"prediction_bound", b.pred_bound},
                       {"estimation_bound_l1", b.est_bound_l1},
                       {"estimation_bound_l2", b.est_bound_l2},
                       {"probability", bound_json(b.prob_lower)}};
  }
  emit(a.out, j.dump(2) + "\n");
  return 0;
}

struct AsymvarArgs
{
  std::string model = "truncated_normal";
  std::string functional = "rank_prob";
  std::string kernel = "epanechnikov";
  std::string queries;
  std::string mode = "analytic";
  std::string link;
  std::vector<double> design;
  std::string tuple_mode = "full";
  std::size_t reps = 100000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string out;
};

int run_asymvar(const AsymvarArgs& a)
{
  if (a.model != "truncated_normal") {
    throw std::invalid_argument("asymvar: unknown model '" + a.model + "'");
  }
  const auto model = truncated_normal_model();
  const auto g = builtin_functional(a.functional);
  const auto kernel = make_kernel(a.kernel, model.z_dim);
  OracleOptions o;
  o.reps = a.reps;
  o.seed = a.seed;
  o.workers = a.workers;
  if (a.mode == "analytic") {
    o.mode = OracleMode::analytic;
  } else if (a.mode == "mc") {
    o.mode = OracleMode::mc;
  } else {
    throw std::invalid_argument("asymvar: mode must be analytic or mc");
  }
  json j;
  j["model"] = a.model;
  j["functional"] = a.functional;
  j["kernel"] = a.kernel;
  j["mode"] = a.mode;
  j["reps"] = a.reps;
  j["seed"] = a.seed;
  if (!a.queries.empty()) {
    const auto qs = io::read_queries_csv(a.queries);
    j["rho_sq"] = json::array();
    for (const auto& q : qs) {
      const auto r = rho_squared(model, g, kernel, q, o);
      j["rho_sq"].push_back({{"query", q}, {"rho_sq", r.rho_sq}, {"std_error", r.std_error}, {"theta", r.theta}});
    }
    const auto hm = h_matrix(model, g, kernel, qs, o);
    j["H"] = matrix_json(hm.matrix);
    j["H_std_error"] = matrix_json(hm.std_error);
  }
  if (!a.design.empty()) {
    const Link link = make_link(a.link.empty() ? "identity" : a.link);
    PointSet design(model.z_dim, a.design);
    const auto tuples = enumerate_tuples(design.size(), g.arity(), io::parse_tuple_mode(a.tuple_mode));
    const auto ht = tilde_h_matrix(model, g, kernel, link, design, tuples, o);
    j["link"] = link.name();
    j["H_tilde"] = matrix_json(ht.matrix);
    j["H_tilde_std_error"] = matrix_json(ht.std_error);
    j["H_tilde_tuples"] = ht.queries;
  }
  emit(a.out, j.dump(2) + "\n");
  return 0;
}

int run_simulate(const std::string& name, std::optional<std::uint64_t> seed, std::optional<std::size_t> reps,
                 std::size_t workers, const std::string& out_dir)
{
  auto cfg = preset_experiment(name);
  if (seed) {
    cfg.seed = *seed;
  }
  if (reps) {
    cfg.reps = *reps;
  }
  cfg.workers = workers;
  const auto report = run_experiment(cfg);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    io::write_text(out_dir + "/" + name + ".json", report.to_json().dump(2) + "\n");
    io::write_text(out_dir + "/" + name + ".csv", report.csv());
  }
  for (const auto& c : report.checks) {
    std::cout << (c.pass ? "PASS " : (c.gating ? "FAIL " : "WARN ")) << c.name << ": " << c.detail << "\n";
  }
  std::cout << name << (report.passed() ? " passed" : " failed") << "\n";
  return report.passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Conditional U-statistics: estimation, two-step regression, bounds and simulations"};
  app.require_subcommand(1);

  std::string data;
  std::string queries;
  std::string config;
  std::string out;
  auto* estimate = app.add_subcommand("estimate", "kernel-weighted conditional U-statistic at query tuples");
  estimate->add_option("--data", data, "sample CSV (x1.., z1..)")->required();
  estimate->add_option("--queries", queries, "query CSV (z1..z{kp})")->required();
  estimate->add_option("--config", config, "JSON model config")->required();
  estimate->add_option("--out", out, "output CSV (default stdout)");

  std::string rows_out;
  auto* fit = app.add_subcommand("fit", "two-step penalized regression");
  fit->add_option("--data", data, "sample CSV")->required();
  fit->add_option("--config", config, "JSON model config")->required();
  fit->add_option("--out", out, "output JSON (default stdout)");
  fit->add_option("--rows-out", rows_out, "per-tuple CSV of estimates and responses");

  std::string fit_path;
  auto* predict = app.add_subcommand("predict", "predictions from a fitted beta");
  predict->add_option("--fit", fit_path, "JSON written by fit")->required();
  predict->add_option("--config", config, "JSON model config")->required();
  predict->add_option("--queries", queries, "query CSV")->required();
  predict->add_option("--out", out, "output CSV (default stdout)");

  BoundsArgs ba;
  auto* bnd = app.add_subcommand("bounds", "finite-sample constants and probability bounds");
  // -h would clash with the bandwidth option
  bnd->set_help_flag("--help", "Print this help message and exit");
  bnd->add_option("--preset", ba.preset, "constant preset")->capture_default_str();
  bnd->add_option("--h", ba.h, "bandwidth")->capture_default_str();
  bnd->add_option("--n", ba.n, "sample size")->capture_default_str();
  bnd->add_option("--target", ba.target, "existence probability target")->capture_default_str();
  bnd->add_option("--t", ba.t, "deviation levels t")->delimiter(',');
  bnd->add_option("--t-prime", ba.t_prime, "deviation levels t' (default t)")->delimiter(',');
  bnd->add_option("--kappa", ba.kappa, "restricted eigenvalue for the beta bound");
  bnd->add_option("--s", ba.s, "sparsity")->capture_default_str();
  bnd->add_option("--gamma", ba.gamma, "lambda = gamma t")->capture_default_str();
  bnd->add_option("--beta-t", ba.beta_t, "t of the beta bound");
  bnd->add_option("--tuples", ba.tuple_count, "number of design tuples")->capture_default_str();
  bnd->add_option("--out", ba.out, "output JSON (default stdout)");

  AsymvarArgs aa;
  auto* asym = app.add_subcommand("asymvar", "asymptotic variances rho^2, H and H-tilde");
  asym->add_option("--model", aa.model, "model preset")->capture_default_str();
  asym->add_option("--functional", aa.functional, "functional")->capture_default_str();
  asym->add_option("--kernel", aa.kernel, "kernel")->capture_default_str();
  asym->add_option("--queries", aa.queries, "query CSV");
  asym->add_option("--mode", aa.mode, "analytic or mc")->capture_default_str();
  asym->add_option("--link", aa.link, "link for H-tilde");
  asym->add_option("--design", aa.design, "design points for H-tilde")->delimiter(',');
  asym->add_option("--tuple-mode", aa.tuple_mode, "full or increasing")->capture_default_str();
  asym->add_option("--reps", aa.reps, "Monte Carlo reps")->capture_default_str();
  asym->add_option("--seed", aa.seed, "master seed")->capture_default_str();
  asym->add_option("--workers", aa.workers, "threads")->capture_default_str();
  asym->add_option("--out", aa.out, "output JSON (default stdout)");

  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::size_t workers = 1;
  std::string out_dir;
  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo campaign");
  sim->add_option("experiment", experiment, "campaign name")
    ->required()
    ->check(CLI::IsMember(preset_experiment_names()));
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--reps", reps, "replications");
  sim->add_option("--workers", workers, "threads (0 = all cores)")->capture_default_str();
  sim->add_option("--out", out_dir, "directory for <name>.json and <name>.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*estimate) {
      return run_estimate(data, queries, config, out);
    }
    if (*fit) {
      return run_fit(data, config, out, rows_out);
    }
    if (*predict) {
      return run_predict(fit_path, config, queries, out);
    }
    if (*bnd) {
      return run_bounds(ba);
    }
    if (*asym) {
      return run_asymvar(aa);
    }
    if (*sim) {
      return run_simulate(experiment, seed, reps, workers, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

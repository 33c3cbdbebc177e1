#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace condu::bounds {

//! A probability bound as computed and after clamping into [0, 1].
struct Bound
{
  double raw = 0.0;
  double clamped = 0.0;
  //! clamped == 0: the bound carries no information.
  bool vacuous = true;
};

Bound make_bound(double raw);

enum class TailRegime
{
  bounded,
  bernstein
};

//! Model constants as supplied by the user.
struct ModelConstants
{
  std::size_t k = 2;
  std::size_t p = 1;
  int alpha = 2;
  double f_z_min = 0.0;
  double f_z_max = 0.0;
  double c_k = 0.0;             // sup K
  double l2_k = 0.0;            // ||K||_2^2
  double c_k_alpha = 0.0;       // C_{K,alpha}
  double c_k_alpha_prime = 0.0; // C'_{K,alpha}
  double c_g_f_alpha = 0.0;     // C_{g,f,alpha}
  TailRegime tail = TailRegime::bounded;
  double c_g = 1.0;       // bounded regime
  double b_g_z = 0.0;     // Bernstein regime, B_g at the query tuple
  double b_g_tilde = 0.0; // Bernstein regime
  double c_psi = 1.0;
  double c_lambda_prime = 1.0;
};

struct BoundConstants
{
  ModelConstants model;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double c5 = 0.0;
  //! (C6, C7) of the declared regime: bounded formulas or the Bernstein
  //! alternatives with B_{g,z}.
  double c6 = 0.0;
  double c7 = 0.0;
  double c8 = 0.0;
};

//! Throws std::invalid_argument when an input is not positive or
//! f_z_min > f_z_max.
BoundConstants derive_constants(const ModelConstants& model);

//! Epanechnikov kernel, truncated-normal Z on [-1, 1], X | Z = z ~ N(z, 1),
//! rank probability functional: C_{K,alpha} = 0.2, f_min = 0.35,
//! f_max = 0.59, C_K = 3/4, ||K||^2 = 3/5, k = 2, p = 1, alpha = 2, C_g = 1.
ModelConstants worked_example_preset();

double factorial(int m);

//! exp(-floor(n/k) t^2 / (2 sigma^2 + (2/3)(b - theta) t)).
double berk_bound(std::size_t n, std::size_t k, double sigma_sq, double b_minus_theta, double t);

struct Deviation
{
  double epsilon = 0.0;
  Bound prob_lower;
};

//! P(|N_k - prod f_Z(z_i)| <= C_{K,a} h^a / a! + t) >= 1 - 2 exp(...).
Deviation nk_deviation_bound(const BoundConstants& c, std::size_t n, double h, double t);

struct ExistenceBound
{
  Bound prob_lower;
  double margin = 0.0; // f_min - C_{K,a} h^a / a!
  //! f_min < 1 and the stricter f_min^k / 2 threshold fails.
  bool kth_power_condition_stricter = false;
};

//! Lower bound on P(N_k > 0); throws std::domain_error when
//! C_{K,a} h^a / a! >= f_min.
ExistenceBound existence_probability(const BoundConstants& c, std::size_t n, double h);

//! Smallest n in [k, 1e9] with existence_probability >= target (integer
//! bisection); throws std::domain_error if none.
std::size_t min_sample_size_for_existence(const BoundConstants& c, double h, double target_prob);

//! Closed-form threshold 3 (0.52 + 1.5 d) / (h^2 d^2), d = 0.35 - 0.1 h^2,
//! printed for the worked example alongside the bound-based sample size.
double worked_example_threshold(double h);

//! Theta deviation radius (1 + C3 h^a + C4 t)(C5 h^{k+a} + t') and its
//! probability lower bound; throws std::domain_error unless
//! C_{K,a} h^a / a! + t < f_min / 2.
Deviation theta_deviation_bound(const BoundConstants& c, std::size_t n, double h, double t, double t_prime);

struct BetaErrorInput
{
  double kappa = 0.0; // kappa(s, 3)
  std::size_t s = 1;
  double gamma = 4.0;
  double t = 0.0;
  double h = 0.0;
  std::size_t n = 0;
  std::size_t tuple_count = 0;
  //! Bernstein regime: B_g(z'_sigma) per tuple (size tuple_count). Empty
  //! means the constant (C6, C7) of the bounded regime.
  std::vector<double> per_tuple_b_g;
};

struct BetaErrorBound
{
  bool h_ok = false;
  double h_max = 0.0;
  double lambda = 0.0;     // gamma * t
  double pred_bound = 0.0; // 4 (gamma + 1) t sqrt(s) / kappa
  double est_bound_l1 = 0.0;
  double est_bound_l2 = 0.0;
  Bound prob_lower;
  //! |beta_hat - beta*|_q bound for q in [1, 2].
  double est_bound(double q) const;

  double gamma = 0.0;
  double t = 0.0;
  double kappa = 0.0;
  std::size_t s = 0;
};

//! Throws std::invalid_argument when gamma < 4, kappa <= 0 or t <= 0.
BetaErrorBound beta_error_bound(const BoundConstants& c, const BetaErrorInput& in);

//! Human-readable formulas used by the report writer.
struct Formula
{
  std::string name;
  std::string expression;
};
std::vector<Formula> formulas();

} // namespace condu::bounds

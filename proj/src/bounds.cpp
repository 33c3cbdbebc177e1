#include "condu/bounds.hpp"

#include <algorithm>
#include <cmath>

namespace condu::bounds {

Bound make_bound(double raw)
{
  Bound b;
  b.raw = raw;
  b.clamped = std::clamp(raw, 0.0, 1.0);
  b.vacuous = b.clamped == 0.0;
  return b;
}

double factorial(int m)
{
  double f = 1.0;
  for (int i = 2; i <= m; ++i) {
    f *= i;
  }
  return f;
}

namespace {

void require_positive(double v, const char* what)
{
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("bound constant ") + what + " must be positive and finite");
  }
}

double blocks(std::size_t n, std::size_t k)
{
  return static_cast<double>(n / k);
}

double bias_term(const BoundConstants& c, double h)
{
  return c.model.c_k_alpha * std::pow(h, c.model.alpha) / factorial(c.model.alpha);
}

double kp(const BoundConstants& c)
{
  return static_cast<double>(c.model.k * c.model.p);
}

} // namespace

BoundConstants derive_constants(const ModelConstants& m)
{
  if (m.k == 0 || m.p == 0 || m.alpha <= 0) {
    throw std::invalid_argument("k, p and alpha must be positive");
  }
  require_positive(m.f_z_min, "f_Z_min");
  require_positive(m.f_z_max, "f_Z_max");
  require_positive(m.c_k, "C_K");
  require_positive(m.l2_k, "||K||_2^2");
  require_positive(m.c_k_alpha, "C_K_alpha");
  require_positive(m.c_k_alpha_prime, "C'_K_alpha");
  require_positive(m.c_g_f_alpha, "C_g_f_alpha");
  require_positive(m.c_psi, "C_psi");
  require_positive(m.c_lambda_prime, "C_Lambda'");
  if (m.f_z_min > m.f_z_max) {
    throw std::invalid_argument("f_Z_min exceeds f_Z_max");
  }

  const double k = static_cast<double>(m.k);
  const double fmax_k = std::pow(m.f_z_max, k);
  const double fmin_k = std::pow(m.f_z_min, k);
  const double fmin_2k = fmin_k * fmin_k;
  const double ck_k = std::pow(m.c_k, k);
  const double a_fact = factorial(m.alpha);

  BoundConstants c;
  c.model = m;
  c.c1 = 2.0 * fmax_k * std::pow(m.l2_k, k);
  c.c2 = (4.0 / 3.0) * ck_k;
  c.c3 = 4.0 * fmax_k / fmin_2k * m.c_k_alpha / a_fact;
  c.c4 = 4.0 * fmax_k / fmin_2k;
  c.c5 = m.c_g_f_alpha * m.c_k_alpha_prime / fmin_k / a_fact;
  if (m.tail == TailRegime::bounded) {
    require_positive(m.c_g, "C_g");
    c.c6 = 2.0 * m.c_g * m.c_g * fmax_k / fmin_2k * std::pow(m.l2_k, k);
    c.c7 = (8.0 / 3.0) * ck_k * std::pow(m.c_g, k) / fmin_k;
  } else {
    require_positive(m.b_g_z, "B_g_z");
    require_positive(m.b_g_tilde, "B_g_tilde");
    const double b = m.b_g_z + m.b_g_tilde;
    c.c6 = 128.0 * b * b * std::pow(m.c_k, 2.0 * k - 1.0) / fmin_2k;
    c.c7 = 2.0 * b * ck_k / fmin_k;
  }
  c.c8 = m.c_psi * m.c_lambda_prime * (1.0 + c.c4 * m.f_z_min / 2.0);
  return c;
}

ModelConstants worked_example_preset()
{
  ModelConstants m;
  m.k = 2;
  m.p = 1;
  m.alpha = 2;
  m.f_z_min = 0.35;
  m.f_z_max = 0.59;
  m.c_k = 0.75;
  m.l2_k = 0.6;
  m.c_k_alpha = 0.2;
  // 2 * int K |u|^3 * int K |u| for the Epanechnikov kernel.
  m.c_k_alpha_prime = 0.09375;
  m.c_g_f_alpha = 1.0;
  m.tail = TailRegime::bounded;
  m.c_g = 1.0;
  m.c_psi = 1.0;
  m.c_lambda_prime = 1.0;
  return m;
}

double berk_bound(std::size_t n, std::size_t k, double sigma_sq, double b_minus_theta, double t)
{
  if (!(t > 0.0)) {
    throw std::invalid_argument("berk_bound: t must be positive");
  }
  if (k == 0 || n < k) {
    throw std::invalid_argument("berk_bound: need 1 <= k <= n");
  }
  if (sigma_sq < 0.0) {
    throw std::invalid_argument("berk_bound: variance must be nonnegative");
  }
  return std::exp(-blocks(n, k) * t * t / (2.0 * sigma_sq + (2.0 / 3.0) * b_minus_theta * t));
}

Deviation nk_deviation_bound(const BoundConstants& c, std::size_t n, double h, double t)
{
  if (!(t > 0.0) || !(h > 0.0)) {
    throw std::invalid_argument("nk_deviation_bound: h and t must be positive");
  }
  const double hkp = std::pow(h, -kp(c));
  Deviation d;
  d.epsilon = bias_term(c, h) + t;
  d.prob_lower = make_bound(1.0 - 2.0 * std::exp(-blocks(n, c.model.k) * t * t / (hkp * c.c1 + hkp * c.c2 * t)));
  return d;
}

ExistenceBound existence_probability(const BoundConstants& c, std::size_t n, double h)
{
  if (!(h > 0.0)) {
    throw std::invalid_argument("existence_probability: h must be positive");
  }
  ExistenceBound e;
  e.margin = c.model.f_z_min - bias_term(c, h);
  if (!(e.margin > 0.0)) {
    throw std::domain_error("existence_probability: C_K_alpha h^alpha / alpha! must be below f_Z_min");
  }
  const double fmin_k = std::pow(c.model.f_z_min, static_cast<double>(c.model.k));
  e.kth_power_condition_stricter = c.model.f_z_min < 1.0 && !(bias_term(c, h) < fmin_k / 2.0);
  const double exponent =
    blocks(n, c.model.k) * std::pow(h, kp(c)) * e.margin * e.margin / (c.c1 + c.c2 * e.margin);
  e.prob_lower = make_bound(1.0 - 2.0 * std::exp(-exponent));
  return e;
}

std::size_t min_sample_size_for_existence(const BoundConstants& c, double h, double target_prob)
{
  if (!(target_prob > 0.0 && target_prob < 1.0)) {
    throw std::invalid_argument("min_sample_size_for_existence: target must lie in (0, 1)");
  }
  constexpr std::size_t upper_limit = 1000000000;
  std::size_t lo = c.model.k;
  if (existence_probability(c, lo, h).prob_lower.raw >= target_prob) {
    return lo;
  }
  std::size_t hi = upper_limit;
  if (existence_probability(c, hi, h).prob_lower.raw < target_prob) {
    throw std::domain_error("min_sample_size_for_existence: target not reached for n <= 1e9");
  }
  // The bound is nondecreasing in n; invariant: p(lo) < target <= p(hi).
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (existence_probability(c, mid, h).prob_lower.raw >= target_prob) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double worked_example_threshold(double h)
{
  const double d = 0.35 - 0.1 * h * h;
  return 3.0 * (0.52 + 1.5 * d) / (h * h * d * d);
}

Deviation theta_deviation_bound(const BoundConstants& c, std::size_t n, double h, double t, double t_prime)
{
  if (!(t > 0.0) || !(t_prime > 0.0) || !(h > 0.0)) {
    throw std::invalid_argument("theta_deviation_bound: h, t and t' must be positive");
  }
  if (!(bias_term(c, h) + t < c.model.f_z_min / 2.0)) {
    throw std::domain_error("theta_deviation_bound: need C_K_alpha h^alpha / alpha! + t < f_Z_min / 2");
  }
  const double a = static_cast<double>(c.model.alpha);
  const double k = static_cast<double>(c.model.k);
  const double m = blocks(n, c.model.k);
  const double hkp = std::pow(h, kp(c));
  Deviation d;
  d.epsilon = (1.0 + c.c3 * std::pow(h, a) + c.c4 * t) * (c.c5 * std::pow(h, k + a) + t_prime);
  d.prob_lower = make_bound(1.0 - 2.0 * std::exp(-m * t * t * hkp / (c.c1 + c.c2 * t)) -
                            2.0 * std::exp(-m * t_prime * t_prime * hkp / (c.c6 + c.c7 * t_prime)));
  return d;
}

double BetaErrorBound::est_bound(double q) const
{
  if (!(q >= 1.0 && q <= 2.0)) {
    throw std::invalid_argument("estimation bound holds for q in [1, 2]");
  }
  return std::pow(4.0, 2.0 / q) * (gamma + 1.0) * t * std::pow(static_cast<double>(s), 1.0 / q) / (kappa * kappa);
}

BetaErrorBound beta_error_bound(const BoundConstants& c, const BetaErrorInput& in)
{
  if (in.gamma < 4.0) {
    throw std::invalid_argument("beta_error_bound: gamma must be at least 4");
  }
  if (!(in.kappa > 0.0)) {
    throw std::invalid_argument("beta_error_bound: kappa must be positive");
  }
  if (!(in.t > 0.0) || !(in.h > 0.0) || in.s == 0) {
    throw std::invalid_argument("beta_error_bound: t, h and s must be positive");
  }
  if (!in.per_tuple_b_g.empty() && in.per_tuple_b_g.size() != in.tuple_count) {
    throw std::invalid_argument("beta_error_bound: per-tuple B_g needs one value per tuple");
  }
  const auto& m = c.model;
  const double a = static_cast<double>(m.alpha);
  const double k = static_cast<double>(m.k);

  BetaErrorBound out;
  out.gamma = in.gamma;
  out.t = in.t;
  out.kappa = in.kappa;
  out.s = in.s;
  out.lambda = in.gamma * in.t;
  out.h_max = std::min(std::pow(m.f_z_min * factorial(m.alpha) / (4.0 * m.c_k_alpha), 1.0 / a),
                       std::pow(in.t / (2.0 * c.c5 * c.c8), 1.0 / (k + a)));
  out.h_ok = in.h <= out.h_max;
  out.pred_bound = 4.0 * (in.gamma + 1.0) * in.t * std::sqrt(static_cast<double>(in.s)) / in.kappa;
  out.est_bound_l1 = out.est_bound(1.0);
  out.est_bound_l2 = out.est_bound(2.0);

  const double blocks_n = blocks(in.n, m.k);
  const double hkp = std::pow(in.h, kp(c));
  const double existence_term =
    std::exp(-blocks_n * m.f_z_min * m.f_z_min * hkp / (16.0 * c.c1 + 4.0 * c.c2 * m.f_z_min));
  double sum = 0.0;
  for (std::size_t sigma = 0; sigma < in.tuple_count; ++sigma) {
    double c6 = c.c6;
    double c7 = c.c7;
    if (!in.per_tuple_b_g.empty()) {
      const double b = in.per_tuple_b_g[sigma] + m.b_g_tilde;
      const double fmin_k = std::pow(m.f_z_min, k);
      c6 = 128.0 * b * b * std::pow(m.c_k, 2.0 * k) / (fmin_k * fmin_k);
      c7 = 2.0 * b * std::pow(m.c_k, k) / fmin_k;
    }
    sum += existence_term + std::exp(-blocks_n * in.t * in.t * hkp / (4.0 * c.c8 * c.c8 * c6 + 2.0 * c.c8 * c7 * in.t));
  }
  out.prob_lower = make_bound(1.0 - 2.0 * sum);
  return out;
}

std::vector<Formula> formulas()
{
  return {
    {"C1", "2 f_max^k ||K||_2^(2k)"},
    {"C2", "(4/3) C_K^k"},
    {"C3", "4 f_max^k f_min^(-2k) C_K_alpha / alpha!"},
    {"C4", "4 f_max^k f_min^(-2k)"},
    {"C5", "C_g_f_alpha C'_K_alpha f_min^(-k) / alpha!"},
    {"C6_bounded", "2 C_g^2 f_max^k f_min^(-2k) ||K||_2^(2k)"},
    {"C7_bounded", "(8/3) C_K^k C_g^k f_min^(-k)"},
    {"C6_bernstein", "128 (B_g_z + B_g_tilde)^2 C_K^(2k-1) f_min^(-2k)"},
    {"C7_bernstein", "2 (B_g_z + B_g_tilde) C_K^k f_min^(-k)"},
    {"C8", "C_psi C_Lambda' (1 + C4 f_min / 2)"},
    {"berk", "exp(-floor(n/k) t^2 / (2 sigma^2 + (2/3)(b - theta) t))"},
    {"nk_deviation", "P(|N_k - prod f_Z(z_i)| <= C_K_alpha h^alpha / alpha! + t) >= "
                     "1 - 2 exp(-floor(n/k) t^2 / (h^(-kp) C1 + h^(-kp) C2 t))"},
    {"existence", "P(N_k > 0) >= 1 - 2 exp(-floor(n/k) h^(kp) d^2 / (C1 + C2 d)), d = f_min - C_K_alpha h^alpha / alpha!"},
    {"theta_deviation", "P(|theta_hat - theta| < (1 + C3 h^alpha + C4 t)(C5 h^(k+alpha) + t')) >= "
                        "1 - 2 exp(-floor(n/k) t^2 h^(kp) / (C1 + C2 t)) - 2 exp(-floor(n/k) t'^2 h^(kp) / (C6 + C7 t'))"},
    {"beta_h_condition", "h <= min((f_min alpha! / (4 C_K_alpha))^(1/alpha), (t / (2 C5 C8))^(1/(k+alpha)))"},
    {"beta_prediction", "||Z'(beta_hat - beta*)|| <= 4 (gamma + 1) t sqrt(s) / kappa"},
    {"beta_estimation", "|beta_hat - beta*|_q <= 4^(2/q) (gamma + 1) t s^(1/q) / kappa^2, 1 <= q <= 2"},
    {"beta_probability", "1 - 2 sum_sigma [exp(-floor(n/k) f_min^2 h^(kp) / (16 C1 + 4 C2 f_min)) + "
                         "exp(-floor(n/k) t^2 h^(kp) / (4 C8^2 C6_sigma + 2 C8 C7_sigma t))], "
                         "C6_sigma = 128 (B_g(z'_sigma) + B_g_tilde)^2 C_K^(2k) f_min^(-2k) under Bernstein"},
  };
}

} // namespace condu::bounds

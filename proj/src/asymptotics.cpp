#include "condu/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "condu/parallel.hpp"
#include "condu/stats.hpp"

namespace condu {

double sample_truncated_normal(Rng& rng, double lo, double hi)
{
  const double a = stats::normal_cdf(lo);
  const double b = stats::normal_cdf(hi);
  const double z = stats::normal_quantile(a + uniform_open(rng) * (b - a));
  return std::clamp(z, lo, hi);
}

double sample_truncated_normal_rejection(Rng& rng, double lo, double hi)
{
  for (;;) {
    const double z = stats::normal_quantile(uniform_open(rng));
    if (z >= lo && z <= hi) {
      return z;
    }
  }
}

GenerativeModel truncated_normal_model()
{
  GenerativeModel m;
  m.name = "truncated_normal";
  m.z_dim = 1;
  m.x_dim = 1;
  m.sample_z = [](Rng& rng, std::span<double> z) { z[0] = sample_truncated_normal(rng, -1.0, 1.0); };
  m.sample_x_given_z = [](Rng& rng, std::span<const double> z, std::span<double> x) {
    x[0] = z[0] + stats::normal_quantile(uniform_open(rng));
  };
  const double mass = 1.0 - 2.0 * stats::normal_cdf(-1.0);
  m.f_z = [mass](std::span<const double> z) {
    return std::abs(z[0]) <= 1.0 ? stats::normal_pdf(z[0]) / mass : 0.0;
  };
  m.theta_oracle = [](std::span<const double> z) {
    return stats::normal_cdf((z[1] - z[0]) / std::sqrt(2.0));
  };
  m.oracle_functional = "rank_prob";
  return m;
}

namespace {

std::size_t copies_of(MomentKind kind)
{
  switch (kind) {
    case MomentKind::theta:
      return 1;
    case MomentKind::theta_jl:
    case MomentKind::tilde_theta_jl:
      return 2;
    case MomentKind::theta_jlm:
      return 3;
  }
  return 1;
}

std::size_t arg_count(MomentKind kind, std::size_t k)
{
  switch (kind) {
    case MomentKind::theta:
    case MomentKind::theta_jl:
      return k;
    case MomentKind::tilde_theta_jl:
      return 2 * k;
    case MomentKind::theta_jlm:
      return 3 * k;
  }
  return k;
}

struct BlockStats
{
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v)
  {
    count += 1.0;
    const double d = v - mean;
    mean += d / count;
    m2 += d * (v - mean);
  }

  void merge(const BlockStats& o)
  {
    if (o.count == 0.0) {
      return;
    }
    const double n = count + o.count;
    const double d = o.mean - mean;
    mean += d * o.count / n;
    m2 += o.m2 + d * d * count * o.count / n;
    count = n;
  }
};

constexpr std::size_t kBlock = 4096;

} // namespace

MCEstimate mc_conditional_moment(const GenerativeModel& model, const UStatFunctional& functional,
                                 const MomentSpec& spec, std::span<const double> z_args, std::size_t reps,
                                 std::uint64_t seed, std::size_t workers)
{
  if (reps < 2) {
    throw std::invalid_argument("mc_conditional_moment: reps must be at least 2");
  }
  const std::size_t k = functional.arity();
  const std::size_t p = model.z_dim;
  const std::size_t px = model.x_dim;
  if (functional.x_dim() != px) {
    throw std::invalid_argument("mc_conditional_moment: functional and model disagree on dim(X)");
  }
  const std::size_t copies = copies_of(spec.kind);
  const std::size_t nargs = arg_count(spec.kind, k);
  if (z_args.size() != nargs * p) {
    throw std::invalid_argument("mc_conditional_moment: expected " + std::to_string(nargs) + " z points of dimension " +
                                std::to_string(p));
  }
  const std::size_t shared_slot[3] = {spec.j, spec.l, spec.m};
  for (std::size_t c = 0; c < copies && copies > 1; ++c) {
    if (shared_slot[c] >= k) {
      throw std::invalid_argument("mc_conditional_moment: slot index out of range");
    }
  }
  // Copy c reads its z's from block c of z_args, except theta_jl which
  // conditions both copies on the same k points.
  auto z_of = [&](std::size_t c, std::size_t slot) {
    const std::size_t base = spec.kind == MomentKind::theta_jl ? 0 : c * k;
    return z_args.subspan((base + slot) * p, p);
  };

  const std::size_t blocks = (reps + kBlock - 1) / kBlock;
  std::vector<BlockStats> partial(blocks);
  parallel_for(blocks, workers, [&](std::size_t b) {
    Rng rng(derive_seed(seed, {b}));
    std::vector<double> xs(copies * k * px);
    std::vector<double> shared(px);
    std::vector<Point> args(k);
    const std::size_t begin = b * kBlock;
    const std::size_t end = std::min(reps, begin + kBlock);
    BlockStats st;
    for (std::size_t r = begin; r < end; ++r) {
      if (copies > 1) {
        model.sample_x_given_z(rng, z_of(0, spec.j), shared);
      }
      for (std::size_t c = 0; c < copies; ++c) {
        for (std::size_t i = 0; i < k; ++i) {
          std::span<double> x(xs.data() + (c * k + i) * px, px);
          if (copies > 1 && i == shared_slot[c]) {
            if (spec.decouple && c > 0) {
              model.sample_x_given_z(rng, z_of(0, spec.j), x);
            } else {
              std::copy(shared.begin(), shared.end(), x.begin());
            }
          } else {
            model.sample_x_given_z(rng, z_of(c, i), x);
          }
        }
      }
      double v = 1.0;
      for (std::size_t c = 0; c < copies; ++c) {
        for (std::size_t i = 0; i < k; ++i) {
          args[i] = Point(xs.data() + (c * k + i) * px, px);
        }
        v *= functional(args);
      }
      st.add(v);
    }
    partial[b] = st;
  });

  BlockStats total;
  for (const auto& st : partial) {
    total.merge(st);
  }
  MCEstimate out;
  out.estimate = total.mean;
  out.std_error = std::sqrt(total.m2 / (total.count - 1.0) / total.count);
  out.reps = reps;
  out.seed = seed;
  return out;
}

namespace {

bool same_point(std::span<const double> a, std::span<const double> b, double tol)
{
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (tol == 0.0 ? a[i] != b[i] : std::abs(a[i] - b[i]) > tol) {
      return false;
    }
  }
  return true;
}

struct ThetaValue
{
  double value;
  double std_error;
};

// Seeds: entry (a, b) of a covariance uses derive_seed(seed, {a, b}); inside
// an entry, the (j, l) moment uses {1, j, l} and the theta of a diagonal
// entry uses {0}. A single query therefore reproduces rho_squared exactly.
std::uint64_t entry_seed(std::uint64_t seed, std::size_t a, std::size_t b)
{
  return derive_seed(seed, {a, b});
}

ThetaValue theta_of(const GenerativeModel& model, const UStatFunctional& functional, std::span<const double> z,
                    const OracleOptions& o, std::uint64_t diag_seed)
{
  if (o.mode == OracleMode::analytic) {
    if (!model.has_oracle_for(functional)) {
      throw std::invalid_argument("analytic oracle mode: model '" + model.name + "' has no theta oracle for '" +
                                  functional.name() + "'");
    }
    return {model.theta_oracle(z), 0.0};
  }
  MomentSpec spec;
  auto e = mc_conditional_moment(model, functional, spec, z, o.reps, derive_seed(diag_seed, {0}), o.workers);
  return {e.estimate, e.std_error};
}

double density_at(const GenerativeModel& model, std::span<const double> z)
{
  if (!model.f_z) {
    throw std::invalid_argument("model '" + model.name + "' has no density for Z");
  }
  const double f = model.f_z(z);
  if (!(f > 0.0)) {
    throw std::domain_error("f_Z vanishes at a query point");
  }
  return f;
}

// One covariance entry between queries a and b; `coincident` selects the
// theta_{j,l} form (a == b) that rho_squared uses.
struct Entry
{
  double value = 0.0;
  double variance = 0.0;
  std::vector<RhoReport::Term> terms;
};

Entry covariance_entry(const GenerativeModel& model, const UStatFunctional& functional, double l2,
                       std::span<const double> za, std::span<const double> zb, const ThetaValue& ta,
                       const ThetaValue& tb, bool coincident, std::uint64_t seed, const OracleOptions& o)
{
  const std::size_t k = functional.arity();
  const std::size_t p = model.z_dim;
  std::vector<double> joint(za.begin(), za.end());
  joint.insert(joint.end(), zb.begin(), zb.end());
  Entry e;
  const double cross = ta.value * tb.value;
  const double cross_var = tb.value * tb.value * ta.std_error * ta.std_error +
                           ta.value * ta.value * tb.std_error * tb.std_error;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t l = 0; l < k; ++l) {
      auto zj = za.subspan(j * p, p);
      if (!same_point(zj, zb.subspan(l * p, p), o.z_equal_tol)) {
        continue;
      }
      const double w = l2 / density_at(model, zj);
      MomentSpec spec;
      spec.j = j;
      spec.l = l;
      spec.kind = coincident ? MomentKind::theta_jl : MomentKind::tilde_theta_jl;
      std::span<const double> args = coincident ? za : std::span<const double>(joint);
      auto m = mc_conditional_moment(model, functional, spec, args, o.reps, derive_seed(seed, {1, j, l}), o.workers);
      e.value += (m.estimate - cross) * w;
      e.variance += w * w * (m.std_error * m.std_error + cross_var);
      e.terms.push_back({j, l, m});
    }
  }
  return e;
}

} // namespace

RhoReport rho_squared(const GenerativeModel& model, const UStatFunctional& functional, const SmoothingKernel& kernel,
                      std::span<const double> z_tuple, const OracleOptions& options)
{
  const std::size_t k = functional.arity();
  if (z_tuple.size() != k * model.z_dim) {
    throw std::invalid_argument("rho_squared: z tuple must hold k points of dimension p");
  }
  if (kernel.dim() != model.z_dim) {
    throw std::invalid_argument("rho_squared: kernel dimension differs from dim(Z)");
  }
  const std::uint64_t seed = entry_seed(options.seed, 0, 0);
  const auto th = theta_of(model, functional, z_tuple, options, seed);
  auto e = covariance_entry(model, functional, kernel.l2_norm_sq(), z_tuple, z_tuple, th, th, true, seed, options);
  RhoReport r;
  r.rho_sq = e.value;
  r.std_error = std::sqrt(e.variance);
  r.theta = th.value;
  r.seed = options.seed;
  r.terms = std::move(e.terms);
  return r;
}

namespace {

AsymptoticCovariance assemble(const GenerativeModel& model, const UStatFunctional& functional,
                              const SmoothingKernel& kernel, const std::vector<std::vector<double>>& queries,
                              const OracleOptions& options)
{
  const std::size_t k = functional.arity();
  const std::size_t n = queries.size();
  if (n == 0) {
    throw std::invalid_argument("covariance: no queries");
  }
  if (kernel.dim() != model.z_dim) {
    throw std::invalid_argument("covariance: kernel dimension differs from dim(Z)");
  }
  for (const auto& q : queries) {
    if (q.size() != k * model.z_dim) {
      throw std::invalid_argument("covariance: every query must hold k points of dimension p");
    }
  }
  AsymptoticCovariance out;
  out.queries = queries;
  out.seed = options.seed;
  std::vector<ThetaValue> th(n);
  for (std::size_t a = 0; a < n; ++a) {
    th[a] = theta_of(model, functional, queries[a], options, entry_seed(options.seed, a, a));
    out.theta.push_back(th[a].value);
  }
  out.matrix = Eigen::MatrixXd::Zero(n, n);
  out.std_error = Eigen::MatrixXd::Zero(n, n);
  // Serial over entries; each MC call may itself use the workers.
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      auto e = covariance_entry(model, functional, kernel.l2_norm_sq(), queries[a], queries[b], th[a], th[b], a == b,
                                entry_seed(options.seed, a, b), options);
      out.matrix(a, b) = out.matrix(b, a) = e.value;
      out.std_error(a, b) = out.std_error(b, a) = std::sqrt(e.variance);
    }
  }
  return out;
}

} // namespace

AsymptoticCovariance h_matrix(const GenerativeModel& model, const UStatFunctional& functional,
                              const SmoothingKernel& kernel, const std::vector<std::vector<double>>& queries,
                              const OracleOptions& options)
{
  return assemble(model, functional, kernel, queries, options);
}

AsymptoticCovariance tilde_h_matrix(const GenerativeModel& model, const UStatFunctional& functional,
                                    const SmoothingKernel& kernel, const Link& link, const PointSet& design,
                                    const TupleSet& tuples, const OracleOptions& options)
{
  if (tuples.k() != functional.arity()) {
    throw std::invalid_argument("tilde_h_matrix: tuple order differs from the functional arity");
  }
  if (design.dim() != model.z_dim) {
    throw std::invalid_argument("tilde_h_matrix: design dimension differs from dim(Z)");
  }
  std::vector<std::vector<double>> queries;
  queries.reserve(tuples.size());
  for (std::size_t s = 0; s < tuples.size(); ++s) {
    queries.push_back(tuples.gather(design, s));
  }
  auto out = assemble(model, functional, kernel, queries, options);
  const std::size_t n = queries.size();
  std::vector<double> d(n);
  for (std::size_t a = 0; a < n; ++a) {
    d[a] = link.derivative(out.theta[a]);
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      out.matrix(a, b) *= d[a] * d[b];
      out.std_error(a, b) *= std::abs(d[a] * d[b]);
    }
  }
  return out;
}

Eigen::MatrixXd beta_limit_covariance(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& h_tilde)
{
  if (h_tilde.rows() != psi.rows() || h_tilde.cols() != psi.rows()) {
    throw std::invalid_argument("beta_limit_covariance: H must be |tuples| x |tuples|");
  }
  const Eigen::MatrixXd gram = psi.transpose() * psi;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      Eigen::JacobiSVD<Eigen::MatrixXd>(psi).rank() < psi.cols()) {
    throw std::domain_error("beta_limit_covariance: Psi is rank deficient");
  }
  const Eigen::MatrixXd a = ldlt.solve(psi.transpose()); // r x |tuples|
  Eigen::MatrixXd cov = a * h_tilde * a.transpose();
  return 0.5 * (cov + cov.transpose());
}

} // namespace condu

#include "condu/functionals.hpp"

#include "condu/stats.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace condu {

UStatFunctional::UStatFunctional(std::string name,
                                 std::size_t arity,
                                 std::size_t x_dim,
                                 Kernel g,
                                 TailModel tail,
                                 bool symmetric)
  : name_(std::move(name))
  , arity_(arity)
  , x_dim_(x_dim)
  , g_(std::move(g))
  , tail_(std::move(tail))
  , symmetric_(symmetric)
{
  if (arity_ == 0 || x_dim_ == 0) {
    throw std::invalid_argument("functional arity and dimension must be positive");
  }
}

double UStatFunctional::evaluate(std::span<const Point> xs) const
{
  if (xs.size() != arity_) {
    throw std::invalid_argument("functional '" + name_ + "' expects " + std::to_string(arity_) + " arguments");
  }
  for (const auto& x : xs) {
    if (x.size() != x_dim_) {
      throw std::invalid_argument("functional '" + name_ + "' expects points of dimension " +
                                  std::to_string(x_dim_));
    }
  }
  return g_(xs);
}

UStatFunctional builtin_functional(const std::string& name, const FunctionalParams& params)
{
  const double b_g = params.b_g;
  BernsteinTail bernstein{[b_g](std::span<const double>) { return b_g; }, params.b_g_tilde};
  if (name == "rank_prob") {
    return UStatFunctional(
      name, 2, 1, [](std::span<const Point> x) { return static_cast<double>(x[0][0] <= x[1][0]); }, BoundedTail{1.0}, false);
  }
  if (name == "cond_variance") {
    return UStatFunctional(
      name, 2, 1, [](std::span<const Point> x) { return x[0][0] * x[0][0] - x[0][0] * x[1][0]; }, bernstein, false);
  }
  if (name == "cond_covariance") {
    return UStatFunctional(
      name, 2, 2, [](std::span<const Point> x) { return x[0][0] * x[1][0] - x[0][0] * x[1][1]; }, bernstein, false);
  }
  if (name == "gini") {
    return UStatFunctional(
      name, 2, 1, [](std::span<const Point> x) { return std::abs(x[0][0] - x[1][0]); }, bernstein, true);
  }
  throw std::invalid_argument("unknown functional '" + name + "'");
}

// ---------------------------------------------------------------------------

Link::Link(LinkKind kind)
  : kind_(kind)
{
}

LinkValue Link::apply_checked(double x) const
{
  if (kind_ == LinkKind::identity) {
    return {x, false};
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error(name() + " link is defined on [0, 1], got " + std::to_string(x));
  }
  const double clamped = std::clamp(x, kClampEps, 1.0 - kClampEps);
  const bool was_clamped = clamped != x;
  if (kind_ == LinkKind::logit) {
    return {std::log(clamped / (1.0 - clamped)), was_clamped};
  }
  return {stats::normal_quantile(clamped), was_clamped};
}

double Link::inverse(double y) const
{
  switch (kind_) {
    case LinkKind::identity:
      return y;
    case LinkKind::logit:
      return 1.0 / (1.0 + std::exp(-y));
    case LinkKind::probit:
      return stats::normal_cdf(y);
  }
  return y;
}

double Link::derivative(double x) const
{
  if (kind_ == LinkKind::identity) {
    return 1.0;
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error(name() + " link is defined on [0, 1], got " + std::to_string(x));
  }
  const double c = std::clamp(x, kClampEps, 1.0 - kClampEps);
  if (kind_ == LinkKind::logit) {
    return 1.0 / (c * (1.0 - c));
  }
  return 1.0 / stats::normal_pdf(stats::normal_quantile(c));
}

double Link::derivative_bound() const
{
  return derivative(kind_ == LinkKind::identity ? 0.0 : kClampEps);
}

double Link::domain_lo() const
{
  return kind_ == LinkKind::identity ? -std::numeric_limits<double>::infinity() : 0.0;
}

double Link::domain_hi() const
{
  return kind_ == LinkKind::identity ? std::numeric_limits<double>::infinity() : 1.0;
}

std::string Link::name() const
{
  switch (kind_) {
    case LinkKind::identity:
      return "identity";
    case LinkKind::logit:
      return "logit";
    case LinkKind::probit:
      return "probit";
  }
  return "unknown";
}

Link make_link(const std::string& name)
{
  if (name == "identity") {
    return Link(LinkKind::identity);
  }
  if (name == "logit") {
    return Link(LinkKind::logit);
  }
  if (name == "probit") {
    return Link(LinkKind::probit);
  }
  throw std::invalid_argument("unknown link '" + name + "'");
}

// ---------------------------------------------------------------------------

BasisModel::BasisModel(std::size_t k, std::size_t p, std::vector<BasisFunction> functions, double psi_bound, Link link)
  : k_(k)
  , p_(p)
  , functions_(std::move(functions))
  , psi_bound_(psi_bound)
  , link_(link)
{
  if (k_ == 0 || p_ == 0) {
    throw std::invalid_argument("basis tuple arity and dimension must be positive");
  }
  if (functions_.empty()) {
    throw std::invalid_argument("basis must contain at least one function");
  }
}

BasisModel BasisModel::with_link(Link link) const
{
  BasisModel copy = *this;
  copy.link_ = link;
  return copy;
}

std::vector<double> BasisModel::eval(std::span<const double> z_tuple) const
{
  if (z_tuple.size() != k_ * p_) {
    throw std::invalid_argument("basis expects " + std::to_string(k_ * p_) + " tuple coordinates, got " +
                                std::to_string(z_tuple.size()));
  }
  std::vector<double> out;
  out.reserve(functions_.size());
  for (const auto& f : functions_) {
    out.push_back(f.eval(z_tuple));
  }
  return out;
}

BasisModel constant_basis(std::size_t k, std::size_t p)
{
  return BasisModel(k, p, {{"1", [](std::span<const double>) { return 1.0; }}}, 1.0);
}

namespace {

std::string coord_label(std::size_t c, std::size_t p)
{
  // z{slot}[.{axis}] with 1-based slots
  const std::size_t slot = c / p + 1;
  if (p == 1) {
    return "z" + std::to_string(slot);
  }
  return "z" + std::to_string(slot) + "." + std::to_string(c % p + 1);
}

} // namespace

BasisModel polynomial_basis(std::size_t k, std::size_t p, std::size_t degree, double domain_radius,
                            bool include_intercept)
{
  const std::size_t dims = k * p;
  std::vector<BasisFunction> fns;
  std::vector<std::size_t> exps(dims, 0);
  // Graded lexicographic: degree by degree, larger exponents on earlier coordinates first.
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t axis, std::size_t left) {
    if (axis + 1 == dims) {
      exps[axis] = left;
      std::string label;
      for (std::size_t c = 0; c < dims; ++c) {
        if (exps[c] == 0) {
          continue;
        }
        if (!label.empty()) {
          label += "*";
        }
        label += coord_label(c, p);
        if (exps[c] > 1) {
          label += "^" + std::to_string(exps[c]);
        }
      }
      if (label.empty()) {
        label = "1";
      }
      fns.push_back({label, [e = exps](std::span<const double> z) {
                       double v = 1.0;
                       for (std::size_t c = 0; c < e.size(); ++c) {
                         for (std::size_t r = 0; r < e[c]; ++r) {
                           v *= z[c];
                         }
                       }
                       return v;
                     }});
      return;
    }
    for (std::size_t e = left + 1; e-- > 0;) {
      exps[axis] = e;
      rec(axis + 1, left - e);
    }
  };
  for (std::size_t d = include_intercept ? 0 : 1; d <= degree; ++d) {
    rec(0, d);
  }
  if (fns.empty()) {
    throw std::invalid_argument("polynomial basis is empty");
  }
  const double bound = std::pow(std::max(1.0, domain_radius), static_cast<double>(degree));
  return BasisModel(k, p, std::move(fns), bound);
}

BasisModel trigonometric_basis(std::size_t k, std::size_t p, std::size_t max_freq, TrigTerms terms)
{
  const std::size_t dims = k * p;
  std::vector<BasisFunction> fns;
  for (std::size_t j = 1; j <= max_freq; ++j) {
    const double w = M_PI * static_cast<double>(j);
    for (std::size_t c = 0; c < dims; ++c) {
      const std::string arg = std::to_string(j) + "pi*" + coord_label(c, p);
      if (terms != TrigTerms::cos) {
        fns.push_back({"sin(" + arg + ")", [w, c](std::span<const double> z) { return std::sin(w * z[c]); }});
      }
      if (terms != TrigTerms::sin) {
        fns.push_back({"cos(" + arg + ")", [w, c](std::span<const double> z) { return std::cos(w * z[c]); }});
      }
    }
  }
  if (fns.empty()) {
    throw std::invalid_argument("trigonometric basis needs max_freq >= 1");
  }
  return BasisModel(k, p, std::move(fns), 1.0);
}

BasisModel indicator_basis(std::size_t k, std::size_t p, std::size_t bins, double lo, double hi)
{
  if (bins == 0 || !(hi > lo)) {
    throw std::invalid_argument("indicator basis needs bins >= 1 and hi > lo");
  }
  const std::size_t dims = k * p;
  std::size_t cells = 1;
  for (std::size_t c = 0; c < dims; ++c) {
    cells *= bins;
    if (cells > 100000) {
      throw std::invalid_argument("indicator basis has too many cells");
    }
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<BasisFunction> fns;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::vector<std::size_t> index(dims);
    std::size_t rest = cell;
    std::string label = "1{";
    for (std::size_t c = 0; c < dims; ++c) {
      index[c] = rest % bins;
      rest /= bins;
      label += (c ? "," : "") + std::to_string(index[c]);
    }
    label += "}";
    fns.push_back({label, [index, lo, width, bins](std::span<const double> z) {
                     for (std::size_t c = 0; c < index.size(); ++c) {
                       const double x = (z[c] - lo) / width;
                       if (x < 0.0 || x > static_cast<double>(bins)) {
                         return 0.0;
                       }
                       const auto b = std::min(static_cast<std::size_t>(x), bins - 1);
                       if (b != index[c]) {
                         return 0.0;
                       }
                     }
                     return 1.0;
                   }});
  }
  return BasisModel(k, p, std::move(fns), 1.0);
}

BasisModel concat_bases(const std::vector<BasisModel>& parts)
{
  if (parts.empty()) {
    throw std::invalid_argument("concatenation of zero bases");
  }
  std::vector<BasisFunction> fns;
  double bound = 0.0;
  for (const auto& part : parts) {
    if (part.k() != parts.front().k() || part.p() != parts.front().p()) {
      throw std::invalid_argument("concatenated bases must share k and p");
    }
    fns.insert(fns.end(), part.functions().begin(), part.functions().end());
    bound = std::max(bound, part.psi_bound());
  }
  return BasisModel(parts.front().k(), parts.front().p(), std::move(fns), bound, parts.front().link());
}

std::vector<double> eval_basis(const BasisModel& basis, std::span<const double> z_tuple)
{
  return basis.eval(z_tuple);
}

double link_apply(const BasisModel& basis, double x)
{
  return basis.link().apply(x);
}

double link_inverse(const BasisModel& basis, double y)
{
  return basis.link().inverse(y);
}

double link_derivative(const BasisModel& basis, double x)
{
  return basis.link().derivative(x);
}

IdentifiabilityReport check_identifiability(const BasisModel& basis, const PointSet& z_points, const TupleSet& tuples)
{
  if (tuples.size() == 0) {
    throw std::invalid_argument("check_identifiability: empty tuple set");
  }
  if (tuples.k() != basis.k() || z_points.dim() != basis.p()) {
    throw std::invalid_argument("check_identifiability: tuple arity or point dimension mismatch");
  }
  const std::size_t r = basis.size();
  Eigen::MatrixXd design(static_cast<Eigen::Index>(tuples.size()), static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const auto row = basis.eval(tuples.gather(z_points, i));
    for (std::size_t j = 0; j < r; ++j) {
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  // Singular values of the Gram matrix are the squares of these; rank is the same.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
  const Eigen::VectorXd sv = svd.singularValues();

  IdentifiabilityReport report;
  report.r = r;
  report.singular_values.assign(sv.data(), sv.data() + sv.size());
  report.singular_values.resize(r, 0.0);
  const double largest = report.singular_values.front();
  for (double s : report.singular_values) {
    if (s > 1e-10 * largest) {
      ++report.rank;
    }
  }
  report.smallest_singular_value = report.singular_values.back();
  report.identifiable = report.rank == r;
  return report;
}

} // namespace condu

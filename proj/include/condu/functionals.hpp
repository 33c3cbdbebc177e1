#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "condu/tuples.hpp"

namespace condu {

//! One observation X_i (length p_X) or one conditioning point z (length p).
using Point = std::span<const double>;

// ---------------------------------------------------------------------------
// U-statistic kernel g

struct BoundedTail
{
  double c_g; // ||g||_inf <= C_g
};

//! Conditional Bernstein envelope: E[|g|^l | Z = z] <= B_g(z)^l l!.
struct BernsteinTail
{
  std::function<double(std::span<const double>)> b_g; // flat z tuple -> B_g
  double b_g_tilde;                                   // sup of B_g
};

using TailModel = std::variant<BoundedTail, BernsteinTail>;

class UStatFunctional
{
public:
  using Kernel = std::function<double(std::span<const Point>)>;

  UStatFunctional(std::string name,
                  std::size_t arity,
                  std::size_t x_dim,
                  Kernel g,
                  TailModel tail,
                  bool symmetric);

  //! g(x_1, ..., x_k); the arguments must number arity() with x_dim() coords.
  double operator()(std::span<const Point> xs) const { return g_(xs); }
  double evaluate(std::span<const Point> xs) const;

  const std::string& name() const { return name_; }
  std::size_t arity() const { return arity_; }
  std::size_t x_dim() const { return x_dim_; }
  const TailModel& tail() const { return tail_; }
  bool symmetric() const { return symmetric_; }

private:
  std::string name_;
  std::size_t arity_;
  std::size_t x_dim_;
  Kernel g_;
  TailModel tail_;
  bool symmetric_;
};

struct FunctionalParams
{
  //! Constant Bernstein envelope B_g for the unbounded built-ins.
  double b_g = 1.0;
  double b_g_tilde = 1.0;
};

//! "rank_prob", "cond_variance", "cond_covariance" or "gini".
UStatFunctional builtin_functional(const std::string& name, const FunctionalParams& params = {});

// ---------------------------------------------------------------------------
// Link functions

enum class LinkKind
{
  identity,
  logit,
  probit
};

struct LinkValue
{
  double value;
  bool clamped;
};

class Link
{
public:
  static constexpr double kClampEps = 1e-6;

  explicit Link(LinkKind kind = LinkKind::identity);

  //! Lambda(x). Logit and probit clamp x into [eps, 1 - eps] and throw
  //! std::domain_error outside [0, 1].
  double apply(double x) const { return apply_checked(x).value; }
  LinkValue apply_checked(double x) const;
  //! Lambda^{-1}(y); total on R for every built-in link.
  double inverse(double y) const;
  //! Lambda'(x), evaluated after the same clamping as apply().
  double derivative(double x) const;
  //! Bound of Lambda' over the (clamped) domain.
  double derivative_bound() const;
  //! Open domain of apply() before clamping.
  double domain_lo() const;
  double domain_hi() const;

  LinkKind kind() const { return kind_; }
  std::string name() const;

private:
  LinkKind kind_;
};

Link make_link(const std::string& name);

// ---------------------------------------------------------------------------
// Basis psi on Z^k

struct BasisFunction
{
  std::string label;
  std::function<double(std::span<const double>)> eval; // flat z tuple (k * p)
};

class BasisModel
{
public:
  BasisModel(std::size_t k, std::size_t p, std::vector<BasisFunction> functions, double psi_bound,
             Link link = Link{});

  std::size_t k() const { return k_; }
  std::size_t p() const { return p_; }
  std::size_t size() const { return functions_.size(); }
  double psi_bound() const { return psi_bound_; }
  const Link& link() const { return link_; }
  const std::vector<BasisFunction>& functions() const { return functions_; }

  BasisModel with_link(Link link) const;

  //! (psi_1(z), ..., psi_r(z)) at a flat tuple of k * p coordinates.
  std::vector<double> eval(std::span<const double> z_tuple) const;

private:
  std::size_t k_;
  std::size_t p_;
  std::vector<BasisFunction> functions_;
  double psi_bound_;
  Link link_;
};

//! psi == 1.
BasisModel constant_basis(std::size_t k, std::size_t p);
//! All monomials of total degree <= degree in the k * p coordinates, graded
//! lexicographic order. `domain_radius` bounds |z| for C_psi.
BasisModel polynomial_basis(std::size_t k, std::size_t p, std::size_t degree, double domain_radius = 1.0,
                            bool include_intercept = true);

enum class TrigTerms
{
  sin,
  cos,
  both
};

//! sin(j pi z_c) and/or cos(j pi z_c) for every coordinate c, j = 1..max_freq.
BasisModel trigonometric_basis(std::size_t k, std::size_t p, std::size_t max_freq, TrigTerms terms = TrigTerms::both);

//! Indicators of the cells of a regular grid with `bins` cells per coordinate
//! over [lo, hi]^{k p}; the last cell is closed on the right.
BasisModel indicator_basis(std::size_t k, std::size_t p, std::size_t bins, double lo, double hi);

//! Concatenation of bases with equal (k, p); keeps the link of the first.
BasisModel concat_bases(const std::vector<BasisModel>& parts);

std::vector<double> eval_basis(const BasisModel& basis, std::span<const double> z_tuple);
double link_apply(const BasisModel& basis, double x);
double link_inverse(const BasisModel& basis, double y);
double link_derivative(const BasisModel& basis, double x);

struct IdentifiabilityReport
{
  std::size_t rank = 0;
  std::size_t r = 0;
  double smallest_singular_value = 0.0;
  std::vector<double> singular_values;
  bool identifiable = false;
};

//! Rank of the matrix with rows psi(z_{sigma(1)}, ..., z_{sigma(k)}) for sigma
//! in `tuples`. Rank counts singular values above 1e-10 times the largest.
IdentifiabilityReport check_identifiability(const BasisModel& basis, const PointSet& z_points,
                                            const TupleSet& tuples);

} // namespace condu

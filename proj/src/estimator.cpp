#include "condu/estimator.hpp"

#include "condu/parallel.hpp"

#include <cmath>
#include <string>

namespace condu {

ObservationSample::ObservationSample(PointSet xs, PointSet zs)
  : xs_(std::move(xs))
  , zs_(std::move(zs))
{
  if (xs_.size() != zs_.size()) {
    throw std::invalid_argument("sample has " + std::to_string(xs_.size()) + " X rows but " +
                                std::to_string(zs_.size()) + " Z rows");
  }
  if (xs_.size() == 0) {
    throw std::invalid_argument("sample is empty");
  }
  for (double v : xs_.data()) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("sample contains a non-finite X entry");
    }
  }
  for (double v : zs_.data()) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("sample contains a non-finite Z entry");
    }
  }
}

double CondEstimate::require_value() const
{
  if (!valid) {
    throw EstimatorUndefined("conditional U-statistic undefined: N_k = 0 at the query");
  }
  return value;
}

namespace {

// Per-slot kernel weights restricted to observations with a nonzero weight.
// Dropping zero weights leaves every sum unchanged (adding +0.0 is exact)
// and keeps the lexicographic order of the remaining terms.
struct SlotWeights
{
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

std::vector<SlotWeights> slot_weights(const ObservationSample& sample, const SmoothingKernel& kernel, double h,
                                      std::size_t k, std::span<const double> z_tuple)
{
  if (!(h > 0.0)) {
    throw std::invalid_argument("bandwidth must be positive");
  }
  if (k == 0) {
    throw std::invalid_argument("tuple arity must be positive");
  }
  const std::size_t p = sample.z_dim();
  if (kernel.dim() != p) {
    throw std::invalid_argument("kernel dimension " + std::to_string(kernel.dim()) +
                                " does not match covariate dimension " + std::to_string(p));
  }
  if (z_tuple.size() != k * p) {
    throw std::invalid_argument("query tuple has " + std::to_string(z_tuple.size()) + " coordinates, expected " +
                                std::to_string(k * p));
  }
  if (sample.size() < k) {
    throw std::invalid_argument("sample size " + std::to_string(sample.size()) + " is smaller than k = " +
                                std::to_string(k));
  }
  std::vector<SlotWeights> slots(k);
  std::vector<double> diff(p);
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t i = 0; i < sample.size(); ++i) {
      auto zi = sample.z(i);
      for (std::size_t a = 0; a < p; ++a) {
        diff[a] = zi[a] - z_tuple[s * p + a];
      }
      const double w = kernel.scaled(h, diff);
      if (w != 0.0) {
        slots[s].index.push_back(i);
        slots[s].weight.push_back(w);
      }
    }
  }
  return slots;
}

// Streams the injective prefixes (slots 0..k-2) in lexicographic order and
// calls visit(prefix, weight) with the product of their weights; the caller
// loops over the last slot. For k = 1 the prefix is empty.
template <class Visitor>
void for_each_weighted_prefix(const std::vector<SlotWeights>& slots, Visitor&& visit)
{
  const std::size_t k = slots.size();
  for (const auto& s : slots) {
    if (s.index.empty()) {
      return;
    }
  }
  const std::size_t depth_max = k - 1;
  std::vector<std::size_t> chosen(depth_max, 0);
  if (depth_max == 0) {
    visit(std::span<const std::size_t>(chosen), 1.0);
    return;
  }
  std::vector<std::size_t> pos(depth_max, 0);
  std::vector<double> partial(depth_max + 1, 1.0);
  std::size_t depth = 0;
  while (true) {
    if (pos[depth] >= slots[depth].index.size()) {
      if (depth == 0) {
        return;
      }
      pos[depth] = 0;
      --depth;
      ++pos[depth];
      continue;
    }
    const std::size_t candidate = slots[depth].index[pos[depth]];
    bool clash = false;
    for (std::size_t d = 0; d < depth; ++d) {
      clash = clash || chosen[d] == candidate;
    }
    if (clash) {
      ++pos[depth];
      continue;
    }
    chosen[depth] = candidate;
    partial[depth + 1] = partial[depth] * slots[depth].weight[pos[depth]];
    if (depth + 1 == depth_max) {
      visit(std::span<const std::size_t>(chosen), partial[depth_max]);
      ++pos[depth];
    } else {
      ++depth;
    }
  }
}

bool in_prefix(std::span<const std::size_t> prefix, std::size_t c)
{
  bool hit = false;
  for (std::size_t v : prefix) {
    hit = hit || v == c;
  }
  return hit;
}

double inverse_injective_count(std::size_t n, std::size_t k)
{
  double count = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    count *= static_cast<double>(n - i);
  }
  return 1.0 / count;
}

} // namespace

double compute_nk(const ObservationSample& sample, const SmoothingKernel& kernel, double h, std::size_t k,
                  std::span<const double> z_tuple)
{
  const auto slots = slot_weights(sample, kernel, h, k, z_tuple);
  const auto& last = slots.back();
  double den = 0.0;
  for_each_weighted_prefix(slots, [&](std::span<const std::size_t> prefix, double w) {
    for (std::size_t q = 0; q < last.index.size(); ++q) {
      if (!in_prefix(prefix, last.index[q])) {
        den += w * last.weight[q];
      }
    }
  });
  return den * inverse_injective_count(sample.size(), k);
}

CondEstimate estimate_theta(const ObservationSample& sample, const UStatFunctional& functional,
                            const SmoothingKernel& kernel, double h, std::span<const double> z_tuple)
{
  if (functional.x_dim() != sample.x_dim()) {
    throw std::invalid_argument("functional '" + functional.name() + "' expects X of dimension " +
                                std::to_string(functional.x_dim()) + ", sample has " +
                                std::to_string(sample.x_dim()));
  }
  const std::size_t k = functional.arity();
  const auto slots = slot_weights(sample, kernel, h, k, z_tuple);

  const auto& last = slots.back();
  std::vector<Point> last_x;
  last_x.reserve(last.index.size());
  for (std::size_t i : last.index) {
    last_x.push_back(sample.x(i));
  }
  std::vector<Point> args(k);
  double num = 0.0;
  double den = 0.0;
  for_each_weighted_prefix(slots, [&](std::span<const std::size_t> prefix, double w) {
    for (std::size_t s = 0; s + 1 < k; ++s) {
      args[s] = sample.x(prefix[s]);
    }
    for (std::size_t q = 0; q < last.index.size(); ++q) {
      if (in_prefix(prefix, last.index[q])) {
        continue;
      }
      args[k - 1] = last_x[q];
      const double wq = w * last.weight[q];
      num += wq * functional(args);
      den += wq;
    }
  });

  CondEstimate est;
  est.z_tuple.assign(z_tuple.begin(), z_tuple.end());
  est.nk = den * inverse_injective_count(sample.size(), k);
  est.valid = den > 0.0;
  if (est.valid) {
    est.value = num / den;
  }
  return est;
}

std::vector<CondEstimate> estimate_theta_batch(const ObservationSample& sample, const UStatFunctional& functional,
                                               const SmoothingKernel& kernel, double h,
                                               const std::vector<std::vector<double>>& queries, std::size_t workers)
{
  std::vector<CondEstimate> out(queries.size());
  parallel_for(queries.size(), workers,
               [&](std::size_t q) { out[q] = estimate_theta(sample, functional, kernel, h, queries[q]); });
  return out;
}

double predict_theta(const BasisModel& basis, std::span<const double> beta, std::span<const double> z_tuple)
{
  if (beta.size() != basis.size()) {
    throw std::invalid_argument("beta has length " + std::to_string(beta.size()) + ", basis has " +
                                std::to_string(basis.size()) + " functions");
  }
  const auto psi = basis.eval(z_tuple);
  double index = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    index += psi[j] * beta[j];
  }
  return basis.link().inverse(index);
}

} // namespace condu

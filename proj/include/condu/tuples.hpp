#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace condu {

//! Row-major collection of points of a common dimension.
class PointSet
{
public:
  PointSet() = default;
  PointSet(std::size_t dim, std::vector<double> data);
  PointSet(std::initializer_list<std::vector<double>> rows);
  static PointSet from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::span<const double> operator[](std::size_t i) const
  {
    return {data_.data() + i * dim_, dim_};
  }
  const std::vector<double>& data() const { return data_; }

private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

enum class TupleMode
{
  full,       // all injective k-tuples, lexicographic
  increasing, // strictly increasing k-tuples, lexicographic
  subsample   // m distinct injective tuples drawn without replacement
};

//! A collection of injective index k-tuples over {0, ..., base_size - 1}.
class TupleSet
{
public:
  TupleSet(std::size_t k, std::size_t base_size, TupleMode mode, std::vector<std::size_t> flat,
           std::uint64_t seed = 0);

  std::size_t k() const { return k_; }
  std::size_t base_size() const { return base_size_; }
  TupleMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return flat_.size() / k_; }
  std::span<const std::size_t> operator[](std::size_t i) const { return {flat_.data() + i * k_, k_}; }

  //! Flat k * p coordinates of the tuple (points[t_1], ..., points[t_k]).
  std::vector<double> gather(const PointSet& points, std::size_t i) const;

private:
  std::size_t k_;
  std::size_t base_size_;
  TupleMode mode_;
  std::uint64_t seed_;
  std::vector<std::size_t> flat_;
};

//! n! / (n - k)!; throws std::overflow_error beyond 2^63.
std::uint64_t injective_count(std::size_t n, std::size_t k);
//! C(n, k); throws std::overflow_error beyond 2^63.
std::uint64_t increasing_count(std::size_t n, std::size_t k);

//! Throws std::invalid_argument when k > base_size or k == 0, or when a
//! subsample asks for more tuples than exist.
TupleSet enumerate_tuples(std::size_t base_size, std::size_t k, TupleMode mode, std::size_t m = 0,
                          std::uint64_t seed = 0);

//! Calls visit(span of k indices) for every injective tuple in lexicographic
//! order without materializing the set.
template <class Visitor>
void for_each_injective(std::size_t n, std::size_t k, Visitor&& visit)
{
  if (k == 0 || k > n) {
    return;
  }
  std::vector<std::size_t> tuple(k, 0);
  std::vector<bool> used(n, false);
  std::size_t depth = 0;
  std::vector<std::size_t> next(k, 0);
  while (true) {
    if (next[depth] >= n) {
      if (depth == 0) {
        return;
      }
      --depth;
      used[tuple[depth]] = false;
      next[depth] = tuple[depth] + 1;
      continue;
    }
    const std::size_t candidate = next[depth];
    if (used[candidate]) {
      ++next[depth];
      continue;
    }
    tuple[depth] = candidate;
    if (depth + 1 == k) {
      visit(std::span<const std::size_t>(tuple));
      ++next[depth];
      continue;
    }
    used[candidate] = true;
    ++depth;
    next[depth] = 0;
  }
}

} // namespace condu

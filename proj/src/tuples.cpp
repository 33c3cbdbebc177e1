#include "condu/tuples.hpp"

#include "condu/rng.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <string>

namespace condu {

PointSet::PointSet(std::size_t dim, std::vector<double> data)
  : dim_(dim)
  , data_(std::move(data))
{
  if (dim_ == 0 && !data_.empty()) {
    throw std::invalid_argument("PointSet: zero dimension with data");
  }
  if (dim_ != 0 && data_.size() % dim_ != 0) {
    throw std::invalid_argument("PointSet: data size is not a multiple of the dimension");
  }
}

PointSet::PointSet(std::initializer_list<std::vector<double>> rows)
  : PointSet(from_rows(std::vector<std::vector<double>>(rows)))
{
}

PointSet PointSet::from_rows(const std::vector<std::vector<double>>& rows)
{
  if (rows.empty()) {
    return {};
  }
  const std::size_t dim = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * dim);
  for (const auto& row : rows) {
    if (row.size() != dim) {
      throw std::invalid_argument("PointSet: ragged rows");
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return PointSet(dim, std::move(data));
}

TupleSet::TupleSet(std::size_t k, std::size_t base_size, TupleMode mode, std::vector<std::size_t> flat,
                   std::uint64_t seed)
  : k_(k)
  , base_size_(base_size)
  , mode_(mode)
  , seed_(seed)
  , flat_(std::move(flat))
{
  if (k_ == 0) {
    throw std::invalid_argument("TupleSet: k must be positive");
  }
  if (flat_.size() % k_ != 0) {
    throw std::invalid_argument("TupleSet: flat size is not a multiple of k");
  }
  for (std::size_t t = 0; t < size(); ++t) {
    auto tuple = (*this)[t];
    for (std::size_t a = 0; a < k_; ++a) {
      if (tuple[a] >= base_size_) {
        throw std::invalid_argument("TupleSet: index out of range");
      }
      for (std::size_t b = 0; b < a; ++b) {
        if (tuple[a] == tuple[b]) {
          throw std::invalid_argument("TupleSet: tuple is not injective");
        }
      }
    }
  }
}

std::vector<double> TupleSet::gather(const PointSet& points, std::size_t i) const
{
  if (points.size() != base_size_) {
    throw std::invalid_argument("TupleSet::gather: point set size " + std::to_string(points.size()) +
                                " does not match base size " + std::to_string(base_size_));
  }
  std::vector<double> out;
  out.reserve(k_ * points.dim());
  for (std::size_t idx : (*this)[i]) {
    auto z = points[idx];
    out.insert(out.end(), z.begin(), z.end());
  }
  return out;
}

std::uint64_t injective_count(std::size_t n, std::size_t k)
{
  if (k > n) {
    return 0;
  }
  constexpr std::uint64_t limit = std::uint64_t{1} << 63;
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint64_t factor = n - i;
    if (count > limit / factor) {
      throw std::overflow_error("injective tuple count overflows");
    }
    count *= factor;
  }
  return count;
}

std::uint64_t increasing_count(std::size_t n, std::size_t k)
{
  if (k > n) {
    return 0;
  }
  k = std::min(k, n - k);
  constexpr std::uint64_t limit = std::uint64_t{1} << 63;
  std::uint64_t count = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    const std::uint64_t factor = n - k + i;
    if (count > limit / factor) {
      throw std::overflow_error("increasing tuple count overflows");
    }
    count = count * factor / i;
  }
  return count;
}

namespace {

// Lexicographic unranking of injective tuples.
void unrank_injective(std::uint64_t rank, std::size_t n, std::size_t k, std::vector<std::size_t>& out)
{
  std::vector<std::size_t> available(n);
  for (std::size_t i = 0; i < n; ++i) {
    available[i] = i;
  }
  for (std::size_t pos = 0; pos < k; ++pos) {
    const std::uint64_t block = injective_count(n - pos - 1, k - pos - 1);
    const auto choice = static_cast<std::size_t>(rank / block);
    rank %= block;
    out.push_back(available[choice]);
    available.erase(available.begin() + static_cast<std::ptrdiff_t>(choice));
  }
}

} // namespace

TupleSet enumerate_tuples(std::size_t base_size, std::size_t k, TupleMode mode, std::size_t m, std::uint64_t seed)
{
  if (k == 0) {
    throw std::invalid_argument("enumerate_tuples: k must be positive");
  }
  if (k > base_size) {
    throw std::invalid_argument("enumerate_tuples: k = " + std::to_string(k) + " exceeds base size " +
                                std::to_string(base_size));
  }
  std::vector<std::size_t> flat;
  switch (mode) {
    case TupleMode::full: {
      flat.reserve(static_cast<std::size_t>(injective_count(base_size, k)) * k);
      for_each_injective(base_size, k, [&](std::span<const std::size_t> t) { flat.insert(flat.end(), t.begin(), t.end()); });
      break;
    }
    case TupleMode::increasing: {
      flat.reserve(static_cast<std::size_t>(increasing_count(base_size, k)) * k);
      std::vector<std::size_t> t(k);
      for (std::size_t i = 0; i < k; ++i) {
        t[i] = i;
      }
      while (true) {
        flat.insert(flat.end(), t.begin(), t.end());
        std::size_t pos = k;
        while (pos > 0 && t[pos - 1] == base_size - k + pos - 1) {
          --pos;
        }
        if (pos == 0) {
          break;
        }
        ++t[pos - 1];
        for (std::size_t j = pos; j < k; ++j) {
          t[j] = t[j - 1] + 1;
        }
      }
      break;
    }
    case TupleMode::subsample: {
      const std::uint64_t total = injective_count(base_size, k);
      if (m == 0 || m > total) {
        throw std::invalid_argument("enumerate_tuples: subsample size must lie in [1, " + std::to_string(total) + "]");
      }
      // Floyd's algorithm: m distinct ranks without replacement.
      Rng rng(seed);
      std::set<std::uint64_t> ranks;
      for (std::uint64_t j = total - m; j < total; ++j) {
        std::uniform_int_distribution<std::uint64_t> pick(0, j);
        const std::uint64_t r = pick(rng);
        if (!ranks.insert(r).second) {
          ranks.insert(j);
        }
      }
      flat.reserve(m * k);
      for (std::uint64_t r : ranks) {
        unrank_injective(r, base_size, k, flat);
      }
      break;
    }
  }
  return TupleSet(k, base_size, mode, std::move(flat), seed);
}

} // namespace condu

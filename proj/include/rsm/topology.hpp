#ifndef RSM_TOPOLOGY_HPP
#define RSM_TOPOLOGY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rsm/errors.hpp"
#include "rsm/markov.hpp"
#include "rsm/tolerances.hpp"

namespace rsm {

enum class Direction { HigherIsBetter, LowerIsBetter };
enum class FeatureKind { Numeric, Categorical };

struct FeatureSpec {
  std::string name;
  Direction direction = Direction::HigherIsBetter;
  FeatureKind kind = FeatureKind::Numeric;

  bool operator==(const FeatureSpec&) const = default;
};

/// One feature's preference chain over an ordered list of items.
class Topology {
public:
  Topology(std::string feature, StochasticMatrix matrix, std::vector<std::string> item_ids)
    : feature_(std::move(feature)), matrix_(std::move(matrix)), item_ids_(std::move(item_ids)) {
    if (matrix_.is_substochastic())
      throw InvalidMatrix("topology must be row-stochastic");
    if (static_cast<Index>(item_ids_.size()) != matrix_.size())
      throw ShapeError("topology '" + feature_ + "': " + std::to_string(item_ids_.size()) +
                       " item ids for a " + std::to_string(matrix_.size()) + "-state matrix");
  }

  const std::string& feature() const noexcept { return feature_; }
  const StochasticMatrix& stochastic() const noexcept { return matrix_; }
  const Matrix& matrix() const noexcept { return matrix_.matrix(); }
  const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }
  Index size() const noexcept { return matrix_.size(); }

private:
  std::string feature_;
  StochasticMatrix matrix_;
  std::vector<std::string> item_ids_;
};

/// Feature weights. Reporting form sums to 1; the learner works in the native
/// form which sums to 1 - lambda (the restart takes the remaining mass).
class WeightVector {
public:
  enum class Normalization { SumsToOne, SumsToOneMinusLambda };

  static WeightVector reporting(std::vector<double> w) {
    return WeightVector(std::move(w), Normalization::SumsToOne, 1.0);
  }

  static WeightVector native(std::vector<double> w, double lambda) {
    check_lambda(lambda);
    return WeightVector(std::move(w), Normalization::SumsToOneMinusLambda, 1.0 - lambda);
  }

  static WeightVector uniform(std::size_t k) {
    return reporting(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  WeightVector to_native(double lambda) const {
    if (normalization_ == Normalization::SumsToOneMinusLambda)
      return *this;
    std::vector<double> w = values_;
    for (double& v : w)
      v *= 1.0 - lambda;
    return native(std::move(w), lambda);
  }

  WeightVector to_reporting(double lambda) const {
    if (normalization_ == Normalization::SumsToOne)
      return *this;
    check_lambda(lambda);
    std::vector<double> w = values_;
    for (double& v : w)
      v /= 1.0 - lambda;
    return reporting(std::move(w));
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }
  Normalization normalization() const noexcept { return normalization_; }

private:
  WeightVector(std::vector<double> w, Normalization norm, double total)
    : values_(std::move(w)), normalization_(norm) {
    if (values_.empty())
      throw InvalidInput("weight vector is empty");
    double sum = 0.0;
    for (double v : values_) {
      if (!std::isfinite(v) || v < 0.0)
        throw InvalidInput("weights must be finite and nonnegative");
      sum += v;
    }
    if (std::abs(sum - total) > tolerances::row_sum)
      throw InvalidInput("weights sum to " + std::to_string(sum) + ", expected " +
                         std::to_string(total));
  }

  static void check_lambda(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
      throw ConfigError("lambda must lie in (0, 1)");
  }

  std::vector<double> values_;
  Normalization normalization_;
};

namespace detail {

inline std::vector<std::string> default_ids(std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i)
    ids[i] = std::to_string(i);
  return ids;
}

// 1-based ranks, larger = more desired; ties share the mean of their positions.
inline std::vector<double> desirability_ranks(std::span<const double> values, Direction dir) {
  const std::size_t n = values.size();
  std::vector<double> key(values.begin(), values.end());
  if (dir == Direction::LowerIsBetter)
    for (double& v : key)
      v = -v;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  std::vector<double> rank(n);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && key[order[end]] == key[order[start]])
      ++end;
    const double mean = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t i = start; i < end; ++i)
      rank[order[i]] = mean;
    start = end;
  }
  return rank;
}

} // namespace detail

/**
 * Rank-encoded preference chain for one feature over one context.
 *
 * Items are ranked 1..n with n the most desired (tied values share their mean
 * rank). The edge i -> j gets weight n + rank(j) - rank(i), including the self
 * loop, and each row is normalized. Depends only on the ordering of values, so
 * it is invariant to positive rescaling.
 */
inline Topology encode_rank_topology(std::string feature, std::span<const double> values,
                                     Direction direction,
                                     std::vector<std::string> item_ids = {}) {
  const std::size_t n = values.size();
  if (n < 2)
    throw ContextTooSmall("rank topology needs at least 2 items, got " + std::to_string(n));
  for (double v : values)
    if (!std::isfinite(v))
      throw InvalidInput("feature '" + feature + "' has a non-finite value");
  if (item_ids.empty())
    item_ids = detail::default_ids(n);

  const std::vector<double> rank = detail::desirability_ranks(values, direction);
  const auto nd = static_cast<double>(n);
  Matrix m(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = nd + rank[j] - rank[i];
    m.row(static_cast<Index>(i)) /= m.row(static_cast<Index>(i)).sum();
  }
  return Topology(std::move(feature), StochasticMatrix(std::move(m)), std::move(item_ids));
}

/// Submatrix over `subset` (given by item id, in the order wanted) with every
/// row renormalized.
inline Topology restrict(const Topology& topology, std::span<const std::string> subset) {
  if (subset.size() < 2)
    throw ContextTooSmall("restriction needs at least 2 items");
  std::unordered_map<std::string, Index> where;
  for (std::size_t i = 0; i < topology.item_ids().size(); ++i)
    where.emplace(topology.item_ids()[i], static_cast<Index>(i));

  std::vector<Index> idx;
  idx.reserve(subset.size());
  for (const auto& id : subset) {
    auto it = where.find(id);
    if (it == where.end())
      throw ShapeError("item '" + id + "' is not in topology '" + topology.feature() + "'");
    if (std::find(idx.begin(), idx.end(), it->second) != idx.end())
      throw ShapeError("item '" + id + "' repeated in subset");
    idx.push_back(it->second);
  }

  const auto m = static_cast<Index>(idx.size());
  Matrix sub(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j)
      sub(i, j) = topology.matrix()(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    const double s = sub.row(i).sum();
    if (!(s > 0.0))
      throw DanglingItem("item '" + subset[static_cast<std::size_t>(i)] +
                         "' has no transitions inside the subset");
    sub.row(i) /= s;
  }
  return Topology(topology.feature(), StochasticMatrix(std::move(sub)),
                  std::vector<std::string>(subset.begin(), subset.end()));
}

/// lambda * U + (1 - lambda) * sum_i w(i) T(i), with w in reporting form.
inline StochasticMatrix combine(std::span<const Topology> topologies, const WeightVector& w,
                                double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ConfigError("lambda must lie in (0, 1)");
  if (w.normalization() != WeightVector::Normalization::SumsToOne)
    throw InvalidInput("combine expects reporting-form weights (sum 1)");
  if (topologies.empty() || topologies.size() != w.size())
    throw ShapeError("combine: " + std::to_string(topologies.size()) + " topologies, " +
                     std::to_string(w.size()) + " weights");
  const auto& ids = topologies.front().item_ids();
  const Index n = topologies.front().size();
  Matrix acc = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < topologies.size(); ++i) {
    if (topologies[i].item_ids() != ids)
      throw ShapeError("combine: topology '" + topologies[i].feature() +
                       "' is over a different item list");
    acc += w[i] * topologies[i].matrix();
  }
  Matrix combined = (lambda / static_cast<double>(n)) * Matrix::Ones(n, n) + (1.0 - lambda) * acc;
  // Rows are convex combinations of stochastic rows; renormalize round-off.
  for (Index r = 0; r < n; ++r)
    combined.row(r) /= combined.row(r).sum();
  return StochasticMatrix(std::move(combined));
}

struct RankedItem {
  std::string item_id;
  double score = 0.0;
};

/// Items ordered by stationary probability, highest first. Scores within
/// tolerances::rank_tie of each other are ordered by item id.
inline std::vector<RankedItem> rank_items(const StochasticMatrix& combined,
                                          std::span<const std::string> item_ids) {
  if (static_cast<Index>(item_ids.size()) != combined.size())
    throw ShapeError("rank_items: item id count does not match matrix");
  const Distribution p = stationary(combined);
  std::vector<RankedItem> out(item_ids.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = {item_ids[i], p[static_cast<Index>(i)]};

  auto bucket = [](double s) { return std::llround(s / tolerances::rank_tie); };
  std::sort(out.begin(), out.end(), [&](const RankedItem& a, const RankedItem& b) {
    const auto ka = bucket(a.score), kb = bucket(b.score);
    if (ka != kb)
      return ka > kb;
    return a.item_id < b.item_id;
  });
  return out;
}

} // namespace rsm

#endif // RSM_TOPOLOGY_HPP

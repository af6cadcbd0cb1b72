#ifndef RSM_BASELINES_HPP
#define RSM_BASELINES_HPP

// Context-oblivious baselines: least-squares CTR regression on raw feature
// values plus position, and a per-(query, item) constant scorer.

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rsm/data.hpp"
#include "rsm/errors.hpp"
#include "rsm/markov.hpp"
#include "rsm/tolerances.hpp"

namespace rsm {

struct FeatureRow {
  std::string query_id;
  std::string item_id;
  std::vector<double> features;
  double ctr = 0.0;
};

/// Schema features followed by position, one row per displayed item.
inline std::vector<double> baseline_features(const ItemObservation& item) {
  std::vector<double> f = item.features;
  f.push_back(item.position);
  return f;
}

inline std::vector<FeatureRow> feature_rows(std::span<const LogRow> rows) {
  std::vector<FeatureRow> out;
  for (const auto& row : rows) {
    if (row.total_clicks() == 0)
      continue;
    for (std::size_t i = 0; i < row.items.size(); ++i)
      out.push_back({row.query_id, row.items[i].item_id, baseline_features(row.items[i]), row.ctr(i)});
  }
  return out;
}

struct LinearModel {
  std::vector<double> coefficients;  // original feature units
  double intercept = 0.0;
  bool ridge_fallback = false;       // set when the design was rank-deficient
};

/// Ordinary least squares on standardized features with an intercept. A
/// rank-deficient design falls back to ridge with tolerances::ridge.
inline LinearModel fit_least_squares(std::span<const FeatureRow> rows) {
  if (rows.empty())
    throw InvalidInput("least squares needs at least one row");
  const std::size_t k = rows.front().features.size();
  if (rows.size() < k + 1)
    throw InvalidInput("least squares needs at least k + 1 rows");
  const auto m = static_cast<Index>(rows.size());
  const auto kk = static_cast<Index>(k);

  Matrix X(m, kk);
  Vector y(m);
  for (Index r = 0; r < m; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (row.features.size() != k)
      throw ShapeError("feature rows have inconsistent arity");
    for (Index c = 0; c < kk; ++c) {
      const double v = row.features[static_cast<std::size_t>(c)];
      if (!std::isfinite(v))
        throw InvalidInput("non-finite feature value");
      X(r, c) = v;
    }
    if (!(row.ctr >= 0.0 && row.ctr <= 1.0))
      throw InvalidInput("CTR must lie in [0, 1]");
    y(r) = row.ctr;
  }

  const Vector mean = X.colwise().mean();
  Vector scale(kk);
  for (Index c = 0; c < kk; ++c) {
    const double sd = std::sqrt((X.col(c).array() - mean(c)).square().mean());
    scale(c) = sd > 0.0 ? sd : 1.0;
  }
  Matrix Xs = (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  const double y_mean = y.mean();
  const Vector yc = y.array() - y_mean;

  LinearModel model;
  Vector beta;
  Eigen::ColPivHouseholderQR<Matrix> qr(Xs);
  qr.setThreshold(1e-10);
  if (kk == 0) {
    beta = Vector(0);
  } else if (qr.rank() == kk) {
    beta = qr.solve(yc);
  } else {
    model.ridge_fallback = true;
    const Matrix A = Xs.transpose() * Xs + tolerances::ridge * Matrix::Identity(kk, kk);
    beta = A.ldlt().solve(Xs.transpose() * yc);
  }

  model.coefficients.resize(k);
  double intercept = y_mean;
  for (Index c = 0; c < kk; ++c) {
    const double coef = beta(c) / scale(c);
    model.coefficients[static_cast<std::size_t>(c)] = coef;
    intercept -= coef * mean(c);
  }
  model.intercept = intercept;
  return model;
}

inline double predict(const LinearModel& model, std::span<const double> features) {
  if (features.size() != model.coefficients.size())
    throw ShapeError("model expects " + std::to_string(model.coefficients.size()) +
                     " features, got " + std::to_string(features.size()));
  double s = model.intercept;
  for (std::size_t i = 0; i < features.size(); ++i)
    s += model.coefficients[i] * features[i];
  return s;
}

inline double predict(const LinearModel& model, const FeatureRow& row) {
  return predict(model, std::span<const double>(row.features));
}

/// Scores a (query, item) pair by its mean CTR over the rows it was seen in;
/// unseen pairs score 0. The score never depends on the context.
class ConstantScorer {
public:
  ConstantScorer() = default;

  explicit ConstantScorer(std::span<const FeatureRow> rows) {
    std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> acc;
    for (const auto& r : rows) {
      auto& [sum, count] = acc[{r.query_id, r.item_id}];
      sum += r.ctr;
      ++count;
    }
    for (const auto& [key, v] : acc)
      table_.emplace(key, v.first / static_cast<double>(v.second));
  }

  double score(const std::string& query_id, const std::string& item_id) const {
    auto it = table_.find({query_id, item_id});
    return it == table_.end() ? 0.0 : it->second;
  }

  std::size_t size() const noexcept { return table_.size(); }

private:
  std::map<std::pair<std::string, std::string>, double> table_;
};

inline ConstantScorer constant_scorer(std::span<const FeatureRow> rows) {
  return ConstantScorer(rows);
}

} // namespace rsm

#endif // RSM_BASELINES_HPP

#ifndef RSM_EVAL_HPP
#define RSM_EVAL_HPP

// Flip-prediction evaluation: accuracy on preference-flip pairs, repeated
// paired train/test splits, and paired t-tests between models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "rsm/baselines.hpp"
#include "rsm/data.hpp"
#include "rsm/errors.hpp"
#include "rsm/learner.hpp"
#include "rsm/rng.hpp"
#include "rsm/topology.hpp"

namespace rsm {

/// Per-item scores for a row, in the row's item order.
using Predictor = std::function<std::vector<double>(const LogRow&)>;

/// A named model: trains on rows and returns a predictor.
struct ModelSpec {
  std::string name;
  std::function<Predictor(std::span<const LogRow>)> train;
};

struct FlipAccuracy {
  double accuracy = 0.0;
  std::size_t comparisons = 0;
  std::size_t failures = 0;  // predictor errors, each scored 0.5
};

/**
 * Each pair contributes two comparisons, A vs B in each of its rows. A
 * comparison earns 1 when the predicted order matches the clicks, 0.5 on an
 * exact score tie, 0 otherwise.
 */
inline FlipAccuracy flip_accuracy_detailed(const Predictor& predictor,
                                           std::span<const FlipPair> pairs) {
  if (pairs.empty())
    throw InvalidInput("flip_accuracy needs at least one pair");
  FlipAccuracy out;
  double credit = 0.0;
  for (const auto& pair : pairs) {
    for (const LogRow* row : {&pair.row_1, &pair.row_2}) {
      ++out.comparisons;
      const auto ia = row->index_of(pair.item_a);
      const auto ib = row->index_of(pair.item_b);
      if (!ia || !ib)
        throw InvalidInput("flip pair items missing from their row");
      const auto ca = row->items[*ia].clicks, cb = row->items[*ib].clicks;
      const int truth = ca > cb ? 1 : (ca < cb ? -1 : 0);
      try {
        const auto scores = predictor(*row);
        if (scores.size() != row->items.size())
          throw ShapeError("predictor returned the wrong number of scores");
        const double sa = scores[*ia], sb = scores[*ib];
        if (!std::isfinite(sa) || !std::isfinite(sb))
          throw InvalidInput("predictor returned a non-finite score");
        if (sa == sb)
          credit += 0.5;
        else if ((sa > sb ? 1 : -1) == truth)
          credit += 1.0;
      } catch (const std::exception&) {
        ++out.failures;
        credit += 0.5;
      }
    }
  }
  out.accuracy = credit / static_cast<double>(out.comparisons);
  return out;
}

inline double flip_accuracy(const Predictor& predictor, std::span<const FlipPair> pairs) {
  return flip_accuracy_detailed(predictor, pairs).accuracy;
}

struct TTest {
  double t = 0.0;
  double p = 1.0;
  std::size_t dof = 0;
};

/// Two-sided paired t-test on differences. All-zero differences give
/// (t = 0, p = 1); constant nonzero differences throw DegenerateVariance.
/// The p-value is floored at the smallest normal double so it stays in (0, 1].
inline TTest paired_t_test(std::span<const double> diffs) {
  const std::size_t n = diffs.size();
  if (n < 2)
    throw InvalidInput("paired t-test needs at least 2 samples");
  double mean = 0.0;
  for (double d : diffs)
    mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double d : diffs)
    ss += (d - mean) * (d - mean);
  const double var = ss / static_cast<double>(n - 1);
  TTest out;
  out.dof = n - 1;
  if (var == 0.0) {
    if (mean == 0.0)
      return out;
    throw DegenerateVariance("all differences equal " + std::to_string(mean));
  }
  out.t = mean / std::sqrt(var / static_cast<double>(n));
  const boost::math::students_t dist(static_cast<double>(out.dof));
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
  out.p = std::clamp(p, std::numeric_limits<double>::min(), 1.0);
  return out;
}

// ---------------------------------------------------------------------------
// Models

/// Random shopper model: learns feature weights on the training rows, then
/// scores a row's items by the stationary distribution of its combined chain.
inline ModelSpec make_rsm_model(Schema schema, LearnerConfig cfg, std::string name = "rsm") {
  return {std::move(name), [schema, cfg](std::span<const LogRow> train) -> Predictor {
            const auto instances = instances_from_rows(train, schema);
            const FitResult fitted = fit(instances, cfg);
            const WeightVector w = fitted.weights;
            const double lambda = cfg.lambda;
            return [schema, w, lambda](const LogRow& row) {
              const auto ctx = build_context(row, schema);
              const Distribution p = stationary(combine(ctx->topologies, w, lambda));
              return std::vector<double>(p.probs().data(), p.probs().data() + p.size());
            };
          }};
}

inline ModelSpec make_least_squares_model(std::string name = "ls") {
  return {std::move(name), [](std::span<const LogRow> train) -> Predictor {
            const auto rows = feature_rows(train);
            const LinearModel model = fit_least_squares(rows);
            return [model](const LogRow& row) {
              std::vector<double> s;
              for (const auto& item : row.items)
                s.push_back(predict(model, baseline_features(item)));
              return s;
            };
          }};
}

inline ModelSpec make_constant_model(std::string name = "constant") {
  return {std::move(name), [](std::span<const LogRow> train) -> Predictor {
            const auto rows = feature_rows(train);
            ConstantScorer scorer(rows);
            return [scorer](const LogRow& row) {
              std::vector<double> s;
              for (const auto& item : row.items)
                s.push_back(scorer.score(row.query_id, item.item_id));
              return s;
            };
          }};
}

/// Reads the test row's own CTRs; an upper bound for sanity checks.
inline ModelSpec make_oracle_model(std::string name = "oracle") {
  return {std::move(name), [](std::span<const LogRow>) -> Predictor {
            return [](const LogRow& row) {
              std::vector<double> s;
              for (std::size_t i = 0; i < row.items.size(); ++i)
                s.push_back(row.ctr(i));
              return s;
            };
          }};
}

// ---------------------------------------------------------------------------
// Experiment

struct ExperimentOptions {
  std::size_t num_splits = 100;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  FlipThresholds thresholds;
  double lambda = 0.15;  // recorded in the report
};

struct ModelSummary {
  std::string name;
  std::vector<double> accuracies;  // per split
  double mean = 0.0;
  double stddev = 0.0;             // sample standard deviation over splits
  double ctr_mae = 0.0;            // diagnostic only: mean |score - CTR| on test rows
  std::size_t failures = 0;
};

struct PairComparison {
  std::string model_a;
  std::string model_b;
  double mean_difference = 0.0;  // a - b
  std::optional<TTest> test;     // empty when the differences are constant
};

struct ExperimentReport {
  std::vector<ModelSummary> models;
  std::vector<PairComparison> comparisons;
  double lambda = 0.15;
  std::uint64_t seed = 0;
  std::size_t num_splits = 0;
  double train_fraction = 0.8;
  std::size_t num_pairs = 0;
  std::vector<std::uint64_t> split_seeds;
};

/// Mines flip pairs from rows once, then for every split trains each model on
/// the same training rows and scores it on the same test pairs.
inline ExperimentReport run_experiment(std::span<const LogRow> rows, std::span<const ModelSpec> models,
                                       const ExperimentOptions& opts) {
  if (models.empty())
    throw ConfigError("no models to evaluate");
  if (opts.num_splits == 0)
    throw ConfigError("num_splits must be positive");
  const auto pairs = mine_flip_pairs(rows, opts.thresholds);
  if (pairs.size() < 2)
    throw SplitTooSmall("only " + std::to_string(pairs.size()) + " flip pairs in the data");

  ExperimentReport report;
  report.lambda = opts.lambda;
  report.seed = opts.seed;
  report.num_splits = opts.num_splits;
  report.train_fraction = opts.train_fraction;
  report.num_pairs = pairs.size();
  report.models.resize(models.size());
  std::vector<double> mae_sum(models.size(), 0.0);
  std::vector<std::size_t> mae_count(models.size(), 0);
  for (std::size_t m = 0; m < models.size(); ++m)
    report.models[m].name = models[m].name;

  for (std::size_t s = 0; s < opts.num_splits; ++s) {
    const std::uint64_t split_seed = derive_seed(opts.seed, "split", s);
    report.split_seeds.push_back(split_seed);
    const PairedSplit split = paired_split(pairs, opts.train_fraction, split_seed);
    for (std::size_t m = 0; m < models.size(); ++m) {
      const Predictor predictor = models[m].train(split.train_rows);
      const FlipAccuracy acc = flip_accuracy_detailed(predictor, split.test_pairs);
      report.models[m].accuracies.push_back(acc.accuracy);
      report.models[m].failures += acc.failures;
      for (const auto& pair : split.test_pairs) {
        for (const LogRow* row : {&pair.row_1, &pair.row_2}) {
          try {
            const auto scores = predictor(*row);
            for (std::size_t i = 0; i < row->items.size() && i < scores.size(); ++i) {
              mae_sum[m] += std::abs(scores[i] - row->ctr(i));
              ++mae_count[m];
            }
          } catch (const std::exception&) {
          }
        }
      }
    }
  }

  for (std::size_t m = 0; m < models.size(); ++m) {
    auto& summary = report.models[m];
    const auto n = static_cast<double>(summary.accuracies.size());
    for (double a : summary.accuracies)
      summary.mean += a;
    summary.mean /= n;
    double ss = 0.0;
    for (double a : summary.accuracies)
      ss += (a - summary.mean) * (a - summary.mean);
    summary.stddev = summary.accuracies.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    summary.ctr_mae = mae_count[m] ? mae_sum[m] / static_cast<double>(mae_count[m]) : 0.0;
  }

  for (std::size_t a = 0; a < models.size(); ++a) {
    for (std::size_t b = a + 1; b < models.size(); ++b) {
      PairComparison cmp;
      cmp.model_a = report.models[a].name;
      cmp.model_b = report.models[b].name;
      std::vector<double> diffs(opts.num_splits);
      for (std::size_t s = 0; s < opts.num_splits; ++s)
        diffs[s] = report.models[a].accuracies[s] - report.models[b].accuracies[s];
      cmp.mean_difference = report.models[a].mean - report.models[b].mean;
      if (diffs.size() >= 2) {
        try {
          cmp.test = paired_t_test(diffs);
        } catch (const DegenerateVariance&) {
          cmp.test.reset();
        }
      }
      report.comparisons.push_back(std::move(cmp));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report output

inline nlohmann::ordered_json report_to_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["lambda"] = r.lambda;
  j["seed"] = r.seed;
  j["num_splits"] = r.num_splits;
  j["train_fraction"] = r.train_fraction;
  j["num_flip_pairs"] = r.num_pairs;
  j["models"] = nlohmann::ordered_json::array();
  for (const auto& m : r.models)
    j["models"].push_back({{"name", m.name},
                           {"mean_accuracy", m.mean},
                           {"stddev", m.stddev},
                           {"predictor_failures", m.failures},
                           {"diagnostic_ctr_mae", m.ctr_mae},
                           {"split_accuracies", m.accuracies}});
  j["paired_t_tests"] = nlohmann::ordered_json::array();
  for (const auto& c : r.comparisons) {
    nlohmann::ordered_json e = {{"model_a", c.model_a},
                                {"model_b", c.model_b},
                                {"mean_difference", c.mean_difference}};
    if (c.test) {
      e["t"] = c.test->t;
      e["p_value"] = c.test->p;
      e["dof"] = c.test->dof;
      e["degenerate"] = false;
    } else {
      e["t"] = nullptr;
      e["p_value"] = nullptr;
      e["dof"] = nullptr;
      e["degenerate"] = true;
    }
    j["paired_t_tests"].push_back(std::move(e));
  }
  j["split_seeds"] = r.split_seeds;
  return j;
}

inline std::string report_to_table(const ExperimentReport& r) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "lambda=%g  splits=%zu  train_fraction=%g  flip_pairs=%zu  seed=%llu\n",
                r.lambda, r.num_splits, r.train_fraction, r.num_pairs,
                static_cast<unsigned long long>(r.seed));
  out << buf;
  std::snprintf(buf, sizeof buf, "%-12s %10s %10s %10s %10s %12s\n", "model", "mean_acc", "stddev",
                "min", "max", "ctr_mae(*)");
  out << buf;
  for (const auto& m : r.models) {
    const auto [lo, hi] = std::minmax_element(m.accuracies.begin(), m.accuracies.end());
    std::snprintf(buf, sizeof buf, "%-12s %10.4f %10.4f %10.4f %10.4f %12.5f\n", m.name.c_str(), m.mean,
                  m.stddev, *lo, *hi, m.ctr_mae);
    out << buf;
  }
  out << "(*) diagnostic only, not a flip metric\n";
  if (!r.comparisons.empty()) {
    std::snprintf(buf, sizeof buf, "%-12s %-12s %10s %12s %12s\n", "model_a", "model_b", "mean_diff",
                  "t", "p_value");
    out << buf;
    for (const auto& c : r.comparisons) {
      if (c.test)
        std::snprintf(buf, sizeof buf, "%-12s %-12s %10.4f %12.4f %12.4g\n", c.model_a.c_str(),
                      c.model_b.c_str(), c.mean_difference, c.test->t, c.test->p);
      else
        std::snprintf(buf, sizeof buf, "%-12s %-12s %10.4f %12s %12s\n", c.model_a.c_str(),
                      c.model_b.c_str(), c.mean_difference, "degenerate", "-");
      out << buf;
    }
  }
  return out.str();
}

/// One line per (split, model) with that split's accuracy.
inline std::string report_to_csv(const ExperimentReport& r, const std::string& section = "") {
  std::ostringstream out;
  for (const auto& m : r.models)
    for (std::size_t s = 0; s < m.accuracies.size(); ++s)
      out << (section.empty() ? "" : section + ",") << s << ',' << m.name << ','
          << detail::format_double(m.accuracies[s]) << '\n';
  return out.str();
}

} // namespace rsm

#endif // RSM_EVAL_HPP

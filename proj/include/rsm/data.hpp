#ifndef RSM_DATA_HPP
#define RSM_DATA_HPP

// Click-log datasets: schema, CSV/JSON serialization, preference-flip mining,
// paired train/test splitting and the synthetic generator.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsm/errors.hpp"
#include "rsm/learner.hpp"
#include "rsm/markov.hpp"
#include "rsm/rng.hpp"
#include "rsm/topology.hpp"

namespace rsm {

inline constexpr const char* kPositionFeature = "position";

/// Feature columns of a dataset. Position always has its own column; it is
/// also turned into a (lower-is-better) topology when include_position is set.
struct Schema {
  std::vector<FeatureSpec> features;
  bool include_position = true;
  std::optional<std::size_t> context_size;  // unset: any size >= 2

  void validate() const {
    std::set<std::string> seen;
    for (const auto& f : features) {
      if (f.name.empty())
        throw SchemaError("feature with empty name");
      if (f.name == kPositionFeature)
        throw SchemaError("'position' is a fixed column, not a schema feature");
      if (!seen.insert(f.name).second)
        throw SchemaError("duplicate feature '" + f.name + "'");
    }
    if (features.empty() && !include_position)
      throw SchemaError("schema has no features");
    if (context_size && *context_size < 2)
      throw SchemaError("context_size must be at least 2");
  }

  /// Number of topologies per context.
  std::size_t num_topologies() const { return features.size() + (include_position ? 1 : 0); }

  std::vector<std::string> topology_names() const {
    std::vector<std::string> names;
    for (const auto& f : features)
      names.push_back(f.name);
    if (include_position)
      names.emplace_back(kPositionFeature);
    return names;
  }
};

struct ItemObservation {
  std::string item_id;
  double position = 0.0;
  std::uint64_t clicks = 0;
  std::vector<double> features;  // schema order
};

/// All items displayed together for one query, with their clicks.
struct LogRow {
  std::string query_id;
  std::string context_id;
  std::vector<ItemObservation> items;
  // Optional pre-encoded topologies (JSON datasets); when empty they are
  // built from the feature values.
  std::vector<Topology> topologies;

  std::uint64_t total_clicks() const {
    std::uint64_t s = 0;
    for (const auto& it : items)
      s += it.clicks;
    return s;
  }

  /// Within-context click share; zero when the context has no clicks.
  double ctr(std::size_t i) const {
    const auto total = total_clicks();
    return total == 0 ? 0.0 : static_cast<double>(items[i].clicks) / static_cast<double>(total);
  }

  std::optional<std::size_t> index_of(const std::string& item_id) const {
    for (std::size_t i = 0; i < items.size(); ++i)
      if (items[i].item_id == item_id)
        return i;
    return std::nullopt;
  }

  std::vector<std::string> item_ids() const {
    std::vector<std::string> ids;
    ids.reserve(items.size());
    for (const auto& it : items)
      ids.push_back(it.item_id);
    return ids;
  }
};

// ---------------------------------------------------------------------------
// Schema <-> JSON

inline std::string to_string(Direction d) {
  return d == Direction::HigherIsBetter ? "higher_is_better" : "lower_is_better";
}

inline std::string to_string(FeatureKind k) {
  return k == FeatureKind::Numeric ? "numeric" : "categorical";
}

inline nlohmann::ordered_json schema_to_json(const Schema& schema) {
  nlohmann::ordered_json j;
  j["features"] = nlohmann::ordered_json::array();
  for (const auto& f : schema.features)
    j["features"].push_back(
      {{"name", f.name}, {"direction", to_string(f.direction)}, {"kind", to_string(f.kind)}});
  j["include_position"] = schema.include_position;
  if (schema.context_size)
    j["context_size"] = *schema.context_size;
  else
    j["context_size"] = nullptr;
  return j;
}

inline Schema schema_from_json(const nlohmann::json& j) {
  Schema s;
  try {
    for (const auto& f : j.at("features")) {
      FeatureSpec spec;
      spec.name = f.at("name").get<std::string>();
      const std::string dir = f.value("direction", "higher_is_better");
      if (dir == "higher_is_better")
        spec.direction = Direction::HigherIsBetter;
      else if (dir == "lower_is_better")
        spec.direction = Direction::LowerIsBetter;
      else
        throw SchemaError("unknown direction '" + dir + "'");
      const std::string kind = f.value("kind", "numeric");
      if (kind == "numeric")
        spec.kind = FeatureKind::Numeric;
      else if (kind == "categorical")
        spec.kind = FeatureKind::Categorical;
      else
        throw SchemaError("unknown kind '" + kind + "'");
      s.features.push_back(std::move(spec));
    }
    s.include_position = j.value("include_position", true);
    if (j.contains("context_size") && !j["context_size"].is_null())
      s.context_size = j["context_size"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema: ") + e.what());
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty())
    return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> parse_count(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    return std::nullopt;
  return v;
}

} // namespace detail

inline constexpr const char* kFixedColumns[] = {"query_id", "context_id", "item_id", "position",
                                                "clicks"};

struct LoadResult {
  std::vector<LogRow> rows;
  std::vector<ParseError> errors;  // contexts with a bad line are dropped whole
};

/// Parses one CSV line per (query, context, item). Contexts are rebuilt by
/// grouping on (query_id, context_id) in order of first appearance.
inline LoadResult read_csv(std::istream& in, const Schema& schema) {
  schema.validate();
  std::string line;
  if (!std::getline(in, line))
    throw SchemaError("missing header row");
  const auto header = detail::split_csv_line(line);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i)
    col.emplace(header[i], i);
  auto column = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end())
      throw SchemaError("missing column '" + name + "'");
    return it->second;
  };
  std::vector<std::size_t> fixed;
  for (const char* name : kFixedColumns)
    fixed.push_back(column(name));
  std::vector<std::size_t> feature_cols;
  for (const auto& f : schema.features)
    feature_cols.push_back(column(f.name));

  LoadResult result;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  std::vector<std::size_t> first_line;
  std::vector<bool> bad;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r")
      continue;
    const auto cells = detail::split_csv_line(line);
    auto fail = [&](const std::string& why, std::optional<std::size_t> ctx) {
      result.errors.emplace_back(line_no, why);
      if (ctx)
        bad[*ctx] = true;
    };
    if (cells.size() != header.size()) {
      fail("expected " + std::to_string(header.size()) + " fields, got " +
             std::to_string(cells.size()),
           std::nullopt);
      // The row key may still be readable; drop that context too.
      if (cells.size() > std::max(fixed[0], fixed[1])) {
        auto it = slot.find({cells[fixed[0]], cells[fixed[1]]});
        if (it != slot.end())
          bad[it->second] = true;
      }
      continue;
    }
    const auto key = std::make_pair(cells[fixed[0]], cells[fixed[1]]);
    auto [it, inserted] = slot.emplace(key, result.rows.size());
    if (inserted) {
      LogRow row;
      row.query_id = key.first;
      row.context_id = key.second;
      result.rows.push_back(std::move(row));
      first_line.push_back(line_no);
      bad.push_back(false);
    }
    const std::size_t ctx = it->second;

    ItemObservation item;
    item.item_id = cells[fixed[2]];
    const auto pos = detail::parse_double(cells[fixed[3]]);
    const auto clicks = detail::parse_count(cells[fixed[4]]);
    if (!pos) {
      fail("non-numeric position '" + cells[fixed[3]] + "'", ctx);
      continue;
    }
    if (!clicks) {
      fail("clicks must be a nonnegative integer, got '" + cells[fixed[4]] + "'", ctx);
      continue;
    }
    item.position = *pos;
    item.clicks = *clicks;
    bool ok = true;
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const auto v = detail::parse_double(cells[feature_cols[f]]);
      if (!v) {
        fail("non-numeric value '" + cells[feature_cols[f]] + "' for feature '" +
               schema.features[f].name + "'",
             ctx);
        ok = false;
        break;
      }
      item.features.push_back(*v);
    }
    if (!ok)
      continue;
    if (result.rows[ctx].index_of(item.item_id)) {
      fail("item '" + item.item_id + "' repeated in context", ctx);
      continue;
    }
    result.rows[ctx].items.push_back(std::move(item));
  }

  std::vector<LogRow> kept;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    if (bad[i])
      continue;
    const std::size_t n = result.rows[i].items.size();
    const bool size_ok = schema.context_size ? n == *schema.context_size : n >= 2;
    if (!size_ok) {
      result.errors.emplace_back(first_line[i], "context '" + result.rows[i].context_id + "' has " +
                                                  std::to_string(n) + " items");
      continue;
    }
    kept.push_back(std::move(result.rows[i]));
  }
  result.rows = std::move(kept);
  std::stable_sort(result.errors.begin(), result.errors.end(),
                   [](const ParseError& a, const ParseError& b) { return a.line() < b.line(); });
  return result;
}

inline LoadResult load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open '" + path + "'");
  return read_csv(in, schema);
}

inline void write_csv(std::ostream& out, std::span<const LogRow> rows, const Schema& schema) {
  out << "query_id,context_id,item_id,position,clicks";
  for (const auto& f : schema.features)
    out << ',' << detail::csv_field(f.name);
  out << '\n';
  for (const auto& row : rows) {
    for (const auto& item : row.items) {
      if (item.features.size() != schema.features.size())
        throw ShapeError("item '" + item.item_id + "' has the wrong number of features");
      out << detail::csv_field(row.query_id) << ',' << detail::csv_field(row.context_id) << ','
          << detail::csv_field(item.item_id) << ',' << detail::format_double(item.position) << ','
          << item.clicks;
      for (double v : item.features)
        out << ',' << detail::format_double(v);
      out << '\n';
    }
  }
}

inline void save_csv(const std::string& path, std::span<const LogRow> rows, const Schema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write '" + path + "'");
  write_csv(out, rows, schema);
  if (!out)
    throw IoError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// JSON datasets: same schema, optionally with explicit topologies per row.

inline nlohmann::ordered_json dataset_to_json(std::span<const LogRow> rows, const Schema& schema) {
  nlohmann::ordered_json j;
  j["schema"] = schema_to_json(schema);
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r;
    r["query_id"] = row.query_id;
    r["context_id"] = row.context_id;
    r["items"] = nlohmann::ordered_json::array();
    for (const auto& item : row.items)
      r["items"].push_back({{"item_id", item.item_id},
                            {"position", item.position},
                            {"clicks", item.clicks},
                            {"features", item.features}});
    if (!row.topologies.empty()) {
      r["topologies"] = nlohmann::ordered_json::array();
      for (const auto& t : row.topologies) {
        nlohmann::ordered_json m = nlohmann::ordered_json::array();
        for (Index i = 0; i < t.size(); ++i) {
          std::vector<double> rr(static_cast<std::size_t>(t.size()));
          for (Index c = 0; c < t.size(); ++c)
            rr[static_cast<std::size_t>(c)] = t.matrix()(i, c);
          m.push_back(rr);
        }
        r["topologies"].push_back({{"feature", t.feature()}, {"matrix", m}});
      }
    }
    j["rows"].push_back(std::move(r));
  }
  return j;
}

inline std::pair<std::vector<LogRow>, Schema> dataset_from_json(const nlohmann::json& j) {
  Schema schema = schema_from_json(j.at("schema"));
  std::vector<LogRow> rows;
  try {
    for (const auto& r : j.at("rows")) {
      LogRow row;
      row.query_id = r.at("query_id").get<std::string>();
      row.context_id = r.at("context_id").get<std::string>();
      for (const auto& it : r.at("items")) {
        ItemObservation item;
        item.item_id = it.at("item_id").get<std::string>();
        item.position = it.at("position").get<double>();
        item.clicks = it.at("clicks").get<std::uint64_t>();
        item.features = it.at("features").get<std::vector<double>>();
        if (item.features.size() != schema.features.size())
          throw SchemaError("item '" + item.item_id + "' has the wrong number of features");
        row.items.push_back(std::move(item));
      }
      if (r.contains("topologies")) {
        const auto ids = row.item_ids();
        for (const auto& t : r["topologies"]) {
          const auto raw = t.at("matrix").get<std::vector<std::vector<double>>>();
          Matrix m(static_cast<Index>(raw.size()), static_cast<Index>(raw.size()));
          for (std::size_t a = 0; a < raw.size(); ++a) {
            if (raw[a].size() != raw.size())
              throw SchemaError("topology matrix is not square");
            for (std::size_t b = 0; b < raw.size(); ++b)
              m(static_cast<Index>(a), static_cast<Index>(b)) = raw[a][b];
          }
          row.topologies.emplace_back(t.at("feature").get<std::string>(),
                                      StochasticMatrix(std::move(m)), ids);
        }
        if (row.topologies.size() != schema.num_topologies())
          throw SchemaError("row '" + row.context_id + "' has " +
                            std::to_string(row.topologies.size()) + " topologies, schema needs " +
                            std::to_string(schema.num_topologies()));
      }
      rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed dataset: ") + e.what());
  }
  return {std::move(rows), std::move(schema)};
}

// ---------------------------------------------------------------------------
// From rows to learner input

/// Topologies for one row: pre-encoded ones if present, otherwise one rank
/// topology per schema feature (plus position when enabled).
inline std::shared_ptr<const Context> build_context(const LogRow& row, const Schema& schema) {
  auto ctx = std::make_shared<Context>();
  ctx->query_id = row.query_id;
  ctx->context_id = row.context_id;
  ctx->item_ids = row.item_ids();
  if (!row.topologies.empty()) {
    ctx->topologies = row.topologies;
    return ctx;
  }
  const std::size_t n = row.items.size();
  std::vector<double> values(n);
  for (std::size_t f = 0; f < schema.features.size(); ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      if (row.items[i].features.size() != schema.features.size())
        throw ShapeError("item '" + row.items[i].item_id + "' has the wrong number of features");
      values[i] = row.items[i].features[f];
    }
    ctx->topologies.push_back(encode_rank_topology(schema.features[f].name, values,
                                                   schema.features[f].direction, ctx->item_ids));
  }
  if (schema.include_position) {
    for (std::size_t i = 0; i < n; ++i)
      values[i] = row.items[i].position;
    ctx->topologies.push_back(
      encode_rank_topology(kPositionFeature, values, Direction::LowerIsBetter, ctx->item_ids));
  }
  return ctx;
}

/// One instance per item, labelled with its within-context CTR. Rows without
/// clicks carry no label and are skipped.
inline std::vector<TrainingInstance> instances_from_rows(std::span<const LogRow> rows,
                                                         const Schema& schema) {
  std::vector<TrainingInstance> out;
  for (const auto& row : rows) {
    if (row.total_clicks() == 0)
      continue;
    auto ctx = build_context(row, schema);
    for (std::size_t u = 0; u < row.items.size(); ++u)
      out.push_back({ctx, u, row.ctr(u)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flip pairs

struct FlipThresholds {
  std::uint64_t min_total_clicks = 5;  // strict: total > min_total_clicks
  std::uint64_t min_click_diff = 2;    // |clicks_A - clicks_B| >= min_click_diff
};

/// Two contexts of one query in which items A and B are preferred oppositely.
/// row_1 has A clicked more than B, row_2 has B clicked more than A.
struct FlipPair {
  LogRow row_1;
  LogRow row_2;
  std::string item_a;
  std::string item_b;
  double strength = 0.0;  // |CTR_A - CTR_B| summed over both rows

  std::tuple<std::string, std::string, std::string, std::string, std::string> key() const {
    return {row_1.query_id, item_a, item_b, row_1.context_id, row_2.context_id};
  }
};

/**
 * For every query and item pair (A, B), finds contexts with more than
 * min_total_clicks clicks in which A and B differ by at least min_click_diff.
 * If both orientations occur, the strongest context of each orientation (by
 * CTR gap) forms the pair. Output is ordered by query, then A, then B.
 */
inline std::vector<FlipPair> mine_flip_pairs(std::span<const LogRow> rows,
                                             const FlipThresholds& thresholds = {}) {
  std::map<std::string, std::vector<std::size_t>> by_query;
  for (std::size_t i = 0; i < rows.size(); ++i)
    by_query[rows[i].query_id].push_back(i);

  std::vector<FlipPair> out;
  for (const auto& [query, members] : by_query) {
    std::set<std::string> items;
    for (std::size_t r : members)
      for (const auto& it : rows[r].items)
        items.insert(it.item_id);
    const std::vector<std::string> sorted(items.begin(), items.end());

    for (std::size_t a = 0; a < sorted.size(); ++a) {
      for (std::size_t b = a + 1; b < sorted.size(); ++b) {
        std::optional<std::size_t> best_ab, best_ba;
        double gap_ab = -1.0, gap_ba = -1.0;
        for (std::size_t r : members) {
          const LogRow& row = rows[r];
          const auto ia = row.index_of(sorted[a]);
          const auto ib = row.index_of(sorted[b]);
          if (!ia || !ib || row.total_clicks() <= thresholds.min_total_clicks)
            continue;
          const auto ca = row.items[*ia].clicks, cb = row.items[*ib].clicks;
          const std::uint64_t diff = ca > cb ? ca - cb : cb - ca;
          if (diff < thresholds.min_click_diff || diff == 0)
            continue;
          const double gap = std::abs(row.ctr(*ia) - row.ctr(*ib));
          if (ca > cb && gap > gap_ab) {
            gap_ab = gap;
            best_ab = r;
          } else if (cb > ca && gap > gap_ba) {
            gap_ba = gap;
            best_ba = r;
          }
        }
        if (best_ab && best_ba)
          out.push_back({rows[*best_ab], rows[*best_ba], sorted[a], sorted[b], gap_ab + gap_ba});
      }
    }
  }
  return out;
}

struct PairedSplit {
  std::vector<FlipPair> train_pairs;
  std::vector<FlipPair> test_pairs;
  std::vector<LogRow> train_rows;  // both rows of every training pair, deduplicated
};

/// Splits at pair granularity so a pair's two rows never straddle train and
/// test. Pairs are sorted by key before the seeded shuffle, so the split does
/// not depend on input order.
inline PairedSplit paired_split(std::span<const FlipPair> pairs, double train_fraction,
                                std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0, 1)");
  if (pairs.size() < 2)
    throw SplitTooSmall("need at least 2 flip pairs, got " + std::to_string(pairs.size()));

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pairs[a].key() < pairs[b].key(); });
  Rng rng(seed);
  shuffle(order, rng);

  const auto n = pairs.size();
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  PairedSplit split;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const FlipPair& p = pairs[order[i]];
    if (i < n_train) {
      split.train_pairs.push_back(p);
      for (const LogRow* row : {&p.row_1, &p.row_2})
        if (seen.insert({row->query_id, row->context_id}).second)
          split.train_rows.push_back(*row);
    } else {
      split.test_pairs.push_back(p);
    }
  }
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticSpec {
  std::size_t k = 3;                  // features
  std::size_t n = 5;                  // items per context
  std::size_t num_queries = 40;
  std::size_t items_per_query = 0;    // catalog per query; 0 means n
  std::size_t contexts_per_query = 1;
  WeightVector weights = WeightVector::uniform(3);  // reporting form
  double lambda = 0.15;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> clicks_per_context;  // multinomial noise when set

  void validate() const {
    if (k == 0 || weights.size() != k)
      throw ConfigError("synthetic weights must have k entries");
    if (weights.normalization() != WeightVector::Normalization::SumsToOne)
      throw ConfigError("synthetic weights must be in reporting form");
    if (n < 2)
      throw ConfigError("contexts need at least 2 items");
    if (items_per_query != 0 && items_per_query < n)
      throw ConfigError("items_per_query must be at least n");
    if (num_queries == 0 || contexts_per_query == 0)
      throw ConfigError("need at least one query and one context per query");
    if (!(lambda > 0.0 && lambda < 1.0))
      throw ConfigError("lambda must lie in (0, 1)");
  }
};

struct SyntheticDataset {
  Schema schema;
  std::vector<LogRow> rows;                 // clicks are zero without noise
  std::vector<std::vector<double>> labels;  // p* per row, item order
  std::vector<TrainingInstance> instances;  // one per item, labelled with p*
};

inline Schema synthetic_schema(std::size_t k, std::size_t n) {
  Schema s;
  for (std::size_t i = 0; i < k; ++i)
    s.features.push_back({"f" + std::to_string(i + 1), Direction::HigherIsBetter, FeatureKind::Numeric});
  s.include_position = false;
  s.context_size = n;
  return s;
}

/**
 * Draws a catalog of items per query with k i.i.d. uniform feature values,
 * shows random n-item subsets of it in random order, and labels each item with
 * its stationary probability under the true weights. With clicks_per_context
 * set, click counts are multinomial draws from those probabilities.
 */
inline SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t catalog = spec.items_per_query == 0 ? spec.n : spec.items_per_query;
  SyntheticDataset data;
  data.schema = synthetic_schema(spec.k, spec.n);
  Rng rng(derive_seed(spec.seed, "synth"));

  for (std::size_t q = 0; q < spec.num_queries; ++q) {
    const std::string query = "q" + std::to_string(q);
    std::vector<std::vector<double>> features(catalog, std::vector<double>(spec.k));
    for (auto& item : features)
      for (double& v : item)
        v = uniform01(rng);

    for (std::size_t c = 0; c < spec.contexts_per_query; ++c) {
      std::vector<std::size_t> shown(catalog);
      for (std::size_t i = 0; i < catalog; ++i)
        shown[i] = i;
      shuffle(shown, rng);
      shown.resize(spec.n);

      LogRow row;
      row.query_id = query;
      row.context_id = "c" + std::to_string(c);
      for (std::size_t slot = 0; slot < spec.n; ++slot) {
        ItemObservation item;
        item.item_id = query + "_i" + std::to_string(shown[slot]);
        item.position = static_cast<double>(slot + 1);
        item.features = features[shown[slot]];
        row.items.push_back(std::move(item));
      }
      auto ctx = build_context(row, data.schema);
      const Distribution p = stationary(combine(ctx->topologies, spec.weights, spec.lambda));
      std::vector<double> label(p.probs().data(), p.probs().data() + p.size());

      if (spec.clicks_per_context) {
        const auto counts = multinomial(rng, label, *spec.clicks_per_context);
        for (std::size_t i = 0; i < spec.n; ++i)
          row.items[i].clicks = counts[i];
      }
      for (std::size_t u = 0; u < spec.n; ++u)
        data.instances.push_back({ctx, u, label[u]});
      data.labels.push_back(std::move(label));
      data.rows.push_back(std::move(row));
    }
  }
  return data;
}

} // namespace rsm

#endif // RSM_DATA_HPP

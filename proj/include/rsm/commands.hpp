#ifndef RSM_COMMANDS_HPP
#define RSM_COMMANDS_HPP

// Workflows behind the `rsm` command-line tool. Each command takes a plain
// options struct so it can also be driven in-process.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsm/baselines.hpp"
#include "rsm/data.hpp"
#include "rsm/errors.hpp"
#include "rsm/eval.hpp"
#include "rsm/learner.hpp"
#include "rsm/parallel.hpp"
#include "rsm/shredder.hpp"

namespace rsm::cli {

namespace fs = std::filesystem;

inline constexpr const char* kManifestFormat = "rsm-synthetic/1";

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumeric = 4 };

inline int exit_code(ErrorCategory c) {
  switch (c) {
  case ErrorCategory::Config:
    return kConfig;
  case ErrorCategory::Data:
    return kData;
  case ErrorCategory::Numeric:
    return kNumeric;
  case ErrorCategory::Internal:
    break;
  }
  return kFailure;
}

inline void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write '" + path.string() + "'");
  out << contents;
  if (!out)
    throw IoError("write to '" + path.string() + "' failed");
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline fs::path prepare_out_dir(const std::string& dir) {
  if (dir.empty())
    throw ConfigError("--out-dir is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

// ---------------------------------------------------------------------------
// Dataset loading shared by train and eval

struct DatasetSource {
  std::string manifest;  // synthetic manifest (schema + data + labels)
  std::string data;      // .csv (needs schema) or .json (embeds schema)
  std::string schema;
};

struct LoadedDataset {
  Schema schema;
  std::vector<LogRow> rows;
  // (query, context, item) -> target stationary probability, when known.
  std::map<std::tuple<std::string, std::string, std::string>, double> labels;
  std::optional<nlohmann::json> manifest;
  std::size_t skipped_lines = 0;
};

inline LoadedDataset load_dataset(const DatasetSource& src) {
  LoadedDataset out;
  fs::path data_path, labels_path;
  if (!src.manifest.empty()) {
    const fs::path manifest_path(src.manifest);
    out.manifest = read_json(manifest_path);
    const auto& m = *out.manifest;
    try {
      out.schema = schema_from_json(m.at("schema"));
      data_path = manifest_path.parent_path() / m.at("data").get<std::string>();
      if (m.contains("labels") && !m["labels"].is_null())
        labels_path = manifest_path.parent_path() / m["labels"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("malformed manifest: ") + e.what());
    }
  } else if (!src.data.empty()) {
    data_path = src.data;
    if (data_path.extension() == ".json") {
      auto [rows, schema] = dataset_from_json(read_json(data_path));
      out.rows = std::move(rows);
      out.schema = std::move(schema);
      return out;
    }
    if (src.schema.empty())
      throw ConfigError("a CSV dataset needs --schema");
    out.schema = schema_from_json(read_json(src.schema));
  } else {
    throw ConfigError("give --manifest or --data");
  }

  LoadResult loaded = load_csv(data_path.string(), out.schema);
  for (const auto& e : loaded.errors)
    std::cerr << "warning: " << data_path.string() << ": " << e.what() << '\n';
  out.skipped_lines = loaded.errors.size();
  out.rows = std::move(loaded.rows);

  if (!labels_path.empty()) {
    std::ifstream in(labels_path);
    if (!in)
      throw IoError("cannot open '" + labels_path.string() + "'");
    std::string line;
    std::getline(in, line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty())
        continue;
      const auto cells = detail::split_csv_line(line);
      const auto v = cells.size() == 4 ? detail::parse_double(cells[3]) : std::nullopt;
      if (!v)
        throw ParseError(line_no, "bad label line in '" + labels_path.string() + "'");
      out.labels[{cells[0], cells[1], cells[2]}] = *v;
    }
  }
  return out;
}

/// Labels from the label file when present, otherwise within-context CTRs.
inline std::vector<TrainingInstance> training_instances(const LoadedDataset& ds) {
  if (ds.labels.empty())
    return instances_from_rows(ds.rows, ds.schema);
  std::vector<TrainingInstance> out;
  for (const auto& row : ds.rows) {
    auto ctx = build_context(row, ds.schema);
    for (std::size_t u = 0; u < row.items.size(); ++u) {
      auto it = ds.labels.find({row.query_id, row.context_id, row.items[u].item_id});
      if (it == ds.labels.end())
        throw SchemaError("no label for item '" + row.items[u].item_id + "' in context '" +
                          row.context_id + "'");
      out.push_back({ctx, u, it->second});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  SyntheticSpec spec;
  std::string out_dir;
};

inline nlohmann::ordered_json synth_manifest(const SynthOptions& o) {
  nlohmann::ordered_json m;
  m["format"] = kManifestFormat;
  m["seed"] = o.spec.seed;
  m["lambda"] = o.spec.lambda;
  m["k"] = o.spec.k;
  m["n"] = o.spec.n;
  m["num_queries"] = o.spec.num_queries;
  m["items_per_query"] = o.spec.items_per_query == 0 ? o.spec.n : o.spec.items_per_query;
  m["contexts_per_query"] = o.spec.contexts_per_query;
  if (o.spec.clicks_per_context)
    m["clicks_per_context"] = *o.spec.clicks_per_context;
  else
    m["clicks_per_context"] = nullptr;
  m["weights"] = o.spec.weights.values();
  m["schema"] = schema_to_json(synthetic_schema(o.spec.k, o.spec.n));
  m["data"] = "data.csv";
  m["labels"] = "labels.csv";
  return m;
}

inline void cmd_synth(const SynthOptions& o) {
  const fs::path dir = prepare_out_dir(o.out_dir);
  const SyntheticDataset data = generate_synthetic(o.spec);
  save_csv((dir / "data.csv").string(), data.rows, data.schema);
  std::ostringstream labels;
  labels << "query_id,context_id,item_id,p_star\n";
  for (std::size_t r = 0; r < data.rows.size(); ++r)
    for (std::size_t i = 0; i < data.rows[r].items.size(); ++i)
      labels << detail::csv_field(data.rows[r].query_id) << ','
             << detail::csv_field(data.rows[r].context_id) << ','
             << detail::csv_field(data.rows[r].items[i].item_id) << ','
             << detail::format_double(data.labels[r][i]) << '\n';
  write_file(dir / "labels.csv", labels.str());
  write_file(dir / "manifest.json", synth_manifest(o).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  DatasetSource source;
  LearnerConfig learner;
  bool grid = false;
  double grid_step = 0.05;
  std::string out_dir;
};

struct TrainOutput {
  WeightVector weights = WeightVector::uniform(1);
  std::optional<FitResult> fit;
  double err_s = 0.0;
};

inline TrainOutput cmd_train(const TrainOptions& o) {
  const fs::path dir = prepare_out_dir(o.out_dir);
  o.learner.validate();
  const LoadedDataset ds = load_dataset(o.source);
  const auto instances = training_instances(ds);
  if (instances.empty())
    throw SchemaError("dataset yields no labelled instances");

  TrainOutput out;
  nlohmann::ordered_json j;
  j["method"] = o.grid ? "grid" : "iterative";
  j["features"] = ds.schema.topology_names();
  j["lambda"] = o.learner.lambda;
  if (o.grid) {
    out.weights = grid_search(instances, o.grid_step, o.learner.lambda);
    j["grid_step"] = o.grid_step;
  } else {
    out.fit = fit(instances, o.learner);
    out.weights = out.fit->weights;
    std::ostringstream log;
    log << "iteration,mse,err_s\n";
    for (std::size_t i = 0; i < out.fit->per_iteration_loss.size(); ++i)
      log << i << ',' << detail::format_double(out.fit->per_iteration_loss[i]) << ','
          << detail::format_double(out.fit->per_iteration_err_s[i]) << '\n';
    write_file(dir / "loss.csv", log.str());
  }
  out.err_s = sample_error(instances, out.weights, o.learner.lambda);
  j["weights"] = out.weights.values();
  j["err_s"] = out.err_s;
  if (out.fit) {
    j["iterations"] = out.fit->iterations;
    j["converged"] = out.fit->converged;
    if (std::isfinite(out.fit->final_step_norm))
      j["final_step_norm"] = out.fit->final_step_norm;
    else
      j["final_step_norm"] = nullptr;
  }
  write_file(dir / "weights.json", j.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  DatasetSource source;
  LearnerConfig learner;
  std::vector<std::string> models = {"rsm", "ls", "constant"};
  std::vector<double> lambda_sweep;  // empty: just learner.lambda
  ExperimentOptions experiment;
  std::string out_dir;
  bool log_timings = true;
};

inline ModelSpec make_model(const std::string& name, const Schema& schema, const LearnerConfig& cfg) {
  if (name == "rsm")
    return make_rsm_model(schema, cfg);
  if (name == "ls")
    return make_least_squares_model();
  if (name == "constant")
    return make_constant_model();
  if (name == "oracle")
    return make_oracle_model();
  throw ConfigError("unknown model '" + name + "' (expected rsm, ls, constant, oracle)");
}

inline std::vector<ExperimentReport> cmd_eval(const EvalOptions& o) {
  const fs::path dir = prepare_out_dir(o.out_dir);
  o.learner.validate();
  if (o.models.empty())
    throw ConfigError("--models is empty");
  const LoadedDataset ds = load_dataset(o.source);

  std::vector<double> lambdas = o.lambda_sweep;
  if (lambdas.empty())
    lambdas.push_back(o.learner.lambda);

  std::vector<ExperimentReport> reports;
  nlohmann::ordered_json json;
  json["sections"] = nlohmann::ordered_json::array();
  std::string table, csv = "lambda,split,model,accuracy\n";
  for (double lambda : lambdas) {
    LearnerConfig cfg = o.learner;
    cfg.lambda = lambda;
    cfg.eta = std::min(cfg.eta, 1.0 - lambda);
    cfg.validate();
    std::vector<ModelSpec> models;
    for (const auto& name : o.models)
      models.push_back(make_model(name, ds.schema, cfg));
    ExperimentOptions opts = o.experiment;
    opts.lambda = lambda;

    const auto start = std::chrono::steady_clock::now();
    reports.push_back(run_experiment(ds.rows, models, opts));
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    if (o.log_timings)
      std::cerr << "eval lambda=" << lambda << ": " << took.count() << " s\n";

    json["sections"].push_back(report_to_json(reports.back()));
    table += report_to_table(reports.back()) + "\n";
    csv += report_to_csv(reports.back(), detail::format_double(lambda));
  }
  write_file(dir / "report.json", json.dump(2) + "\n");
  write_file(dir / "report.txt", table);
  write_file(dir / "splits.csv", csv);
  return reports;
}

// ---------------------------------------------------------------------------
// demo-shredder

inline shredder::Outcome cmd_demo_shredder(std::ostream& out) {
  shredder::print_report(out);
  return shredder::documented_configuration();
}

} // namespace rsm::cli

#endif // RSM_COMMANDS_HPP

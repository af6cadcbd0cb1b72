// rsm: synthetic data, training, flip-prediction evaluation and the shredder
// demo for the random shopper model.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rsm/commands.hpp"

namespace {

std::vector<double> parse_list(const std::string& raw, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto v = rsm::detail::parse_double(cell);
    if (!v)
      throw rsm::ConfigError(std::string(flag) + ": '" + cell + "' is not a number");
    out.push_back(*v);
  }
  if (out.empty())
    throw rsm::ConfigError(std::string(flag) + " is empty");
  return out;
}

std::vector<std::string> split_names(const std::string& raw) {
  std::vector<std::string> out;
  std::stringstream ss(raw);
  std::string cell;
  while (std::getline(ss, cell, ','))
    if (!cell.empty())
      out.push_back(cell);
  return out;
}

struct LearnerFlags {
  double lambda = 0.15;
  double eta = 0.05;
  double halt_eps = 1e-6;
  std::size_t max_iters = 500;

  void add(CLI::App* app) {
    app->add_option("--lambda", lambda, "Restart probability")->capture_default_str();
    app->add_option("--eta", eta, "Per-coordinate step bound")->capture_default_str();
    app->add_option("--halt-eps", halt_eps, "Halt when the step's max-norm is below this")
      ->capture_default_str();
    app->add_option("--max-iters", max_iters, "Iteration cap")->capture_default_str();
  }

  rsm::LearnerConfig config() const {
    rsm::LearnerConfig cfg;
    cfg.lambda = lambda;
    cfg.eta = eta;
    cfg.halt_eps = halt_eps;
    cfg.max_iters = max_iters;
    cfg.threads = rsm::threads_from_env();
    return cfg;
  }
};

void add_source(CLI::App* app, rsm::cli::DatasetSource& src) {
  app->add_option("--manifest", src.manifest, "Synthetic manifest.json");
  app->add_option("--data", src.data, "Dataset (.csv with --schema, or .json)");
  app->add_option("--schema", src.schema, "Schema JSON for a CSV dataset");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random shopper model: context-dependent ranking by Markov chain features"};
  app.require_subcommand(1);

  // synth
  rsm::cli::SynthOptions synth;
  std::string synth_weights;
  std::int64_t synth_clicks = 0;
  double synth_lambda = 0.15;
  std::uint64_t seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with known weights");
  synth_cmd->add_option("--k", synth.spec.k, "Number of features")->capture_default_str();
  synth_cmd->add_option("--n", synth.spec.n, "Items per context")->capture_default_str();
  synth_cmd->add_option("--queries", synth.spec.num_queries, "Number of queries")->capture_default_str();
  synth_cmd->add_option("--items-per-query", synth.spec.items_per_query, "Catalog size per query (0 = n)");
  synth_cmd->add_option("--contexts-per-query", synth.spec.contexts_per_query, "Contexts per query")
    ->capture_default_str();
  synth_cmd->add_option("--weights", synth_weights, "True weights, comma separated (default uniform)");
  synth_cmd->add_option("--clicks", synth_clicks, "Multinomial clicks per context (0 = noise free)");
  synth_cmd->add_option("--lambda", synth_lambda, "Restart probability")->capture_default_str();
  synth_cmd->add_option("--seed", seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  // train
  rsm::cli::TrainOptions train;
  LearnerFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Learn feature weights");
  add_source(train_cmd, train.source);
  train_flags.add(train_cmd);
  train_cmd->add_flag("--grid", train.grid, "Brute-force simplex grid search instead of the iterative learner");
  train_cmd->add_option("--grid-step", train.grid_step, "Grid spacing")->capture_default_str();
  train_cmd->add_option("--seed", seed, "Seed (the learner itself is deterministic)");
  train_cmd->add_option("--out-dir", train.out_dir, "Output directory")->required();

  // eval
  rsm::cli::EvalOptions eval;
  LearnerFlags eval_flags;
  std::string models = "rsm,ls,constant";
  std::string sweep;
  auto* eval_cmd = app.add_subcommand("eval", "Flip-prediction accuracy over repeated paired splits");
  add_source(eval_cmd, eval.source);
  eval_flags.add(eval_cmd);
  eval_cmd->add_option("--models", models, "Comma-separated: rsm, ls, constant, oracle")
    ->capture_default_str();
  eval_cmd->add_option("--splits", eval.experiment.num_splits, "Random train/test splits")
    ->capture_default_str();
  eval_cmd->add_option("--train-frac", eval.experiment.train_fraction, "Training fraction of flip pairs")
    ->capture_default_str();
  eval_cmd->add_option("--lambda-sweep", sweep, "Comma-separated lambdas, one report section each");
  eval_cmd->add_option("--seed", seed, "Seed")->capture_default_str();
  eval_cmd->add_option("--out-dir", eval.out_dir, "Output directory")->required();

  auto* demo_cmd = app.add_subcommand("demo-shredder", "Paper-shredder preference flip example");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rsm::cli::kConfig;
  }

  try {
    if (*synth_cmd) {
      synth.spec.seed = seed;
      synth.spec.lambda = synth_lambda;
      synth.spec.weights = synth_weights.empty()
                             ? rsm::WeightVector::uniform(synth.spec.k)
                             : rsm::WeightVector::reporting(parse_list(synth_weights, "--weights"));
      if (synth_clicks < 0)
        throw rsm::ConfigError("--clicks must be nonnegative");
      if (synth_clicks > 0)
        synth.spec.clicks_per_context = static_cast<std::uint64_t>(synth_clicks);
      rsm::cli::cmd_synth(synth);
    } else if (*train_cmd) {
      train.learner = train_flags.config();
      const auto out = rsm::cli::cmd_train(train);
      std::cout << "weights:";
      for (double w : out.weights.values())
        std::cout << ' ' << w;
      std::cout << "\nerr_s: " << out.err_s << '\n';
      if (out.fit)
        std::cout << "iterations: " << out.fit->iterations
                  << (out.fit->converged ? " (converged)" : " (not converged)") << '\n';
    } else if (*eval_cmd) {
      eval.learner = eval_flags.config();
      eval.models = split_names(models);
      if (!sweep.empty())
        eval.lambda_sweep = parse_list(sweep, "--lambda-sweep");
      eval.experiment.seed = seed;
      const auto reports = rsm::cli::cmd_eval(eval);
      for (const auto& r : reports)
        std::cout << rsm::report_to_table(r) << '\n';
    } else if (*demo_cmd) {
      rsm::cli::cmd_demo_shredder(std::cout);
    }
  } catch (const rsm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rsm::cli::exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rsm::cli::kFailure;
  }
  return rsm::cli::kOk;
}

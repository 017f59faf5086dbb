// fobsm: synthetic fractional-feature option data, MLP training and
// closed-form pricing from the command line.
//
// Every subcommand accepts --config FILE with plain `key=value` lines (keys
// are the long flag names, '#' starts a comment). Flags given on the
// command line override values from the file.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fobsm/bsm.hpp"
#include "fobsm/errors.hpp"
#include "fobsm/io.hpp"
#include "fobsm/pipeline.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Config values become `--key=value` tokens placed right after the
// subcommand, so explicit flags (which come later) win under TakeLast.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fobsm::IoError("cannot open config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw fobsm::ValidationError("config line " + std::to_string(number) +
                                   ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    for (auto& c : key) {
      if (c == '_') c = '-';
    }
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> rest;
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      config_path = argv[++i];
    } else if (arg.rfind("--config=", 0) == 0) {
      config_path = arg.substr(9);
    } else {
      rest.push_back(arg);
    }
  }
  if (config_path.empty() || rest.empty()) return rest;
  std::vector<std::string> out{rest.front()};
  for (auto& token : config_tokens(config_path)) out.push_back(std::move(token));
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

void add_train_options(CLI::App* cmd, fobsm::TrainConfig& cfg,
                       fobsm::PipelineSettings& pipeline,
                       std::vector<Eigen::Index>& hidden) {
  cmd->add_option("--epochs", cfg.epochs, "Maximum training epochs")
      ->capture_default_str();
  cmd->add_option("--batch-size", cfg.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--validation-fraction", cfg.validation_fraction,
                  "Tail fraction of the training partition used for validation")
      ->capture_default_str();
  cmd->add_option("--patience", cfg.patience, "Early-stopping patience (epochs)")
      ->capture_default_str();
  cmd->add_option("--restore-best", cfg.restore_best,
                  "Restore best-validation weights (true/false)")
      ->capture_default_str();
  cmd->add_option("--lambda", cfg.lambda, "Weight of the closed-form anchor loss term")
      ->capture_default_str();
  cmd->add_option("--train-fraction", pipeline.train_fraction,
                  "Leading fraction of rows used for training")
      ->capture_default_str();
  cmd->add_flag("--train-only-stats", pipeline.train_only_stats,
                "Normalize with statistics of the training partition only");
  cmd->add_flag("--include-invalid", pipeline.include_invalid,
                "Keep rows flagged invalid by the degenerate-input guard");
  cmd->add_option("--hidden", hidden, "Hidden layer widths")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--config", "key=value configuration file");
}

void print_price(double value) { std::cout << fobsm::format_double(value) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const fobsm::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fobsm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  CLI::App app{"Fractional-feature option pricing: data generation, MLP training, "
               "evaluation and closed-form prices"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  // generate
  fobsm::GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Sample options and extract features");
  generate->add_option("--n", gen.n, "Number of options")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Random seed")->required();
  generate->add_option("--out", gen.out, "Features CSV path")->required();
  generate->add_option("--stats-out", gen.stats_out, "Stats sidecar path");
  generate->add_option("--manifest", gen.manifest_out, "Run manifest path");
  generate->add_option("--threads", gen.threads, "Extraction threads")->capture_default_str();
  generate->add_option("--grid", gen.features.n_grid, "Time grid points")->capture_default_str();
  generate->add_option("--alpha-time", gen.features.alpha_time)->capture_default_str();
  generate->add_option("--alpha-price", gen.features.alpha_price)->capture_default_str();
  generate->add_option("--epsilon", gen.features.epsilon)->capture_default_str();
  generate->add_option("--s-min", gen.ranges.spot.lo)->capture_default_str();
  generate->add_option("--s-max", gen.ranges.spot.hi)->capture_default_str();
  generate->add_option("--k-min", gen.ranges.strike.lo)->capture_default_str();
  generate->add_option("--k-max", gen.ranges.strike.hi)->capture_default_str();
  generate->add_option("--t-min", gen.ranges.maturity.lo)->capture_default_str();
  generate->add_option("--t-max", gen.ranges.maturity.hi)->capture_default_str();
  generate->add_option("--r-min", gen.ranges.rate.lo)->capture_default_str();
  generate->add_option("--r-max", gen.ranges.rate.hi)->capture_default_str();
  generate->add_option("--sigma-min", gen.ranges.vol.lo)->capture_default_str();
  generate->add_option("--sigma-max", gen.ranges.vol.hi)->capture_default_str();
  generate->add_option("--config", "key=value configuration file");

  // train
  fobsm::TrainOptions tr;
  std::string train_optimizer = "adam";
  double train_lr = 0.0;
  auto* train = app.add_subcommand("train", "Train the MLP on a features CSV");
  train->add_option("--features", tr.features, "Features CSV")->required();
  train->add_option("--model-out", tr.model_out, "Model file path")->required();
  train->add_option("--history-out", tr.history_out, "History CSV path");
  train->add_option("--manifest", tr.manifest_out, "Run manifest path");
  train->add_option("--seed", tr.config.seed, "Random seed")->required();
  train->add_option("--optimizer", train_optimizer, "adam | sgd | rmsprop")
      ->check(CLI::IsMember({"adam", "sgd", "rmsprop"}))
      ->capture_default_str();
  train->add_option("--lr", train_lr, "Learning rate (default depends on optimizer)");
  add_train_options(train, tr.config, tr.pipeline, tr.hidden);

  // evaluate
  fobsm::EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a model on the test partition");
  evaluate->add_option("--model", ev.model, "Model file")->required();
  evaluate->add_option("--features", ev.features, "Features CSV")->required();
  evaluate->add_option("--out", ev.predictions_out, "Predictions CSV path")->required();
  evaluate->add_option("--metrics-out", ev.metrics_out, "Metrics JSON path");
  evaluate->add_option("--manifest", ev.manifest_out, "Run manifest path");
  evaluate->add_option("--config", "key=value configuration file");

  // compare-optimizers
  fobsm::CompareOptions cmp;
  auto* compare = app.add_subcommand("compare-optimizers",
                                     "Train adam, sgd and rmsprop from shared initial weights");
  compare->add_option("--features", cmp.features, "Features CSV")->required();
  compare->add_option("--seeds", cmp.seeds, "Comma-separated seeds")
      ->delimiter(',')
      ->capture_default_str();
  compare->add_option("--out", cmp.out, "Comparison CSV path")->required();
  compare->add_option("--manifest", cmp.manifest_out, "Run manifest path");
  add_train_options(compare, cmp.config, cmp.pipeline, cmp.hidden);

  // price
  std::string kind;
  double spot = 0, strike = 0, maturity = 0, rate = 0, vol = 0;
  auto* price = app.add_subcommand("price", "Closed-form European call or put price");
  price->add_option("kind", kind, "call | put")
      ->required()
      ->check(CLI::IsMember({"call", "put"}));
  price->add_option("-S,--spot", spot, "Spot price")->required();
  price->add_option("-K,--strike", strike, "Strike")->required();
  price->add_option("-T,--maturity", maturity, "Maturity in years")->required();
  price->add_option("-r,--rate", rate, "Risk-free rate")->capture_default_str();
  price->add_option("--sigma,--vol", vol, "Volatility")->required();
  price->add_option("--config", "key=value configuration file");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*generate) {
      const auto result = fobsm::cmd_generate(gen);
      std::cout << "wrote " << result.rows.size() << " rows (" << result.invalid_rows
                << " invalid) to " << gen.out.string() << "\n";
    } else if (*train) {
      tr.config.optimizer =
          fobsm::OptimizerConfig::defaults(fobsm::optimizer_from_string(train_optimizer));
      if (train_lr > 0.0) tr.config.optimizer.learning_rate = train_lr;
      const auto outcome = fobsm::cmd_train(tr);
      const auto& h = outcome.history;
      std::cout << "epochs " << h.completed_epochs() << ", best epoch " << h.best_epoch
                << ", train loss " << fobsm::format_double(h.initial_train_loss) << " -> "
                << fobsm::format_double(h.train_loss.back()) << ", best val loss "
                << fobsm::format_double(h.val_loss[static_cast<std::size_t>(h.best_epoch - 1)])
                << "\n";
    } else if (*evaluate) {
      const auto outcome = fobsm::cmd_evaluate(ev);
      const auto& m = outcome.evaluation.metrics;
      std::cout << "test rows " << m.rows << "\n"
                << "mse_normalized " << fobsm::format_double(m.mse_normalized) << "\n"
                << "mse_price " << fobsm::format_double(m.mse_price) << "\n";
    } else if (*compare) {
      const auto outcome = fobsm::cmd_compare_optimizers(cmp);
      for (const auto& run : outcome.runs) {
        std::cout << fobsm::to_string(run.kind) << " seed " << run.seed
                  << " final val loss " << fobsm::format_double(run.final_val_loss)
                  << " (" << run.history.completed_epochs() << " epochs)\n";
      }
    } else if (*price) {
      const fobsm::OptionParams params(spot, strike, maturity, rate, vol);
      print_price(fobsm::price(kind == "call" ? fobsm::OptionKind::Call
                                              : fobsm::OptionKind::Put,
                               params));
    }
  } catch (const fobsm::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fobsm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}

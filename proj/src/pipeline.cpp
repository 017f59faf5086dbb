#include "fobsm/pipeline.hpp"

#include <chrono>
#include <ctime>

#include "fobsm/bsm.hpp"

namespace fobsm {

namespace {

fs::path with_suffix(const fs::path& base, const fs::path& chosen, const char* suffix) {
  return chosen.empty() ? fs::path(base.string() + suffix) : chosen;
}

nlohmann::json ranges_json(const ParamRanges& r) {
  auto range = [](const Range& x) { return nlohmann::json::array({x.lo, x.hi}); };
  return {{"S", range(r.spot)}, {"K", range(r.strike)}, {"T", range(r.maturity)},
          {"r", range(r.rate)}, {"sigma", range(r.vol)}};
}

nlohmann::json features_json(const FeatureConfig& f) {
  return {{"n_grid", f.n_grid},
          {"alpha_time", f.alpha_time},
          {"alpha_price", f.alpha_price},
          {"epsilon", f.epsilon}};
}

nlohmann::json pipeline_json(const PipelineSettings& p) {
  return {{"train_fraction", p.train_fraction},
          {"train_only_stats", p.train_only_stats},
          {"include_invalid", p.include_invalid}};
}

Eigen::MatrixXd feature_matrix(std::span<const FeatureRow> rows, const NormStats& stats) {
  return apply_norm_stats(rows, stats).features;
}

}  // namespace

std::vector<Eigen::Index> network_dims(const std::vector<Eigen::Index>& hidden) {
  std::vector<Eigen::Index> dims{NormStats::kFeatureCount};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  return dims;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

void RunManifest::record(const fs::path& path) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path.string());
  artifacts.push_back({path.string(), sha256_file(path), size});
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& a : artifacts) {
    files.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  }
  return {{"command", command},   {"seed", seed},
          {"config", config},     {"started_at", started_at},
          {"finished_at", finished_at}, {"artifacts", files},
          {"results", results}};
}

void RunManifest::write(const fs::path& path) const {
  write_text_file(path, to_json().dump(2) + "\n");
}

PreparedData prepare_data(std::span<const FeatureRow> rows,
                          const PipelineSettings& settings, double lambda) {
  std::vector<FeatureRow> usable;
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].valid || settings.include_invalid) {
      usable.push_back(rows[i]);
      ids.push_back(i);
    }
  }
  if (usable.size() < 2) throw ValidationError("need at least 2 usable feature rows");

  PreparedData out;
  auto [train_rows, test_rows] = split<FeatureRow>(usable, settings.train_fraction);
  if (train_rows.empty() || test_rows.empty()) {
    throw ValidationError("train/test split left an empty partition");
  }
  out.test_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(train_rows.size()),
                      ids.end());
  out.stats = settings.train_only_stats ? compute_norm_stats(train_rows)
                                        : compute_norm_stats(usable);
  const NormalizedData normalized = apply_norm_stats(train_rows, out.stats);
  out.train.features = normalized.features;
  out.train.target = normalized.target;
  if (lambda > 0.0) {
    out.train.anchor.resize(static_cast<Eigen::Index>(train_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      out.train.anchor[static_cast<Eigen::Index>(i)] =
          (price_put(train_rows[i].params) - out.stats.option_price.mean) /
          out.stats.option_price.std;
    }
  }
  out.train_rows = std::move(train_rows);
  out.test_rows = std::move(test_rows);
  return out;
}

Eigen::VectorXd predict_denormalized(const Mlp<double>& model, const NormStats& stats,
                                     std::span<const FeatureRow> rows) {
  if (model.input_dim() != NormStats::kFeatureCount || model.output_dim() != 1) {
    throw ShapeError("model expects " + std::to_string(model.input_dim()) +
                     " inputs but the stats describe " +
                     std::to_string(NormStats::kFeatureCount) + " feature columns");
  }
  const Eigen::VectorXd normalized = forward(model, feature_matrix(rows, stats)).col(0);
  return denormalize_target(normalized, stats);
}

Evaluation evaluate_rows(const NormalizedPredictor& predict,
                         std::span<const FeatureRow> rows,
                         std::span<const std::size_t> row_ids, const NormStats& stats) {
  if (rows.size() != row_ids.size()) throw ShapeError("row ids do not match rows");
  if (rows.empty()) throw ValidationError("cannot evaluate an empty partition");
  const NormalizedData data = apply_norm_stats(rows, stats);
  const Eigen::VectorXd predicted = predict(data.features);
  if (predicted.size() != data.target.size()) {
    throw ShapeError("predictor returned the wrong number of rows");
  }
  const Eigen::VectorXd predicted_price = denormalize_target(predicted, stats);

  Evaluation out;
  out.metrics.rows = rows.size();
  out.metrics.mse_normalized = mse<double>(predicted, data.target);
  Eigen::VectorXd true_price(data.target.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    true_price[static_cast<Eigen::Index>(i)] = rows[i].option_price;
    out.predictions.push_back(
        {row_ids[i], rows[i].option_price, predicted_price[static_cast<Eigen::Index>(i)]});
  }
  out.metrics.mse_price = mse<double>(predicted_price, true_price);
  return out;
}

GenerateResult cmd_generate(const GenerateOptions& opts) {
  if (opts.out.empty()) throw ValidationError("generate: output path required");
  opts.ranges.validate();
  opts.features.validate();

  GenerateResult result;
  auto& manifest = result.manifest;
  manifest.command = "generate";
  manifest.seed = opts.seed;
  manifest.started_at = utc_timestamp();
  manifest.config = {{"n", opts.n},
                     {"ranges", ranges_json(opts.ranges)},
                     {"features", features_json(opts.features)}};

  const auto params = sample_params(opts.n, opts.ranges, opts.seed);
  result.rows = extract_all(params, opts.features, opts.threads);
  for (const auto& row : result.rows) result.invalid_rows += row.valid ? 0 : 1;

  write_features_csv(opts.out, result.rows);
  manifest.record(opts.out);

  const auto usable = valid_rows(result.rows);
  nlohmann::json sidecar = {{"rows", result.rows.size()},
                            {"valid_rows", usable.size()},
                            {"norm_stats", nullptr}};
  if (usable.size() >= 2) {
    try {
      sidecar["norm_stats"] = to_json(compute_norm_stats(usable));
    } catch (const DegenerateInputError&) {
      // Leave null: a constant column has no z-score.
    }
  }
  const fs::path stats_path = with_suffix(opts.out, opts.stats_out, ".stats.json");
  write_text_file(stats_path, sidecar.dump(2) + "\n");
  manifest.record(stats_path);

  manifest.results = {{"rows", result.rows.size()}, {"invalid_rows", result.invalid_rows}};
  manifest.finished_at = utc_timestamp();
  manifest.write(with_suffix(opts.out, opts.manifest_out, ".manifest.json"));
  return result;
}

TrainOutcome cmd_train(const TrainOptions& opts) {
  if (opts.model_out.empty()) throw ValidationError("train: model output path required");
  opts.config.validate();

  TrainOutcome outcome{{Mlp<double>(network_dims(opts.hidden)), {}, opts.config,
                        opts.pipeline},
                       {},
                       {}};
  auto& manifest = outcome.manifest;
  manifest.command = "train";
  manifest.seed = opts.config.seed;
  manifest.started_at = utc_timestamp();
  manifest.config = {{"features", opts.features.string()},
                     {"train", to_json(opts.config)},
                     {"pipeline", pipeline_json(opts.pipeline)},
                     {"hidden", opts.hidden}};

  const auto rows = read_features_csv(opts.features);
  const PreparedData data = prepare_data(rows, opts.pipeline, opts.config.lambda);
  auto init = init_mlp<double>(network_dims(opts.hidden), opts.config.seed);
  auto trained = train(std::move(init), data.train, opts.config);

  outcome.bundle.model = std::move(trained.model);
  outcome.bundle.stats = data.stats;
  outcome.history = std::move(trained.history);

  save_model(opts.model_out, outcome.bundle);
  manifest.record(opts.model_out);
  const fs::path history_path =
      with_suffix(opts.model_out, opts.history_out, ".history.csv");
  write_text_file(history_path, history_to_csv(outcome.history));
  manifest.record(history_path);

  const auto& h = outcome.history;
  manifest.results = {{"epochs_completed", h.completed_epochs()},
                      {"best_epoch", h.best_epoch},
                      {"stopped_epoch", h.stopped_epoch},
                      {"initial_train_loss", h.initial_train_loss},
                      {"final_train_loss", h.train_loss.back()},
                      {"best_val_loss", h.val_loss[static_cast<std::size_t>(h.best_epoch - 1)]}};
  manifest.finished_at = utc_timestamp();
  manifest.write(with_suffix(opts.model_out, opts.manifest_out, ".manifest.json"));
  return outcome;
}

EvaluateOutcome cmd_evaluate(const EvaluateOptions& opts) {
  if (opts.predictions_out.empty()) {
    throw ValidationError("evaluate: predictions output path required");
  }
  EvaluateOutcome outcome;
  auto& manifest = outcome.manifest;
  manifest.command = "evaluate";
  manifest.started_at = utc_timestamp();
  manifest.config = {{"model", opts.model.string()}, {"features", opts.features.string()}};

  const ModelBundle bundle = load_model(opts.model);
  manifest.seed = bundle.config.seed;
  const auto rows = read_features_csv(opts.features);
  const PreparedData data = prepare_data(rows, bundle.pipeline, 0.0);
  if (bundle.model.input_dim() != NormStats::kFeatureCount) {
    throw ShapeError("model input dimension does not match the feature columns");
  }
  const auto predictor = [&](const Eigen::MatrixXd& x) -> Eigen::VectorXd {
    return forward(bundle.model, x).col(0);
  };
  outcome.evaluation = evaluate_rows(predictor, data.test_rows, data.test_ids, bundle.stats);

  write_text_file(opts.predictions_out, predictions_to_csv(outcome.evaluation.predictions));
  manifest.record(opts.predictions_out);
  const auto& m = outcome.evaluation.metrics;
  const nlohmann::json metrics = {{"test_rows", m.rows},
                                  {"mse_normalized", m.mse_normalized},
                                  {"mse_price", m.mse_price}};
  const fs::path metrics_path =
      with_suffix(opts.predictions_out, opts.metrics_out, ".metrics.json");
  write_text_file(metrics_path, metrics.dump(2) + "\n");
  manifest.record(metrics_path);

  manifest.results = metrics;
  manifest.finished_at = utc_timestamp();
  manifest.write(with_suffix(opts.predictions_out, opts.manifest_out, ".manifest.json"));
  return outcome;
}

std::string comparison_to_csv(std::span<const OptimizerRun> runs) {
  std::string out(kComparisonHeader);
  out += '\n';
  for (const auto& run : runs) {
    const std::string prefix =
        std::string(to_string(run.kind)) + ',' + std::to_string(run.seed) + ',';
    out += prefix + "0," + format_double(run.history.initial_train_loss) + ',' +
           format_double(run.history.initial_val_loss) + '\n';
    for (std::size_t e = 0; e < run.history.train_loss.size(); ++e) {
      out += prefix + std::to_string(e + 1) + ',' +
             format_double(run.history.train_loss[e]) + ',' +
             format_double(run.history.val_loss[e]) + '\n';
    }
  }
  return out;
}

CompareOutcome cmd_compare_optimizers(const CompareOptions& opts) {
  if (opts.seeds.empty()) throw ValidationError("compare-optimizers needs at least one seed");
  if (opts.out.empty()) throw ValidationError("compare-optimizers: output path required");
  opts.config.validate();

  CompareOutcome outcome;
  auto& manifest = outcome.manifest;
  manifest.command = "compare-optimizers";
  manifest.seed = opts.seeds.front();
  manifest.started_at = utc_timestamp();
  manifest.config = {{"features", opts.features.string()},
                     {"seeds", opts.seeds},
                     {"train", to_json(opts.config)},
                     {"pipeline", pipeline_json(opts.pipeline)},
                     {"hidden", opts.hidden}};

  const auto rows = read_features_csv(opts.features);
  const PreparedData data = prepare_data(rows, opts.pipeline, opts.config.lambda);
  const Loss<double> loss{opts.config.lambda};
  const Eigen::Index n_val =
      validation_rows(data.train.size(), opts.config.validation_fraction);
  const auto val = data.train.slice(data.train.size() - n_val, n_val);

  nlohmann::json summary = nlohmann::json::array();
  for (const auto seed : opts.seeds) {
    const auto init = init_mlp<double>(network_dims(opts.hidden), seed);
    for (const auto kind :
         {OptimizerKind::Adam, OptimizerKind::Sgd, OptimizerKind::Rmsprop}) {
      TrainConfig cfg = opts.config;
      cfg.optimizer = OptimizerConfig::defaults(kind);
      cfg.seed = seed;
      auto trained = train(init, data.train, cfg);
      const double final_val = dataset_loss(trained.model, val, loss);
      summary.push_back({{"optimizer", to_string(kind)},
                         {"seed", seed},
                         {"final_val_loss", final_val},
                         {"epochs_completed", trained.history.completed_epochs()}});
      outcome.runs.push_back({kind, seed, std::move(trained.history), final_val});
    }
  }

  write_text_file(opts.out, comparison_to_csv(outcome.runs));
  manifest.record(opts.out);
  manifest.results = {{"runs", summary}};
  manifest.finished_at = utc_timestamp();
  manifest.write(with_suffix(opts.out, opts.manifest_out, ".manifest.json"));
  return outcome;
}

}  // namespace fobsm

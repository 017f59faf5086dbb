#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fobsm/dataset.hpp"
#include "fobsm/io.hpp"
#include "fobsm/mlp.hpp"
#include "fobsm/trainer.hpp"

namespace fobsm {

/// Input dimension is fixed by the two fractional features.
std::vector<Eigen::Index> network_dims(const std::vector<Eigen::Index>& hidden);

struct ArtifactRecord {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// Provenance of one CLI run. Every file a command writes is listed with its
/// digest; the manifest itself is not.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::string started_at;
  std::string finished_at;
  std::vector<ArtifactRecord> artifacts;
  nlohmann::json results = nlohmann::json::object();

  void record(const fs::path& path);
  nlohmann::json to_json() const;
  void write(const fs::path& path) const;
};

std::string utc_timestamp();

/// Training data rebuilt from a features file: filtered, split, normalized.
struct PreparedData {
  std::vector<FeatureRow> train_rows;
  std::vector<FeatureRow> test_rows;
  /// Data-row index (0-based, header excluded) of every test row.
  std::vector<std::size_t> test_ids;
  NormStats stats;
  TrainingSet<double> train;
};

/// Drops invalid rows unless settings.include_invalid, splits contiguously
/// and normalizes with global or training-only statistics. lambda > 0 also
/// fills the anchor with the normalized closed-form put of every row.
PreparedData prepare_data(std::span<const FeatureRow> rows,
                          const PipelineSettings& settings, double lambda);

/// Forward on normalized features, then y * std + mean.
Eigen::VectorXd predict_denormalized(const Mlp<double>& model, const NormStats& stats,
                                     std::span<const FeatureRow> rows);

struct EvaluationMetrics {
  std::size_t rows = 0;
  double mse_normalized = 0.0;
  double mse_price = 0.0;
};

struct Evaluation {
  EvaluationMetrics metrics;
  std::vector<PredictionRecord> predictions;
};

/// Scores any predictor of normalized prices on the given rows.
using NormalizedPredictor = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;
Evaluation evaluate_rows(const NormalizedPredictor& predict,
                         std::span<const FeatureRow> rows,
                         std::span<const std::size_t> row_ids, const NormStats& stats);

struct GenerateOptions {
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  ParamRanges ranges;
  FeatureConfig features;
  unsigned threads = 1;
  fs::path out;
  fs::path stats_out;     // default: <out>.stats.json
  fs::path manifest_out;  // default: <out>.manifest.json
};

struct GenerateResult {
  std::vector<FeatureRow> rows;
  std::size_t invalid_rows = 0;
  RunManifest manifest;
};

GenerateResult cmd_generate(const GenerateOptions& opts);

struct TrainOptions {
  fs::path features;
  fs::path model_out;
  fs::path history_out;   // default: <model_out>.history.csv
  fs::path manifest_out;  // default: <model_out>.manifest.json
  TrainConfig config;
  PipelineSettings pipeline;
  std::vector<Eigen::Index> hidden{64, 64};
};

struct TrainOutcome {
  ModelBundle bundle;
  TrainHistory history;
  RunManifest manifest;
};

TrainOutcome cmd_train(const TrainOptions& opts);

struct EvaluateOptions {
  fs::path model;
  fs::path features;
  fs::path predictions_out;
  fs::path metrics_out;   // default: <predictions_out>.metrics.json
  fs::path manifest_out;  // default: <predictions_out>.manifest.json
};

struct EvaluateOutcome {
  Evaluation evaluation;
  RunManifest manifest;
};

EvaluateOutcome cmd_evaluate(const EvaluateOptions& opts);

struct CompareOptions {
  fs::path features;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  TrainConfig config;  // optimizer hyperparameters are replaced per optimizer
  PipelineSettings pipeline;
  std::vector<Eigen::Index> hidden{64, 64};
  fs::path out;
  fs::path manifest_out;  // default: <out>.manifest.json
};

struct OptimizerRun {
  OptimizerKind kind;
  std::uint64_t seed;
  TrainHistory history;
  /// Validation loss of the returned (best-epoch) weights.
  double final_val_loss;
};

struct CompareOutcome {
  std::vector<OptimizerRun> runs;
  RunManifest manifest;
};

CompareOutcome cmd_compare_optimizers(const CompareOptions& opts);

/// Long-format rows; epoch 0 carries the losses of the shared initial
/// weights.
std::string comparison_to_csv(std::span<const OptimizerRun> runs);

}  // namespace fobsm

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fobsm/dataset.hpp"
#include "fobsm/mlp.hpp"
#include "fobsm/trainer.hpp"

namespace fobsm {

namespace fs = std::filesystem;

inline constexpr std::string_view kFeaturesHeader =
    "S,K,T,r,sigma,option_price,frac_time_deriv,frac_price_deriv,valid";
inline constexpr std::string_view kHistoryHeader = "epoch,train_loss,val_loss";
inline constexpr std::string_view kComparisonHeader =
    "optimizer,seed,epoch,train_loss,val_loss";
inline constexpr std::string_view kPredictionsHeader =
    "row_id,true_price,predicted_price";
inline constexpr int kModelSchemaVersion = 1;

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);
/// Strict parse: the whole field must be consumed. Throws ValidationError.
double parse_double(std::string_view text);

void write_text_file(const fs::path& path, const std::string& contents);
std::string read_text_file(const fs::path& path);

std::string features_to_csv(std::span<const FeatureRow> rows);
std::vector<FeatureRow> features_from_csv(const std::string& text);
void write_features_csv(const fs::path& path, std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_features_csv(const fs::path& path);

std::string history_to_csv(const TrainHistory& history);

struct PredictionRecord {
  std::size_t row_id;
  double true_price;
  double predicted_price;
};
std::string predictions_to_csv(std::span<const PredictionRecord> records);

/// How the features file was filtered and partitioned for training; stored
/// in the model so evaluation can rebuild the same test partition.
struct PipelineSettings {
  double train_fraction = 0.8;
  bool train_only_stats = false;
  bool include_invalid = false;
};

/// Everything needed to reproduce predictions from a trained network.
struct ModelBundle {
  Mlp<double> model;
  NormStats stats;
  TrainConfig config;
  PipelineSettings pipeline;
};

nlohmann::json to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const ModelBundle& bundle);
ModelBundle model_from_json(const nlohmann::json& j);
void save_model(const fs::path& path, const ModelBundle& bundle);
ModelBundle load_model(const fs::path& path);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

}  // namespace fobsm

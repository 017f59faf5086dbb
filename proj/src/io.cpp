#include "fobsm/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

namespace fobsm {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

bool parse_flag(std::string_view text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw ValidationError("invalid boolean field '" + std::string(text) + "'");
}

template <typename Json>
double number(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ValidationError(std::string("model file: missing number '") + key + "'");
  }
  return j.at(key).template get<double>();
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buffer{};
  const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc{}) throw ValidationError("cannot format double");
  return std::string(buffer.data(), end);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  const auto [end, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || end != last || first == last) {
    throw ValidationError("invalid number '" + std::string(text) + "'");
  }
  return value;
}

void write_text_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return buffer.str();
}

std::string features_to_csv(std::span<const FeatureRow> rows) {
  std::string out(kFeaturesHeader);
  out += '\n';
  for (const auto& row : rows) {
    const auto& p = row.params;
    for (double v : {p.spot(), p.strike(), p.maturity(), p.rate(), p.vol(),
                     row.option_price, row.frac_time_deriv, row.frac_price_deriv}) {
      out += format_double(v);
      out += ',';
    }
    out += row.valid ? "1\n" : "0\n";
  }
  return out;
}

std::vector<FeatureRow> features_from_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != kFeaturesHeader) {
    throw ValidationError("features CSV must start with header '" +
                          std::string(kFeaturesHeader) + "'");
  }
  std::vector<FeatureRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_fields(lines[i]);
    if (fields.size() != 9) {
      throw ValidationError("features CSV line " + std::to_string(i + 1) +
                            ": expected 9 fields, got " +
                            std::to_string(fields.size()));
    }
    try {
      FeatureRow row{OptionParams(parse_double(fields[0]), parse_double(fields[1]),
                                  parse_double(fields[2]), parse_double(fields[3]),
                                  parse_double(fields[4]))};
      row.option_price = parse_double(fields[5]);
      row.frac_time_deriv = parse_double(fields[6]);
      row.frac_price_deriv = parse_double(fields[7]);
      row.valid = parse_flag(fields[8]);
      rows.push_back(row);
    } catch (const ValidationError& e) {
      throw ValidationError("features CSV line " + std::to_string(i + 1) + ": " +
                            e.what());
    }
  }
  return rows;
}

void write_features_csv(const fs::path& path, std::span<const FeatureRow> rows) {
  write_text_file(path, features_to_csv(rows));
}

std::vector<FeatureRow> read_features_csv(const fs::path& path) {
  return features_from_csv(read_text_file(path));
}

std::string history_to_csv(const TrainHistory& history) {
  std::string out(kHistoryHeader);
  out += '\n';
  for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
    out += std::to_string(e + 1) + ',' + format_double(history.train_loss[e]) + ',' +
           format_double(history.val_loss[e]) + '\n';
  }
  return out;
}

std::string predictions_to_csv(std::span<const PredictionRecord> records) {
  std::string out(kPredictionsHeader);
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.row_id) + ',' + format_double(r.true_price) + ',' +
           format_double(r.predicted_price) + '\n';
  }
  return out;
}

nlohmann::json to_json(const NormStats& stats) {
  auto column = [](const ColumnStats& c) {
    return nlohmann::json{{"mean", c.mean}, {"std", c.std}};
  };
  return {{"frac_price_deriv", column(stats.frac_price_deriv)},
          {"frac_time_deriv", column(stats.frac_time_deriv)},
          {"option_price", column(stats.option_price)}};
}

NormStats norm_stats_from_json(const nlohmann::json& j) {
  auto column = [&](const char* key) {
    if (!j.contains(key)) {
      throw ValidationError(std::string("norm stats: missing column '") + key + "'");
    }
    const auto& c = j.at(key);
    ColumnStats out{number(c, "mean"), number(c, "std")};
    if (!(out.std > 0.0)) throw ValidationError("norm stats: std must be > 0");
    return out;
  };
  if (!j.is_object() || j.size() != 3) {
    throw ShapeError("norm stats must hold exactly 3 columns");
  }
  return {column("frac_price_deriv"), column("frac_time_deriv"),
          column("option_price")};
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"validation_fraction", cfg.validation_fraction},
          {"optimizer",
           {{"kind", to_string(cfg.optimizer.kind)},
            {"learning_rate", cfg.optimizer.learning_rate},
            {"beta1", cfg.optimizer.beta1},
            {"beta2", cfg.optimizer.beta2},
            {"rho", cfg.optimizer.rho},
            {"epsilon", cfg.optimizer.epsilon}}},
          {"patience", cfg.patience},
          {"restore_best", cfg.restore_best},
          {"lambda", cfg.lambda},
          {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  try {
    TrainConfig cfg;
    cfg.epochs = j.at("epochs").get<int>();
    cfg.batch_size = j.at("batch_size").get<Eigen::Index>();
    cfg.validation_fraction = j.at("validation_fraction").get<double>();
    const auto& opt = j.at("optimizer");
    cfg.optimizer.kind = optimizer_from_string(opt.at("kind").get<std::string>());
    cfg.optimizer.learning_rate = opt.at("learning_rate").get<double>();
    cfg.optimizer.beta1 = opt.at("beta1").get<double>();
    cfg.optimizer.beta2 = opt.at("beta2").get<double>();
    cfg.optimizer.rho = opt.at("rho").get<double>();
    cfg.optimizer.epsilon = opt.at("epsilon").get<double>();
    cfg.patience = j.at("patience").get<int>();
    cfg.restore_best = j.at("restore_best").get<bool>();
    cfg.lambda = j.at("lambda").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
}

nlohmann::json model_to_json(const ModelBundle& bundle) {
  const auto& m = bundle.model;
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    const auto w = m.weight(l);
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(w.cols()));
      for (Eigen::Index c = 0; c < w.cols(); ++c) row[static_cast<std::size_t>(c)] = w(r, c);
      rows.push_back(row);
    }
    const auto b = m.bias(l);
    layers.push_back({{"weights", rows},
                      {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  std::vector<std::string> activations;
  for (auto a : m.activations()) activations.emplace_back(to_string(a));
  return {{"schema_version", kModelSchemaVersion},
          {"layer_dims", m.dims()},
          {"activations", activations},
          {"layers", layers},
          {"norm_stats", to_json(bundle.stats)},
          {"seed", bundle.config.seed},
          {"config", to_json(bundle.config)},
          {"pipeline",
           {{"train_fraction", bundle.pipeline.train_fraction},
            {"train_only_stats", bundle.pipeline.train_only_stats},
            {"include_invalid", bundle.pipeline.include_invalid}}}};
}

ModelBundle model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
      throw ValidationError("unsupported model schema_version");
    }
    const auto dims = j.at("layer_dims").get<std::vector<Eigen::Index>>();
    std::vector<Activation> activations;
    for (const auto& name : j.at("activations")) {
      activations.push_back(activation_from_string(name.get<std::string>()));
    }
    Mlp<double> model(dims, activations);
    const auto& layers = j.at("layers");
    if (layers.size() != model.layer_count()) {
      throw ShapeError("model file: layer count does not match layer_dims");
    }
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
      auto w = model.weight(l);
      const auto& rows = layers[l].at("weights");
      if (static_cast<Eigen::Index>(rows.size()) != w.rows()) {
        throw ShapeError("model file: weight rows mismatch in layer " + std::to_string(l));
      }
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const auto row = rows[static_cast<std::size_t>(r)].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != w.cols()) {
          throw ShapeError("model file: weight cols mismatch in layer " + std::to_string(l));
        }
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = row[static_cast<std::size_t>(c)];
      }
      const auto bias = layers[l].at("bias").get<std::vector<double>>();
      auto b = model.bias(l);
      if (static_cast<Eigen::Index>(bias.size()) != b.size()) {
        throw ShapeError("model file: bias size mismatch in layer " + std::to_string(l));
      }
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = bias[static_cast<std::size_t>(i)];
    }
    if (!model.parameters().allFinite()) {
      throw ValidationError("model file: parameters must be finite");
    }
    ModelBundle bundle{std::move(model), norm_stats_from_json(j.at("norm_stats")),
                       train_config_from_json(j.at("config")), {}};
    const auto& pipeline = j.at("pipeline");
    bundle.pipeline.train_fraction = pipeline.at("train_fraction").get<double>();
    bundle.pipeline.train_only_stats = pipeline.at("train_only_stats").get<bool>();
    bundle.pipeline.include_invalid = pipeline.at("include_invalid").get<bool>();
    return bundle;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
}

void save_model(const fs::path& path, const ModelBundle& bundle) {
  write_text_file(path, model_to_json(bundle).dump(2) + "\n");
}

ModelBundle load_model(const fs::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("model file " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

std::string sha256_file(const fs::path& path) {
  const std::string bytes = read_text_file(path);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                             &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
    throw IoError("sha256 failed for " + path.string());
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

}  // namespace fobsm

#include "fobsm/dataset.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <thread>

#include "fobsm/random.hpp"

namespace fobsm {

namespace {

void validate_range(const Range& range, const char* name) {
  if (!std::isfinite(range.lo) || !std::isfinite(range.hi) || !(range.lo > 0.0) ||
      !(range.lo < range.hi)) {
    throw ValidationError(std::string("invalid ") + name +
                          " range: need 0 < lo < hi");
  }
}

void validate_alpha(double alpha, const char* name) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError(std::string(name) + " must lie in (0, 1)");
  }
}

ColumnStats column_stats(std::span<const FeatureRow> rows,
                         double FeatureRow::*field, const char* name) {
  const double n = static_cast<double>(rows.size());
  double sum = 0.0;
  for (const auto& row : rows) sum += row.*field;
  const double mean = sum / n;
  double squares = 0.0;
  for (const auto& row : rows) {
    const double d = row.*field - mean;
    squares += d * d;
  }
  const double std = std::sqrt(squares / n);
  if (!(std >= 1e-15)) {
    throw DegenerateInputError(std::string("column ") + name +
                               " is constant; cannot normalize");
  }
  return {mean, std};
}

}  // namespace

void ParamRanges::validate() const {
  validate_range(spot, "spot");
  validate_range(strike, "strike");
  validate_range(maturity, "maturity");
  validate_range(rate, "rate");
  validate_range(vol, "vol");
}

void FeatureConfig::validate() const {
  if (n_grid < 2) throw ValidationError("n_grid must be >= 2");
  validate_alpha(alpha_time, "alpha_time");
  validate_alpha(alpha_price, "alpha_price");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("epsilon must be > 0");
  }
}

std::vector<OptionParams> sample_params(std::size_t n, const ParamRanges& ranges,
                                        std::uint64_t seed) {
  ranges.validate();
  std::vector<OptionParams> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Engine engine = make_engine(seed, i);
    const double s = uniform(engine, ranges.spot.lo, ranges.spot.hi);
    const double k = uniform(engine, ranges.strike.lo, ranges.strike.hi);
    const double t = uniform(engine, ranges.maturity.lo, ranges.maturity.hi);
    const double r = uniform(engine, ranges.rate.lo, ranges.rate.hi);
    const double v = uniform(engine, ranges.vol.lo, ranges.vol.hi);
    out.emplace_back(s, k, t, r, v);
  }
  return out;
}

PricePath epsilon_put_path(const OptionParams& p, Eigen::Index n_grid,
                           double epsilon) {
  if (n_grid < 2) throw ValidationError("n_grid must be >= 2");
  PricePath path;
  path.tau = linspace_from_zero(p.maturity(), n_grid);
  path.delta_t = path.tau[1] - path.tau[0];
  path.values.resize(n_grid);

  const double s = p.spot();
  const double k = p.strike();
  const double r = p.rate();
  const double sigma = p.vol();
  const double log_moneyness = std::log(s / (k + epsilon));
  // tau == 0: d1 and d2 diverge to -inf (put ends in the money) or +inf.
  path.values[0] = log_moneyness < 0.0 ? std::max(k - s, 0.0) : 0.0;
  for (Eigen::Index i = 1; i < n_grid; ++i) {
    const double t = path.tau[i];
    const double d1 = (log_moneyness + (r + (sigma * sigma) / 2.0) * t) /
                      (sigma * std::sqrt(t));
    const double d2 = d1 - sigma * std::sqrt(t);
    path.values[i] = k * std::exp(-r * t) * norm_cdf(-d2) - s * norm_cdf(-d1);
  }
  return path;
}

FeatureExtractor::FeatureExtractor(const FeatureConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      time_kernel_(cfg.n_grid, FractionalOrder(cfg.alpha_time)),
      price_kernel_(cfg.n_grid, FractionalOrder(cfg.alpha_price)) {}

FeatureRow FeatureExtractor::operator()(const OptionParams& p) const {
  FeatureRow row{p};
  const double final_time = linspace_from_zero(p.maturity(), cfg_.n_grid)[cfg_.n_grid - 1];
  if (p.vol() < cfg_.epsilon || final_time < cfg_.epsilon) return row;

  const PricePath path = epsilon_put_path(p, cfg_.n_grid, cfg_.epsilon);
  const Series<double> series(path.values, path.delta_t);
  row.frac_price_deriv = price_kernel_.last(series);
  row.frac_time_deriv = time_kernel_.last(series);
  row.option_price = path.values[cfg_.n_grid - 1];
  row.valid = std::isfinite(row.frac_price_deriv) &&
              std::isfinite(row.frac_time_deriv) &&
              std::isfinite(row.option_price);
  return row;
}

FeatureRow extract_features(const OptionParams& p, const FeatureConfig& cfg) {
  return FeatureExtractor(cfg)(p);
}

std::vector<FeatureRow> extract_all(std::span<const OptionParams> params,
                                    const FeatureConfig& cfg, unsigned threads) {
  const FeatureExtractor extractor(cfg);
  std::vector<FeatureRow> rows;
  rows.reserve(params.size());
  for (const auto& p : params) rows.push_back(FeatureRow{p});

  const std::size_t workers =
      std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(params.size(), 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < params.size(); ++i) rows[i] = extractor(params[i]);
    return rows;
  }
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < params.size(); i += workers) {
          rows[i] = extractor(params[i]);
        }
      });
    }
  }
  return rows;
}

std::vector<FeatureRow> valid_rows(std::span<const FeatureRow> rows) {
  std::vector<FeatureRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [](const FeatureRow& row) { return row.valid; });
  return out;
}

NormStats compute_norm_stats(std::span<const FeatureRow> rows) {
  if (rows.size() < 2) throw ValidationError("normalization needs at least 2 rows");
  NormStats stats;
  stats.frac_price_deriv =
      column_stats(rows, &FeatureRow::frac_price_deriv, "frac_price_deriv");
  stats.frac_time_deriv =
      column_stats(rows, &FeatureRow::frac_time_deriv, "frac_time_deriv");
  stats.option_price = column_stats(rows, &FeatureRow::option_price, "option_price");
  return stats;
}

NormalizedData apply_norm_stats(std::span<const FeatureRow> rows,
                                const NormStats& stats) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  NormalizedData data{Eigen::MatrixXd(n, NormStats::kFeatureCount),
                      Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    data.features(i, 0) = (row.frac_price_deriv - stats.frac_price_deriv.mean) /
                          stats.frac_price_deriv.std;
    data.features(i, 1) = (row.frac_time_deriv - stats.frac_time_deriv.mean) /
                          stats.frac_time_deriv.std;
    data.target[i] = (row.option_price - stats.option_price.mean) /
                     stats.option_price.std;
  }
  return data;
}

std::pair<NormalizedData, NormStats> normalize(std::span<const FeatureRow> rows) {
  NormStats stats = compute_norm_stats(rows);
  return {apply_norm_stats(rows, stats), stats};
}

Eigen::MatrixXd denormalize(const NormalizedData& data, const NormStats& stats) {
  const Eigen::Index n = data.features.rows();
  if (data.features.cols() != NormStats::kFeatureCount || data.target.size() != n) {
    throw ShapeError("normalized data does not match the stats layout");
  }
  Eigen::MatrixXd raw(n, 3);
  raw.col(0) = data.features.col(0).array() * stats.frac_price_deriv.std +
               stats.frac_price_deriv.mean;
  raw.col(1) = data.features.col(1).array() * stats.frac_time_deriv.std +
               stats.frac_time_deriv.mean;
  raw.col(2) = denormalize_target(data.target, stats);
  return raw;
}

Eigen::VectorXd denormalize_target(const Eigen::VectorXd& target,
                                   const NormStats& stats) {
  return (target.array() * stats.option_price.std + stats.option_price.mean).matrix();
}

Eigen::VectorXd simulate_gbm(double spot, double rate, double vol,
                             const Eigen::VectorXd& grid, std::uint64_t seed) {
  if (!(spot > 0.0) || !std::isfinite(spot)) throw ValidationError("spot must be > 0");
  if (!(vol >= 0.0) || !std::isfinite(vol)) throw ValidationError("vol must be >= 0");
  if (!std::isfinite(rate)) throw ValidationError("rate must be finite");
  if (grid.size() < 1 || grid[0] != 0.0) {
    throw ValidationError("GBM grid must start at 0");
  }
  const Eigen::Index n = grid.size();
  Eigen::VectorXd path(n);
  path[0] = spot;
  if (n == 1) return path;

  const double dt = grid[1] - grid[0];
  if (!(dt > 0.0)) throw ValidationError("GBM grid must be ascending");
  for (Eigen::Index i = 1; i < n; ++i) {
    const double step = grid[i] - grid[i - 1];
    if (std::abs(step - dt) > 1e-9 * dt) {
      throw ValidationError("GBM grid must be uniform");
    }
  }

  Engine engine = make_engine(seed, 0);
  std::normal_distribution<double> normal;
  const double drift = (rate - 0.5 * vol * vol) * dt;
  const double diffusion = vol * std::sqrt(dt);
  const double log_spot = std::log(spot);
  double log_increment = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double z = normal(engine);
    log_increment += drift + diffusion * z;
    path[i] = std::exp(log_spot + log_increment);
  }
  return path;
}

}  // namespace fobsm

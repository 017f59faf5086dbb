#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fobsm/bsm.hpp"
#include "fobsm/errors.hpp"
#include "fobsm/fractional.hpp"

namespace fobsm {

struct Range {
  double lo;
  double hi;
};

/// Uniform sampling box for synthetic options.
struct ParamRanges {
  Range spot{50.0, 150.0};
  Range strike{50.0, 150.0};
  Range maturity{0.1, 1.0};
  Range rate{0.01, 0.05};
  Range vol{0.1, 0.5};

  void validate() const;
};

struct FeatureConfig {
  Eigen::Index n_grid = 1000;
  double alpha_time = 0.5;
  double alpha_price = 0.7;
  double epsilon = 1e-10;

  void validate() const;
};

/// One synthetic option with its target and fractional features. Rows that
/// hit the sigma / maturity guard keep zeros and are flagged invalid.
struct FeatureRow {
  OptionParams params;
  double option_price = 0.0;
  double frac_time_deriv = 0.0;
  double frac_price_deriv = 0.0;
  bool valid = false;
};

struct ColumnStats {
  double mean = 0.0;
  double std = 1.0;
};

/// Population mean / standard deviation of both inputs and the target.
struct NormStats {
  ColumnStats frac_price_deriv;
  ColumnStats frac_time_deriv;
  ColumnStats option_price;

  static constexpr Eigen::Index kFeatureCount = 2;
};

/// z-scored inputs (columns: frac_price_deriv, frac_time_deriv) and target.
struct NormalizedData {
  Eigen::MatrixXd features;
  Eigen::VectorXd target;
};

/// n rows, each drawn S, K, T, r, sigma in that order from the row's own
/// substream of `seed`.
std::vector<OptionParams> sample_params(std::size_t n, const ParamRanges& ranges,
                                        std::uint64_t seed);

/// Put path with the d1 numerator ln(S / (K + epsilon)), evaluated on
/// linspace(0, T, n_grid). The tau == 0 point takes the sign limit of d1.
PricePath epsilon_put_path(const OptionParams& p, Eigen::Index n_grid,
                           double epsilon);

/// Shares the two fractional kernels across every row of a run.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const FeatureConfig& cfg);

  FeatureRow operator()(const OptionParams& p) const;
  const FeatureConfig& config() const { return cfg_; }

 private:
  FeatureConfig cfg_;
  FractionalKernel<double> time_kernel_;
  FractionalKernel<double> price_kernel_;
};

FeatureRow extract_features(const OptionParams& p, const FeatureConfig& cfg);

/// Row-wise extraction on up to `threads` workers. Output order and values
/// do not depend on the thread count.
std::vector<FeatureRow> extract_all(std::span<const OptionParams> params,
                                    const FeatureConfig& cfg,
                                    unsigned threads = 1);

std::vector<FeatureRow> valid_rows(std::span<const FeatureRow> rows);

NormStats compute_norm_stats(std::span<const FeatureRow> rows);
NormalizedData apply_norm_stats(std::span<const FeatureRow> rows,
                                const NormStats& stats);

/// Global z-score over all rows. Throws DegenerateInputError when any
/// column has standard deviation below 1e-15, ValidationError for < 2 rows.
std::pair<NormalizedData, NormStats> normalize(std::span<const FeatureRow> rows);

/// Columns: frac_price_deriv, frac_time_deriv, option_price.
Eigen::MatrixXd denormalize(const NormalizedData& data, const NormStats& stats);
Eigen::VectorXd denormalize_target(const Eigen::VectorXd& target,
                                   const NormStats& stats);

inline std::size_t train_size(std::size_t n, double train_fraction) {
  return static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(n)));
}

/// Contiguous split: the first floor(fraction * n) rows train, the rest
/// test. No shuffling.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(std::span<const T> rows,
                                                double train_fraction = 0.8) {
  if (rows.size() < 2) throw ValidationError("split needs at least 2 rows");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train fraction must lie in (0, 1)");
  }
  const std::size_t cut = train_size(rows.size(), train_fraction);
  return {std::vector<T>(rows.begin(), rows.begin() + cut),
          std::vector<T>(rows.begin() + cut, rows.end())};
}

/// Log-Euler GBM path on a uniform grid starting at 0:
/// S_{i+1} = S_i exp((r - sigma^2/2) dt + sigma sqrt(dt) Z_i).
Eigen::VectorXd simulate_gbm(double spot, double rate, double vol,
                             const Eigen::VectorXd& grid, std::uint64_t seed);

}  // namespace fobsm

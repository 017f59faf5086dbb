#pragma once

// Independent reference computations used only by the tests. None of these
// call into the code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "fobsm/bsm.hpp"

namespace fobsm::testing {

/// Standard normal CDF by composite Simpson quadrature of the density on
/// [0, |x|] plus symmetry.
inline double simpson_norm_cdf(double x, int intervals = 20000) {
  const double a = std::abs(x);
  if (a == 0.0) return 0.5;
  const double h = a / intervals;
  auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
  double sum = pdf(0.0) + pdf(a);
  for (int i = 1; i < intervals; ++i) sum += pdf(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  const double half = sum * h / 3.0;
  return x > 0 ? 0.5 + half : 0.5 - half;
}

/// Gamma via upward recurrence to z >= 20 and the Stirling series for
/// ln Gamma there (truncation error below 1e-16 relative).
inline double stirling_gamma(double x) {
  double shift = 1.0;
  double z = x;
  while (z < 20.0) {
    shift *= z;
    z += 1.0;
  }
  const double z2 = z * z;
  const double series = 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) +
                        1.0 / (1260.0 * z * z2 * z2) - 1.0 / (1680.0 * z * z2 * z2 * z2) +
                        1.0 / (1188.0 * z * z2 * z2 * z2 * z2);
  const double log_gamma =
      (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * std::numbers::pi) + series;
  return std::exp(log_gamma) / shift;
}

struct MonteCarloEstimate {
  double mean;
  double std_error;
};

/// Discounted payoff of European options under GBM, sampled exactly at T
/// with antithetic pairs. The standard error is taken over pair averages.
inline MonteCarloEstimate monte_carlo_price(OptionKind kind, const OptionParams& p,
                                            std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal;
  const double drift = (p.rate() - 0.5 * p.vol() * p.vol()) * p.maturity();
  const double diffusion = p.vol() * std::sqrt(p.maturity());
  const double discount = std::exp(-p.rate() * p.maturity());
  auto payoff = [&](double terminal) {
    return kind == OptionKind::Call ? std::max(terminal - p.strike(), 0.0)
                                    : std::max(p.strike() - terminal, 0.0);
  };
  const std::size_t pairs = draws / 2;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double z = normal(engine);
    const double up = p.spot() * std::exp(drift + diffusion * z);
    const double down = p.spot() * std::exp(drift - diffusion * z);
    const double value = 0.5 * discount * (payoff(up) + payoff(down));
    sum += value;
    sum_sq += value * value;
  }
  const double n = static_cast<double>(pairs);
  const double mean = sum / n;
  const double variance = std::max(sum_sq / n - mean * mean, 0.0) * n / (n - 1.0);
  return {mean, std::sqrt(variance / n)};
}

struct FiniteDifference {
  Eigen::VectorXd gradient;
  /// False where the +-h stencil moves some hidden pre-activation across
  /// the ReLU kink; the difference quotient is meaningless there.
  std::vector<bool> smooth;
};

/// Central differences of the batch loss, with the network re-evaluated in
/// long double by a standalone loop over the flat parameter layout
/// (per layer: column-major fan_out x fan_in weights, then bias). Hidden
/// layers use ReLU, the output is linear, and the loss is
/// mse(pred, y) + lambda * mse(pred, anchor).
inline FiniteDifference extended_central_difference(
    const std::vector<Eigen::Index>& dims, const Eigen::VectorXd& params,
    const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& anchor,
    double lambda, double h = 1e-5) {
  using LD = long double;
  std::vector<LD> theta(params.data(), params.data() + params.size());

  auto loss = [&](std::vector<char>& mask) {
    mask.clear();
    LD data_term = 0.0L;
    LD anchor_term = 0.0L;
    for (Eigen::Index s = 0; s < x.rows(); ++s) {
      std::vector<LD> act(static_cast<std::size_t>(x.cols()));
      for (Eigen::Index c = 0; c < x.cols(); ++c) act[static_cast<std::size_t>(c)] = x(s, c);
      std::size_t offset = 0;
      for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto fan_in = static_cast<std::size_t>(dims[l]);
        const auto fan_out = static_cast<std::size_t>(dims[l + 1]);
        const bool hidden = l + 2 < dims.size();
        std::vector<LD> next(fan_out, 0.0L);
        for (std::size_t o = 0; o < fan_out; ++o) {
          LD z = theta[offset + fan_in * fan_out + o];
          for (std::size_t i = 0; i < fan_in; ++i) z += theta[offset + i * fan_out + o] * act[i];
          if (hidden) {
            mask.push_back(z > 0.0L ? 1 : 0);
            z = z > 0.0L ? z : 0.0L;
          }
          next[o] = z;
        }
        offset += fan_in * fan_out + fan_out;
        act = std::move(next);
      }
      const LD pred = act[0];
      data_term += (pred - y[s]) * (pred - y[s]);
      if (lambda != 0.0) anchor_term += (pred - anchor[s]) * (pred - anchor[s]);
    }
    const LD n = static_cast<LD>(x.rows());
    return data_term / n + static_cast<LD>(lambda) * anchor_term / n;
  };

  FiniteDifference out{Eigen::VectorXd(params.size()),
                       std::vector<bool>(static_cast<std::size_t>(params.size()), true)};
  std::vector<char> plus_mask;
  std::vector<char> minus_mask;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const LD saved = theta[i];
    theta[i] = saved + h;
    const LD plus = loss(plus_mask);
    theta[i] = saved - h;
    const LD minus = loss(minus_mask);
    theta[i] = saved;
    out.gradient[static_cast<Eigen::Index>(i)] =
        static_cast<double>((plus - minus) / (2.0L * static_cast<LD>(h)));
    out.smooth[i] = plus_mask == minus_mask;
  }
  return out;
}

/// Largest elementwise |a - b| / max(|a|, |b|, floor), skipping entries
/// where `use` is false (all entries when it is empty).
inline double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                 double floor, const std::vector<bool>& use = {}) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!use.empty() && !use[static_cast<std::size_t>(i)]) continue;
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

/// Random valid option parameters, occasionally on the T = 0 / sigma = 0
/// limits.
inline OptionParams random_params(std::mt19937_64& engine, bool allow_limits = true) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double spot = 1.0 + 199.0 * unit(engine);
  const double strike = 1.0 + 199.0 * unit(engine);
  double maturity = 3.0 * unit(engine);
  const double rate = -0.02 + 0.12 * unit(engine);
  double vol = unit(engine);
  if (allow_limits) {
    const double pick = unit(engine);
    if (pick < 0.02) maturity = 0.0;
    else if (pick < 0.04) vol = 0.0;
  } else {
    maturity = 0.05 + maturity;
    vol = 0.05 + vol;
  }
  return OptionParams(spot, strike, maturity, rate, vol);
}

}  // namespace fobsm::testing

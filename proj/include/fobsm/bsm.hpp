#pragma once

#include <Eigen/Core>

namespace fobsm {

enum class OptionKind { Call, Put };

/// Market inputs of a single European option.
///
/// Spot and strike must be strictly positive, maturity and volatility
/// non-negative, and every field finite. Construction throws
/// ValidationError otherwise.
class OptionParams {
 public:
  OptionParams(double spot, double strike, double maturity, double rate,
               double vol);

  double spot() const { return spot_; }
  double strike() const { return strike_; }
  double maturity() const { return maturity_; }
  double rate() const { return rate_; }
  double vol() const { return vol_; }

  friend bool operator==(const OptionParams&, const OptionParams&) = default;

 private:
  double spot_;
  double strike_;
  double maturity_;
  double rate_;
  double vol_;
};

struct DTerms {
  double d1;
  double d2;
};

/// Option value sampled on a uniform time-to-expiry grid starting at 0.
struct PricePath {
  Eigen::VectorXd tau;
  Eigen::VectorXd values;
  double delta_t = 0.0;
};

/// Standard normal CDF, evaluated through erfc so both tails keep full
/// relative precision.
double norm_cdf(double x);

/// d1 and d2 at time to expiry `tau`. Throws DegenerateInputError when
/// tau <= 0 or sigma <= 0.
DTerms d_terms(const OptionParams& p, double tau);

double price_call(const OptionParams& p);
double price_put(const OptionParams& p);
double price(OptionKind kind, const OptionParams& p);

/// numpy.linspace(0, stop, n): i * step for i < n - 1, last point == stop.
Eigen::VectorXd linspace_from_zero(double stop, Eigen::Index n);

/// Put value on linspace(0, T, n_grid). The tau == 0 point uses the
/// intrinsic limit max(K - S, 0). Throws DegenerateInputError when sigma or
/// T is below 1e-10, ValidationError when n_grid < 2.
PricePath put_path(const OptionParams& p, Eigen::Index n_grid);

inline constexpr double kDegenerateGuard = 1e-10;

}  // namespace fobsm

#include "fobsm/bsm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fobsm/errors.hpp"

namespace fobsm {

namespace {

void require_finite(double value, const char* name) {
  if (!std::isfinite(value)) {
    throw ValidationError(std::string(name) + " must be finite");
  }
}

// Closed-form put at tau > 0, sigma > 0.
double put_closed_form(const OptionParams& p, double tau) {
  const auto [d1, d2] = d_terms(p, tau);
  const double discounted = p.strike() * std::exp(-p.rate() * tau);
  return std::max(discounted * norm_cdf(-d2) - p.spot() * norm_cdf(-d1), 0.0);
}

double call_closed_form(const OptionParams& p, double tau) {
  const auto [d1, d2] = d_terms(p, tau);
  const double discounted = p.strike() * std::exp(-p.rate() * tau);
  return std::max(p.spot() * norm_cdf(d1) - discounted * norm_cdf(d2), 0.0);
}

bool is_limit(const OptionParams& p) {
  return p.maturity() <= 0.0 || p.vol() <= 0.0;
}

}  // namespace

OptionParams::OptionParams(double spot, double strike, double maturity,
                           double rate, double vol)
    : spot_(spot), strike_(strike), maturity_(maturity), rate_(rate),
      vol_(vol) {
  require_finite(spot, "spot");
  require_finite(strike, "strike");
  require_finite(maturity, "maturity");
  require_finite(rate, "rate");
  require_finite(vol, "vol");
  if (spot <= 0.0) throw ValidationError("spot must be > 0");
  if (strike <= 0.0) throw ValidationError("strike must be > 0");
  if (maturity < 0.0) throw ValidationError("maturity must be >= 0");
  if (vol < 0.0) throw ValidationError("vol must be >= 0");
}

double norm_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

DTerms d_terms(const OptionParams& p, double tau) {
  if (!(tau > 0.0)) throw DegenerateInputError("d_terms requires tau > 0");
  if (!(p.vol() > 0.0)) throw DegenerateInputError("d_terms requires vol > 0");
  const double vol_sqrt_tau = p.vol() * std::sqrt(tau);
  const double d1 = (std::log(p.spot() / p.strike()) +
                     (p.rate() + 0.5 * p.vol() * p.vol()) * tau) /
                    vol_sqrt_tau;
  return {d1, d1 - vol_sqrt_tau};
}

double price_call(const OptionParams& p) {
  if (is_limit(p)) {
    const double forward_intrinsic =
        p.spot() - p.strike() * std::exp(-p.rate() * p.maturity());
    return std::max(forward_intrinsic, 0.0);
  }
  return call_closed_form(p, p.maturity());
}

double price_put(const OptionParams& p) {
  if (is_limit(p)) {
    const double forward_intrinsic =
        p.strike() * std::exp(-p.rate() * p.maturity()) - p.spot();
    return std::max(forward_intrinsic, 0.0);
  }
  return put_closed_form(p, p.maturity());
}

double price(OptionKind kind, const OptionParams& p) {
  return kind == OptionKind::Call ? price_call(p) : price_put(p);
}

Eigen::VectorXd linspace_from_zero(double stop, Eigen::Index n) {
  Eigen::VectorXd grid(n);
  if (n == 0) return grid;
  if (n == 1) {
    grid[0] = 0.0;
    return grid;
  }
  const double step = stop / static_cast<double>(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) grid[i] = static_cast<double>(i) * step;
  grid[n - 1] = stop;
  return grid;
}

PricePath put_path(const OptionParams& p, Eigen::Index n_grid) {
  if (n_grid < 2) throw ValidationError("put_path needs at least 2 grid points");
  if (p.vol() < kDegenerateGuard || p.maturity() < kDegenerateGuard) {
    throw DegenerateInputError("put_path requires vol and maturity >= 1e-10");
  }
  PricePath path;
  path.tau = linspace_from_zero(p.maturity(), n_grid);
  path.delta_t = path.tau[1] - path.tau[0];
  path.values.resize(n_grid);
  path.values[0] = std::max(p.strike() - p.spot(), 0.0);
  for (Eigen::Index i = 1; i < n_grid; ++i) {
    path.values[i] = put_closed_form(p, path.tau[i]);
  }
  return path;
}

}  // namespace fobsm

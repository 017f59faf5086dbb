#pragma once

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "fobsm/errors.hpp"

namespace fobsm {

enum class OptimizerKind { Adam, Sgd, Rmsprop };

inline const char* to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Rmsprop: return "rmsprop";
  }
  return "unknown";
}

inline OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "rmsprop") return OptimizerKind::Rmsprop;
  throw ValidationError("unknown optimizer '" + name + "'");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;
  double epsilon = 1e-8;

  static OptimizerConfig defaults(OptimizerKind kind) {
    OptimizerConfig cfg;
    cfg.kind = kind;
    cfg.learning_rate = kind == OptimizerKind::Sgd ? 1e-2 : 1e-3;
    return cfg;
  }

  void validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ValidationError("adam betas must lie in [0, 1)");
    }
    if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("rho must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ValidationError("optimizer epsilon must be > 0");
  }
};

/// First-order update rules over a flat parameter vector.
///
///   sgd:     theta -= lr * g
///   rmsprop: v = rho v + (1 - rho) g^2;  theta -= lr * g / sqrt(v + eps)
///   adam:    bias-corrected moments;      theta -= lr * m_hat / (sqrt(v_hat) + eps)
template <typename Scalar>
class Optimizer {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Optimizer(const OptimizerConfig& cfg, Eigen::Index parameter_count)
      : cfg_((cfg.validate(), cfg)),
        first_(Vector::Zero(parameter_count)),
        second_(Vector::Zero(parameter_count)) {}

  const OptimizerConfig& config() const { return cfg_; }
  long steps() const { return steps_; }

  void step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads) {
    if (params.size() != first_.size() || grads.size() != first_.size()) {
      throw ShapeError("optimizer state, parameters and gradients differ in size");
    }
    ++steps_;
    const Scalar lr = static_cast<Scalar>(cfg_.learning_rate);
    const Scalar eps = static_cast<Scalar>(cfg_.epsilon);
    switch (cfg_.kind) {
      case OptimizerKind::Sgd:
        params -= lr * grads;
        break;
      case OptimizerKind::Rmsprop: {
        const Scalar rho = static_cast<Scalar>(cfg_.rho);
        second_ = rho * second_ + (Scalar(1) - rho) * grads.cwiseAbs2();
        params.array() -= lr * grads.array() / (second_.array() + eps).sqrt();
        break;
      }
      case OptimizerKind::Adam: {
        const Scalar b1 = static_cast<Scalar>(cfg_.beta1);
        const Scalar b2 = static_cast<Scalar>(cfg_.beta2);
        first_ = b1 * first_ + (Scalar(1) - b1) * grads;
        second_ = b2 * second_ + (Scalar(1) - b2) * grads.cwiseAbs2();
        const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(steps_));
        const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(steps_));
        params.array() -= lr * (first_.array() / c1) /
                          ((second_.array() / c2).sqrt() + eps);
        break;
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  Vector first_;
  Vector second_;
  long steps_ = 0;
};

}  // namespace fobsm

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "fobsm/errors.hpp"
#include "fobsm/mlp.hpp"
#include "fobsm/optimizer.hpp"
#include "fobsm/random.hpp"

namespace fobsm {

struct TrainConfig {
  int epochs = 500;
  Eigen::Index batch_size = 32;
  double validation_fraction = 0.2;
  OptimizerConfig optimizer = OptimizerConfig::defaults(OptimizerKind::Adam);
  int patience = 20;
  bool restore_best = true;
  double lambda = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("batch size must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
      throw ValidationError("validation fraction must lie in (0, 1)");
    }
    if (patience < 1) throw ValidationError("patience must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw ValidationError("lambda must be finite and >= 0");
    }
    optimizer.validate();
  }
};

/// Losses before training (`initial_*`) and after each completed epoch.
/// Epoch numbers are 1-based; train_loss[e - 1] belongs to epoch e.
struct TrainHistory {
  double initial_train_loss = 0.0;
  double initial_val_loss = 0.0;
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = 0;
  int stopped_epoch = 0;

  int completed_epochs() const { return static_cast<int>(train_loss.size()); }
};

/// Inputs (one sample per row), targets, and the optional composite-loss
/// anchor (empty for plain MSE).
template <typename Scalar>
struct TrainingSet {
  typename Mlp<Scalar>::Matrix features;
  typename Mlp<Scalar>::Vector target;
  typename Mlp<Scalar>::Vector anchor;

  Eigen::Index size() const { return features.rows(); }

  TrainingSet slice(Eigen::Index begin, Eigen::Index count) const {
    TrainingSet out{features.middleRows(begin, count), target.segment(begin, count),
                    {}};
    if (anchor.size() > 0) out.anchor = anchor.segment(begin, count);
    return out;
  }

  TrainingSet gather(const std::vector<Eigen::Index>& rows) const {
    const auto n = static_cast<Eigen::Index>(rows.size());
    TrainingSet out{typename Mlp<Scalar>::Matrix(n, features.cols()),
                    typename Mlp<Scalar>::Vector(n), {}};
    if (anchor.size() > 0) out.anchor.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index src = rows[static_cast<std::size_t>(i)];
      out.features.row(i) = features.row(src);
      out.target[i] = target[src];
      if (anchor.size() > 0) out.anchor[i] = anchor[src];
    }
    return out;
  }
};

template <typename Scalar>
struct TrainResult {
  Mlp<Scalar> model;
  TrainHistory history;
};

/// Number of trailing rows held out for validation.
inline Eigen::Index validation_rows(Eigen::Index n, double fraction) {
  return static_cast<Eigen::Index>(std::floor(fraction * static_cast<double>(n)));
}

template <typename Scalar>
Scalar dataset_loss(const Mlp<Scalar>& m, const TrainingSet<Scalar>& data,
                    Loss<Scalar> loss) {
  return batch_loss(m, data.features, data.target, data.anchor, loss);
}

/// Mini-batch training with a contiguous tail validation split and early
/// stopping on validation loss.
///
/// The last floor(validation_fraction * n) rows validate; the rest are
/// visited in a fresh per-epoch permutation drawn from the run seed. After
/// each epoch both partitions are evaluated in full. Training stops once
/// validation loss has not improved for `patience` epochs, and with
/// restore_best the best-epoch parameters are returned.
template <typename Scalar>
TrainResult<Scalar> train(Mlp<Scalar> model, const TrainingSet<Scalar>& data,
                          const TrainConfig& cfg) {
  cfg.validate();
  const Loss<Scalar> loss{static_cast<Scalar>(cfg.lambda)};
  if (loss.is_composite() && data.anchor.size() != data.size()) {
    throw ShapeError("composite loss needs one anchor value per row");
  }
  if (data.target.size() != data.size()) {
    throw ShapeError("target length does not match feature rows");
  }
  const Eigen::Index n_val = validation_rows(data.size(), cfg.validation_fraction);
  const Eigen::Index n_fit = data.size() - n_val;
  if (n_val < 1 || n_fit < 1) {
    throw ValidationError("training and validation partitions must be non-empty");
  }
  const TrainingSet<Scalar> fit = data.slice(0, n_fit);
  const TrainingSet<Scalar> val = data.slice(n_fit, n_val);

  Optimizer<Scalar> optimizer(cfg.optimizer, model.parameter_count());
  TrainHistory history;
  history.initial_train_loss = static_cast<double>(dataset_loss(model, fit, loss));
  history.initial_val_loss = static_cast<double>(dataset_loss(model, val, loss));

  auto best_params = model.parameters();
  double best_val = std::numeric_limits<double>::infinity();
  int wait = 0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_fit));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Engine engine = make_engine(cfg.seed, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), engine);

    for (Eigen::Index start = 0; start < n_fit; start += cfg.batch_size) {
      const auto stop = std::min(n_fit, start + cfg.batch_size);
      const TrainingSet<Scalar> batch = fit.gather(
          std::vector<Eigen::Index>(order.begin() + start, order.begin() + stop));
      const auto grad =
          backward(model, batch.features, batch.target, batch.anchor, loss);
      optimizer.step(model.parameters(), grad.gradient);
    }

    const double train_loss = static_cast<double>(dataset_loss(model, fit, loss));
    const double val_loss = static_cast<double>(dataset_loss(model, val, loss));
    history.train_loss.push_back(train_loss);
    history.val_loss.push_back(val_loss);
    history.stopped_epoch = epoch;

    if (val_loss < best_val) {
      best_val = val_loss;
      history.best_epoch = epoch;
      best_params = model.parameters();
      wait = 0;
    } else if (++wait >= cfg.patience) {
      break;
    }
  }

  if (cfg.restore_best && history.best_epoch > 0) {
    model.parameters() = best_params;
  }
  return {std::move(model), std::move(history)};
}

}  // namespace fobsm

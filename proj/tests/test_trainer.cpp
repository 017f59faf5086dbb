#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fobsm/trainer.hpp"

namespace fobsm {
namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

TrainingSet<double> toy_data(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  TrainingSet<double> data{Mat(n, 2), Vec(n), {}};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = unit(engine);
    const double b = unit(engine);
    data.features.row(i) << a, b;
    data.target[i] = std::sin(2.0 * a) + 0.5 * b * b + noise(engine);
  }
  return data;
}

TrainConfig quick_config(int epochs = 60) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.patience = 10;
  cfg.seed = 17;
  return cfg;
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = TrainConfig{};
  cfg.validation_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = TrainConfig{};
  cfg.lambda = -0.1;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(TrainingSet, SliceAndGather) {
  const auto data = toy_data(10, 1);
  const auto tail = data.slice(7, 3);
  EXPECT_EQ(tail.size(), 3);
  EXPECT_EQ(tail.features.row(0), data.features.row(7));
  const auto picked = data.gather({4, 0});
  EXPECT_EQ(picked.target[0], data.target[4]);
  EXPECT_EQ(picked.target[1], data.target[0]);
  EXPECT_EQ(picked.anchor.size(), 0);
}

TEST(Train, ReducesLossAndRecordsHistory) {
  const auto data = toy_data(400, 2);
  const auto result = train(init_mlp<double>({2, 16, 16, 1}, 3), data, quick_config());
  const auto& h = result.history;
  ASSERT_GE(h.completed_epochs(), 1);
  EXPECT_EQ(h.val_loss.size(), h.train_loss.size());
  EXPECT_EQ(h.stopped_epoch, h.completed_epochs());
  EXPECT_LT(h.train_loss.back(), h.initial_train_loss);
  EXPECT_GE(h.best_epoch, 1);
  EXPECT_LE(h.stopped_epoch, h.best_epoch + 10 + 1);
}

TEST(Train, ReturnsBestEpochWeights) {
  const auto data = toy_data(300, 4);
  auto cfg = quick_config(200);
  cfg.patience = 3;
  cfg.optimizer.learning_rate = 0.05;
  const auto result = train(init_mlp<double>({2, 16, 1}, 5), data, cfg);
  const auto& h = result.history;
  const double best = *std::min_element(h.val_loss.begin(), h.val_loss.end());
  EXPECT_EQ(h.val_loss[static_cast<std::size_t>(h.best_epoch - 1)], best);
  const Eigen::Index n_val = validation_rows(data.size(), cfg.validation_fraction);
  const auto val = data.slice(data.size() - n_val, n_val);
  EXPECT_EQ(dataset_loss(result.model, val, Loss<double>{}), best);
}

TEST(Train, PatienceStopsEarly) {
  const auto data = toy_data(200, 6);
  auto cfg = quick_config(500);
  cfg.patience = 2;
  cfg.optimizer.learning_rate = 0.5;
  const auto result = train(init_mlp<double>({2, 8, 1}, 7), data, cfg);
  EXPECT_LT(result.history.completed_epochs(), 500);
  EXPECT_EQ(result.history.stopped_epoch, result.history.best_epoch + 2);
}

TEST(Train, BitIdenticalForFixedSeed) {
  const auto data = toy_data(250, 8);
  const auto a = train(init_mlp<double>({2, 8, 8, 1}, 9), data, quick_config(20));
  const auto b = train(init_mlp<double>({2, 8, 8, 1}, 9), data, quick_config(20));
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.history.train_loss, b.history.train_loss);
  EXPECT_EQ(a.history.val_loss, b.history.val_loss);
}

TEST(Train, SeedChangesShuffle) {
  const auto data = toy_data(250, 8);
  auto other = quick_config(5);
  other.seed = 18;
  const auto a = train(init_mlp<double>({2, 8, 1}, 9), data, quick_config(5));
  const auto b = train(init_mlp<double>({2, 8, 1}, 9), data, other);
  EXPECT_NE(a.model.parameters(), b.model.parameters());
}

TEST(Train, WithoutRestoreKeepsLastWeights) {
  const auto data = toy_data(200, 10);
  auto cfg = quick_config(3);
  cfg.restore_best = false;
  const auto result = train(init_mlp<double>({2, 8, 1}, 11), data, cfg);
  const Eigen::Index n_val = validation_rows(data.size(), cfg.validation_fraction);
  const auto val = data.slice(data.size() - n_val, n_val);
  EXPECT_EQ(dataset_loss(result.model, val, Loss<double>{}), result.history.val_loss.back());
}

TEST(Train, CompositeLossNeedsAnchor) {
  auto data = toy_data(50, 12);
  auto cfg = quick_config(2);
  cfg.lambda = 0.5;
  EXPECT_THROW(train(init_mlp<double>({2, 4, 1}, 1), data, cfg), ShapeError);
  data.anchor = data.target;
  const auto result = train(init_mlp<double>({2, 4, 1}, 1), data, cfg);
  EXPECT_EQ(result.history.completed_epochs(), 2);
}

TEST(Train, EmptyPartition) {
  const auto data = toy_data(3, 13);
  EXPECT_THROW(train(init_mlp<double>({2, 4, 1}, 1), data, quick_config(1)), ValidationError);
}

}  // namespace
}  // namespace fobsm

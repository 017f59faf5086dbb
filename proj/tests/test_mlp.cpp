#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fobsm/mlp.hpp"
#include "oracles.hpp"

namespace fobsm {
namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Mat random_matrix(std::mt19937_64& engine, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Mat m(rows, cols);
  for (auto& x : m.reshaped()) x = normal(engine);
  return m;
}

TEST(Mlp, DefaultParameterCount) {
  const Mlp<double> m({2, 64, 64, 1});
  EXPECT_EQ(m.parameter_count(), 4417);
  EXPECT_EQ(m.layer_count(), 3u);
  EXPECT_EQ(m.activations()[0], Activation::Relu);
  EXPECT_EQ(m.activations()[2], Activation::Identity);
}

TEST(Mlp, RejectsBadDims) {
  EXPECT_THROW(Mlp<double>(std::vector<Eigen::Index>{2}), ValidationError);
  EXPECT_THROW(Mlp<double>({2, 0, 1}), ValidationError);
  EXPECT_THROW(Mlp<double>({2, 3, 1}, {Activation::Relu}), ValidationError);
}

TEST(Mlp, MapsShareFlatStorage) {
  Mlp<double> m({3, 4, 2});
  m.weight(0)(1, 2) = 7.0;
  m.bias(1)(1) = -2.0;
  EXPECT_EQ(m.parameters()[m.weight_offset(0) + 2 * 4 + 1], 7.0);
  EXPECT_EQ(m.parameters()[m.bias_offset(1) + 1], -2.0);
  EXPECT_EQ(m.parameters().size(), 3 * 4 + 4 + 4 * 2 + 2);
}

TEST(InitMlp, GlorotBoundsAndZeroBias) {
  const auto m = init_mlp<double>({2, 64, 64, 1}, 42);
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.dims()[l] + m.dims()[l + 1]));
    EXPECT_LE(m.weight(l).cwiseAbs().maxCoeff(), limit);
    EXPECT_GT(m.weight(l).cwiseAbs().maxCoeff(), 0.5 * limit);
    EXPECT_TRUE(m.bias(l).isZero(0.0));
  }
  EXPECT_TRUE(m.parameters().allFinite());
}

TEST(InitMlp, SeededDeterminism) {
  EXPECT_EQ(init_mlp<double>({2, 8, 1}, 3), init_mlp<double>({2, 8, 1}, 3));
  EXPECT_NE(init_mlp<double>({2, 8, 1}, 3).parameters(),
            init_mlp<double>({2, 8, 1}, 4).parameters());
}

TEST(Forward, HandComputedNetwork) {
  Mlp<double> m({2, 2, 1});
  m.weight(0) << 1.0, -1.0, 2.0, 0.5;
  m.bias(0) << 0.0, -3.0;
  m.weight(1) << 1.0, 2.0;
  m.bias(1) << 0.25;
  Mat x(2, 2);
  x << 1.0, 2.0,
       3.0, -1.0;
  // Row 0: hidden pre (-1, -0) -> relu (0, 0) -> 0.25
  // Row 1: hidden pre (4, 2.5) -> (4, 2.5) -> 4 + 5 + 0.25
  const Mat y = forward(m, x);
  EXPECT_EQ(y.rows(), 2);
  EXPECT_EQ(y(0, 0), 0.25);
  EXPECT_EQ(y(1, 0), 9.25);
  EXPECT_EQ(forward_sample(m, Vec(x.row(1).transpose())), 9.25);
}

TEST(Forward, ZeroNetworkOutputsZero) {
  const Mlp<double> m({2, 64, 64, 1});
  std::mt19937_64 engine(1);
  EXPECT_TRUE(forward(m, random_matrix(engine, 10, 2)).isZero(0.0));
}

TEST(Forward, ShapeErrors) {
  const Mlp<double> m({2, 3, 1});
  EXPECT_THROW(forward(m, Mat::Zero(4, 3)), ShapeError);
  EXPECT_THROW(forward_sample(m, Vec::Zero(1)), ShapeError);
}

TEST(Forward, FloatInstantiation) {
  const auto m = init_mlp<float>({2, 5, 1}, 1);
  const Eigen::MatrixXf x = Eigen::MatrixXf::Ones(3, 2);
  EXPECT_TRUE(forward(m, x).allFinite());
}

TEST(Mse, Examples) {
  EXPECT_EQ(mse<double>(Vec::Constant(3, 1.5), Vec::Constant(3, 1.5)), 0.0);
  EXPECT_EQ(mse<double>(Vec::Constant(1, 0.0), Vec::Constant(1, 2.0)), 4.0);
  EXPECT_EQ(mse<double>((Vec(2) << 1, 3).finished(), (Vec(2) << 2, 5).finished()), 2.5);
  EXPECT_THROW(mse<double>(Vec::Zero(2), Vec::Zero(3)), ShapeError);
  EXPECT_THROW(mse<double>(Vec(), Vec()), ShapeError);
}

TEST(CompositeLoss, Examples) {
  const Vec pred = Vec::Constant(1, 0.0);
  const Vec actual = Vec::Constant(1, 2.0);
  const Vec anchor = Vec::Constant(1, 1.0);
  EXPECT_EQ(composite_loss<double>(pred, actual, anchor, 1.0), 5.0);
  EXPECT_EQ(composite_loss<double>(actual, actual, actual, 3.0), 0.0);
  EXPECT_THROW(composite_loss<double>(pred, actual, anchor, -1.0), ValidationError);
  EXPECT_THROW(composite_loss<double>(pred, actual, Vec::Zero(2), 1.0), ShapeError);
}

TEST(CompositeLoss, ZeroLambdaIsBitwiseMse) {
  std::mt19937_64 engine(2);
  for (int i = 0; i < 50; ++i) {
    const Vec pred = random_matrix(engine, 17, 1);
    const Vec actual = random_matrix(engine, 17, 1);
    const Vec anchor = random_matrix(engine, 17, 1);
    EXPECT_EQ(composite_loss<double>(pred, actual, anchor, 0.0), mse<double>(pred, actual));
  }
}

TEST(Backward, ZeroNetworkOutputBiasGradient) {
  const Mlp<double> m({2, 4, 4, 1});
  const Mat x = Mat::Ones(5, 2);
  const Vec y = (Vec(5) << 1, 2, 3, -1, 0.5).finished();
  const auto g = backward(m, x, y, Vec(), Loss<double>{});
  EXPECT_DOUBLE_EQ(g.gradient[m.bias_offset(2)], -(2.0 / 5.0) * y.sum());
  EXPECT_DOUBLE_EQ(g.loss, y.squaredNorm() / 5.0);
  const auto doubled = backward(m, x, Vec(2.0 * y), Vec(), Loss<double>{});
  EXPECT_EQ(doubled.gradient[m.bias_offset(2)], 2.0 * g.gradient[m.bias_offset(2)]);
}

TEST(Backward, LossMatchesBatchLoss) {
  std::mt19937_64 engine(3);
  const auto m = init_mlp<double>({2, 8, 8, 1}, 5);
  const Mat x = random_matrix(engine, 16, 2);
  const Vec y = random_matrix(engine, 16, 1);
  const Vec a = random_matrix(engine, 16, 1);
  for (double lambda : {0.0, 0.7}) {
    const Loss<double> loss{lambda};
    EXPECT_EQ(backward(m, x, y, a, loss).loss, batch_loss(m, x, y, a, loss));
  }
}

TEST(Backward, BatchGradientIsMeanOfSampleGradients) {
  std::mt19937_64 engine(4);
  const auto m = init_mlp<double>({2, 6, 1}, 8);
  const Mat x = random_matrix(engine, 6, 2);
  const Vec y = random_matrix(engine, 6, 1);
  Vec mean = Vec::Zero(m.parameter_count());
  for (Eigen::Index i = 0; i < 6; ++i) {
    mean += backward(m, Mat(x.row(i)), Vec(y.segment(i, 1)), Vec(), Loss<double>{}).gradient;
  }
  mean /= 6.0;
  const Vec batch = backward(m, x, y, Vec(), Loss<double>{}).gradient;
  EXPECT_LE((batch - mean).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Backward, MatchesFiniteDifferences) {
  std::mt19937_64 engine(5);
  for (double lambda : {0.0, 0.5}) {
    auto m = init_mlp<double>({2, 8, 8, 1}, 11);
    std::normal_distribution<double> normal(0.0, 0.1);
    for (auto& b : m.parameters()) b += normal(engine);
    const Mat x = random_matrix(engine, 16, 2);
    const Vec y = random_matrix(engine, 16, 1);
    const Vec a = random_matrix(engine, 16, 1);
    const Loss<double> loss{lambda};
    const Vec analytic = backward(m, x, y, a, loss).gradient;
    const auto numeric =
        testing::extended_central_difference(m.dims(), m.parameters(), x, y, a, lambda);
    EXPECT_TRUE(std::all_of(numeric.smooth.begin(), numeric.smooth.end(),
                            [](bool b) { return b; }));
    EXPECT_LE(testing::max_relative_error(analytic, numeric.gradient, 1e-12), 1e-6);
  }
}

TEST(Backward, ShapeErrors) {
  const auto m = init_mlp<double>({2, 3, 1}, 1);
  EXPECT_THROW(backward(m, Mat::Zero(4, 2), Vec::Zero(3), Vec(), Loss<double>{}), ShapeError);
  EXPECT_THROW(backward(m, Mat::Zero(4, 2), Vec::Zero(4), Vec::Zero(2), Loss<double>{1.0}),
               ShapeError);
  EXPECT_THROW(backward(m, Mat::Zero(0, 2), Vec(), Vec(), Loss<double>{}), ShapeError);
}

TEST(Activation, StringRoundTrip) {
  EXPECT_EQ(activation_from_string(to_string(Activation::Relu)), Activation::Relu);
  EXPECT_EQ(activation_from_string(to_string(Activation::Identity)), Activation::Identity);
  EXPECT_THROW(activation_from_string("tanh"), ValidationError);
}

}  // namespace
}  // namespace fobsm

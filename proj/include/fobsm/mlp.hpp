#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fobsm/errors.hpp"
#include "fobsm/random.hpp"

namespace fobsm {

enum class Activation { Relu, Identity };

inline const char* to_string(Activation a) {
  return a == Activation::Relu ? "relu" : "identity";
}

inline Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "identity") return Activation::Identity;
  throw ValidationError("unknown activation '" + name + "'");
}

/// Fully connected feed-forward network.
///
/// All weights and biases live in one contiguous parameter vector, layer by
/// layer: the (fan_out x fan_in) column-major weight block followed by the
/// bias. weight(l) / bias(l) return Eigen maps into that storage, so
/// optimizers and gradient checks work on a single flat vector.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// ReLU on hidden layers, identity on the output; parameters zeroed.
  explicit Mlp(std::vector<Eigen::Index> dims)
      : Mlp(dims, default_activations(dims)) {}

  Mlp(std::vector<Eigen::Index> dims, std::vector<Activation> activations)
      : dims_(std::move(dims)), activations_(std::move(activations)) {
    if (dims_.size() < 2) throw ValidationError("an MLP needs at least 2 layer dims");
    for (auto d : dims_) {
      if (d < 1) throw ValidationError("layer dims must be >= 1");
    }
    if (activations_.size() != dims_.size() - 1) {
      throw ValidationError("need one activation per layer");
    }
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      offsets_.push_back(offset);
      offset += dims_[l + 1] * dims_[l] + dims_[l + 1];
    }
    params_ = Vector::Zero(offset);
  }

  const std::vector<Eigen::Index>& dims() const { return dims_; }
  const std::vector<Activation>& activations() const { return activations_; }
  std::size_t layer_count() const { return activations_.size(); }
  Eigen::Index parameter_count() const { return params_.size(); }
  Eigen::Index input_dim() const { return dims_.front(); }
  Eigen::Index output_dim() const { return dims_.back(); }

  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }

  Eigen::Map<Matrix> weight(std::size_t l) {
    return Eigen::Map<Matrix>(params_.data() + offsets_[l], dims_[l + 1], dims_[l]);
  }
  Eigen::Map<const Matrix> weight(std::size_t l) const {
    return Eigen::Map<const Matrix>(params_.data() + offsets_[l], dims_[l + 1], dims_[l]);
  }
  Eigen::Map<Vector> bias(std::size_t l) {
    return Eigen::Map<Vector>(params_.data() + bias_offset(l), dims_[l + 1]);
  }
  Eigen::Map<const Vector> bias(std::size_t l) const {
    return Eigen::Map<const Vector>(params_.data() + bias_offset(l), dims_[l + 1]);
  }

  Eigen::Index weight_offset(std::size_t l) const { return offsets_[l]; }
  Eigen::Index bias_offset(std::size_t l) const {
    return offsets_[l] + dims_[l + 1] * dims_[l];
  }

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  static std::vector<Activation> default_activations(
      const std::vector<Eigen::Index>& dims) {
    if (dims.size() < 2) return {};
    std::vector<Activation> acts(dims.size() - 1, Activation::Relu);
    acts.back() = Activation::Identity;
    return acts;
  }

  std::vector<Eigen::Index> dims_;
  std::vector<Activation> activations_;
  std::vector<Eigen::Index> offsets_;
  Vector params_;
};

/// Glorot-uniform weights in [-sqrt(6 / (fan_in + fan_out)), +...), zero
/// biases. Each layer draws from its own substream of `seed`.
template <typename Scalar>
Mlp<Scalar> init_mlp(std::vector<Eigen::Index> dims, std::uint64_t seed) {
  Mlp<Scalar> model(std::move(dims));
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    auto w = model.weight(l);
    const double limit =
        std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    Engine engine = make_engine(seed, l);
    // Row-major draw order, matching how weights are serialized.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = static_cast<Scalar>(uniform(engine, -limit, limit));
      }
    }
  }
  return model;
}

namespace detail {

template <typename Derived>
void apply_activation(Activation a, Eigen::MatrixBase<Derived>& z) {
  if (a == Activation::Relu) z = z.cwiseMax(typename Derived::Scalar(0));
}

template <typename Scalar>
void check_input(const Mlp<Scalar>& m, Eigen::Index cols) {
  if (cols != m.input_dim()) {
    throw ShapeError("input has " + std::to_string(cols) +
                     " features, model expects " + std::to_string(m.input_dim()));
  }
}

}  // namespace detail

/// Batched forward pass. `inputs` holds one sample per row; the result has
/// one prediction row per sample.
template <typename Scalar>
typename Mlp<Scalar>::Matrix forward(
    const Mlp<Scalar>& m,
    const Eigen::Ref<const typename Mlp<Scalar>::Matrix>& inputs) {
  detail::check_input(m, inputs.cols());
  typename Mlp<Scalar>::Matrix h = inputs.transpose();
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    typename Mlp<Scalar>::Matrix z = m.weight(l) * h;
    z.colwise() += m.bias(l);
    detail::apply_activation(m.activations()[l], z);
    h = std::move(z);
  }
  return h.transpose();
}

/// Single-sample forward pass with a scalar output.
template <typename Scalar>
Scalar forward_sample(const Mlp<Scalar>& m,
                      const Eigen::Ref<const typename Mlp<Scalar>::Vector>& x) {
  if (m.output_dim() != 1) throw ShapeError("scalar forward needs output dim 1");
  detail::check_input(m, x.size());
  const typename Mlp<Scalar>::Matrix row = x.transpose();
  return forward(m, row)(0, 0);
}

template <typename Scalar>
Scalar mse(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& pred,
           const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& actual) {
  if (pred.size() != actual.size()) {
    throw ShapeError("mse length mismatch: " + std::to_string(pred.size()) +
                     " vs " + std::to_string(actual.size()));
  }
  if (pred.size() < 1) throw ShapeError("mse needs at least one element");
  return (pred - actual).squaredNorm() / static_cast<Scalar>(pred.size());
}

/// mse(pred, actual) + lambda * mse(pred, anchor). lambda == 0 returns
/// mse(pred, actual) itself and ignores the anchor.
template <typename Scalar>
Scalar composite_loss(
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& pred,
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& actual,
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& anchor,
    Scalar lambda) {
  if (!(lambda >= Scalar(0))) throw ValidationError("lambda must be >= 0");
  const Scalar data_term = mse<Scalar>(pred, actual);
  if (lambda == Scalar(0)) return data_term;
  return data_term + lambda * mse<Scalar>(pred, anchor);
}

/// Loss selector for training and backprop. lambda > 0 requires an anchor
/// vector alongside the targets.
template <typename Scalar>
struct Loss {
  Scalar lambda = Scalar(0);

  bool is_composite() const { return lambda > Scalar(0); }
};

template <typename Scalar>
struct LossAndGradient {
  Scalar loss;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gradient;
};

/// Loss of a scalar-output network on a batch. `anchor` may be empty when
/// the loss is plain MSE.
template <typename Scalar>
Scalar batch_loss(const Mlp<Scalar>& m,
                  const Eigen::Ref<const typename Mlp<Scalar>::Matrix>& inputs,
                  const Eigen::Ref<const typename Mlp<Scalar>::Vector>& target,
                  const Eigen::Ref<const typename Mlp<Scalar>::Vector>& anchor,
                  Loss<Scalar> loss) {
  const typename Mlp<Scalar>::Vector pred = forward(m, inputs).col(0);
  if (!loss.is_composite()) return mse<Scalar>(pred, target);
  return composite_loss<Scalar>(pred, target, anchor, loss.lambda);
}

/// Reverse-mode gradient of the mean batch loss with respect to every
/// parameter, laid out like Mlp::parameters().
template <typename Scalar>
LossAndGradient<Scalar> backward(
    const Mlp<Scalar>& m,
    const Eigen::Ref<const typename Mlp<Scalar>::Matrix>& inputs,
    const Eigen::Ref<const typename Mlp<Scalar>::Vector>& target,
    const Eigen::Ref<const typename Mlp<Scalar>::Vector>& anchor,
    Loss<Scalar> loss) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  using Vector = typename Mlp<Scalar>::Vector;
  if (m.output_dim() != 1) throw ShapeError("backward needs output dim 1");
  detail::check_input(m, inputs.cols());
  const Eigen::Index n = inputs.rows();
  if (n < 1) throw ShapeError("empty batch");
  if (target.size() != n) throw ShapeError("target length does not match batch");
  if (loss.is_composite() && anchor.size() != n) {
    throw ShapeError("anchor length does not match batch");
  }

  const std::size_t layers = m.layer_count();
  // activations[l] is the input of layer l; activations[layers] the output.
  std::vector<Matrix> activations(layers + 1);
  std::vector<Matrix> pre(layers);
  activations[0] = inputs.transpose();
  for (std::size_t l = 0; l < layers; ++l) {
    pre[l] = m.weight(l) * activations[l];
    pre[l].colwise() += m.bias(l);
    activations[l + 1] = pre[l];
    detail::apply_activation(m.activations()[l], activations[l + 1]);
  }

  const Vector pred = activations[layers].row(0).transpose();
  const Scalar two_over_n = Scalar(2) / static_cast<Scalar>(n);
  Vector dpred = two_over_n * (pred - target);
  Scalar value = mse<Scalar>(pred, target);
  if (loss.is_composite()) {
    dpred += loss.lambda * two_over_n * (pred - anchor);
    value = composite_loss<Scalar>(pred, target, anchor, loss.lambda);
  }

  LossAndGradient<Scalar> out{value, Vector::Zero(m.parameter_count())};
  Matrix delta = dpred.transpose();
  for (std::size_t l = layers; l-- > 0;) {
    if (m.activations()[l] == Activation::Relu) {
      delta = delta.cwiseProduct(
          (pre[l].array() > Scalar(0)).template cast<Scalar>().matrix());
    }
    Eigen::Map<Matrix>(out.gradient.data() + m.weight_offset(l), m.dims()[l + 1],
                       m.dims()[l]) = delta * activations[l].transpose();
    Eigen::Map<Vector>(out.gradient.data() + m.bias_offset(l), m.dims()[l + 1]) =
        delta.rowwise().sum();
    if (l > 0) delta = m.weight(l).transpose() * delta;
  }
  return out;
}

}  // namespace fobsm

#pragma once

// Deterministic MLP + SGD training loop with the epoch-indexed xi schedule
// wired into the loss.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cfl/data.hpp"
#include "cfl/error.hpp"
#include "cfl/gradients.hpp"
#include "cfl/loss.hpp"
#include "cfl/metrics.hpp"
#include "cfl/rng.hpp"
#include "cfl/schedule.hpp"

namespace cfl {

/// Fully connected layer, weight stored row-major as out x in.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Multi-layer perceptron with ReLU hidden activations and linear logits.
class MlpModel {
 public:
  MlpModel() = default;

  /// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static MlpModel create(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                         std::size_t num_classes, std::uint64_t seed) {
    detail::require(input_dim >= 1, "input dimension must be >= 1");
    detail::require(num_classes >= 2, "need at least two classes");
    for (std::size_t h : hidden) detail::require(h >= 1, "hidden layer width must be >= 1");

    std::vector<std::size_t> dims{input_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(num_classes);

    Rng rng(seed, streams::kInit);
    MlpModel model;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      DenseLayer layer{dims[l], dims[l + 1], {}, {}};
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
      layer.weight.resize(layer.in * layer.out);
      layer.bias.resize(layer.out);
      for (double& w : layer.weight) w = rng.uniform(-bound, bound);
      for (double& b : layer.bias) b = rng.uniform(-bound, bound);
      model.layers_.push_back(std::move(layer));
    }
    return model;
  }

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t num_classes() const { return layers_.empty() ? 0 : layers_.back().out; }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  std::vector<double> forward(std::span<const double> x) const {
    detail::require(x.size() == input_dim(), "feature dimension " + std::to_string(x.size()) +
                                                 " does not match model input " +
                                                 std::to_string(input_dim()));
    std::vector<double> act(x.begin(), x.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      act = apply(layers_[l], act, l + 1 < layers_.size());
    }
    return act;
  }

  std::size_t predict(std::span<const double> x) const {
    const auto logits = forward(x);
    return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) -
                                    logits.begin());
  }

  bool all_finite() const {
    for (const auto& layer : layers_) {
      for (double w : layer.weight)
        if (!std::isfinite(w)) return false;
      for (double b : layer.bias)
        if (!std::isfinite(b)) return false;
    }
    return true;
  }

  static std::vector<double> apply(const DenseLayer& layer, std::span<const double> input,
                                   bool relu) {
    std::vector<double> out(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double sum = layer.bias[o];
      const double* w = &layer.weight[o * layer.in];
      for (std::size_t i = 0; i < layer.in; ++i) sum += w[i] * input[i];
      out[o] = relu ? std::max(sum, 0.0) : sum;
    }
    return out;
  }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double base_lr = 0.1;
  std::size_t warmup_epochs = 0;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  LossSpec loss;
  /// xi source. Its cyclical factor is the one the trainer uses; the trainer
  /// never reads loss.cyclical_factor.
  CycleSchedule schedule;

  void validate() const {
    detail::require(epochs >= 1, "epochs must be >= 1");
    detail::require(batch_size >= 1, "batch_size must be >= 1");
    detail::require(std::isfinite(base_lr) && base_lr > 0.0, "base_lr must be positive");
    detail::require(warmup_epochs < epochs, "warmup_epochs must be < epochs");
    detail::require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
    detail::require(std::isfinite(weight_decay) && weight_decay >= 0.0,
                    "weight_decay must be non-negative");
    detail::require(schedule.total_epochs == epochs, "schedule.total_epochs must equal epochs");
    loss.validate();
    schedule.validate();
  }
};

/// Linear warmup from base_lr / 100 to base_lr, then half-cosine decay.
inline double lr_at(const TrainConfig& config, std::size_t epoch) {
  config.validate();
  detail::require(epoch < config.epochs, "epoch " + std::to_string(epoch) + " out of range");
  const double base = config.base_lr;
  if (epoch < config.warmup_epochs) {
    const double start = base / 100.0;
    return start + (base - start) * static_cast<double>(epoch) /
                       static_cast<double>(config.warmup_epochs);
  }
  const double t = static_cast<double>(epoch - config.warmup_epochs) /
                   static_cast<double>(config.epochs - config.warmup_epochs);
  return base * (1.0 + std::cos(std::numbers::pi * t)) / 2.0;
}

struct TraceRow {
  std::size_t epoch = 0;
  double xi = 0.0;
  double lr = 0.0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

using TrainTrace = std::vector<TraceRow>;

struct TrainResult {
  MlpModel model;
  TrainTrace trace;
};

/// Argmax predictions of `model` on `data`, scored against the training counts.
inline MetricsReport evaluate(const MlpModel& model, const SampleBatch& data,
                              const ImbalanceProfile& train_counts) {
  data.validate();
  detail::require(data.dim == model.input_dim(), "dataset dimension does not match model input");
  detail::require(data.num_classes <= model.num_classes(),
                  "dataset has more classes than the model outputs");
  std::vector<std::size_t> predictions(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) predictions[i] = model.predict(data.row(i));
  return score(predictions, data.labels, train_counts);
}

inline double accuracy(const MlpModel& model, const SampleBatch& data) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (model.predict(data.row(i)) == data.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace detail {

struct LayerGrads {
  std::vector<double> weight;
  std::vector<double> bias;
};

// Accumulates d(loss)/d(params) for one sample into `grads`, returns the loss.
// Non-finite logits give NaN and leave `grads` untouched.
inline double backprop_sample(const MlpModel& model, std::span<const double> x, std::size_t label,
                              const LossSpec& spec, double xi, std::vector<LayerGrads>& grads) {
  const auto& layers = model.layers();
  std::vector<std::vector<double>> acts{std::vector<double>(x.begin(), x.end())};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    acts.push_back(MlpModel::apply(layers[l], acts.back(), l + 1 < layers.size()));
  }
  for (double z : acts.back())
    if (!std::isfinite(z)) return std::numeric_limits<double>::quiet_NaN();
  auto [loss, delta] = loss_and_grad<double>(acts.back(), label, spec, xi);

  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseLayer& layer = layers[l];
    const std::vector<double>& input = acts[l];
    auto& g = grads[l];
    for (std::size_t o = 0; o < layer.out; ++o) {
      g.bias[o] += delta[o];
      double* gw = &g.weight[o * layer.in];
      for (std::size_t i = 0; i < layer.in; ++i) gw[i] += delta[o] * input[i];
    }
    if (l == 0) break;
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = &layer.weight[o * layer.in];
      for (std::size_t i = 0; i < layer.in; ++i) prev[i] += w[i] * delta[o];
    }
    // ReLU: the stored activation is zero exactly where the unit was inactive.
    for (std::size_t i = 0; i < layer.in; ++i)
      if (input[i] <= 0.0) prev[i] = 0.0;
    delta = std::move(prev);
  }
  return loss;
}

}  // namespace detail

/// Runs `config.epochs` epochs of minibatch SGD with momentum and weight decay.
///
/// xi is evaluated once per epoch from config.schedule and held fixed for all
/// batches of that epoch. Sample order is reshuffled each epoch from a stream
/// that depends only on the seed. `on_epoch`, if set, sees each trace row as
/// it is produced.
inline TrainResult train(MlpModel model, const SampleBatch& train_data,
                         const SampleBatch& test_data, const TrainConfig& config,
                         const std::function<void(const TraceRow&)>& on_epoch = {}) {
  config.validate();
  train_data.validate();
  test_data.validate();
  detail::require(train_data.dim == model.input_dim(),
                  "training feature dimension does not match model input");
  detail::require(test_data.dim == model.input_dim(),
                  "test feature dimension does not match model input");
  detail::require(train_data.num_classes <= model.num_classes() &&
                      test_data.num_classes <= model.num_classes(),
                  "dataset has more classes than the model outputs");

  auto& layers = model.layers();
  std::vector<detail::LayerGrads> grads(layers.size()), velocity(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    velocity[l].weight.assign(layers[l].weight.size(), 0.0);
    velocity[l].bias.assign(layers[l].bias.size(), 0.0);
  }

  Rng shuffle_rng(config.seed, streams::kShuffle);
  std::vector<std::size_t> order(train_data.size());
  const std::size_t num_batches = (order.size() + config.batch_size - 1) / config.batch_size;

  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double xi = config.schedule.xi(epoch);
    const double lr = lr_at(config, epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < num_batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(begin + config.batch_size, order.size());
      for (std::size_t l = 0; l < layers.size(); ++l) {
        grads[l].weight.assign(layers[l].weight.size(), 0.0);
        grads[l].bias.assign(layers[l].bias.size(), 0.0);
      }
      double batch_sum = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = order[k];
        batch_sum += detail::backprop_sample(model, train_data.row(i), train_data.labels[i],
                                             config.loss, xi, grads);
      }
      if (!std::isfinite(batch_sum)) throw NumericalAbort(epoch, b, "loss is not finite");
      loss_sum += batch_sum;

      const double inv_batch = 1.0 / static_cast<double>(end - begin);
      auto step = [&](std::vector<double>& param, const std::vector<double>& grad,
                      std::vector<double>& vel) {
        for (std::size_t p = 0; p < param.size(); ++p) {
          const double g = grad[p] * inv_batch + config.weight_decay * param[p];
          vel[p] = config.momentum * vel[p] + g;
          param[p] -= lr * vel[p];
        }
      };
      for (std::size_t l = 0; l < layers.size(); ++l) {
        step(layers[l].weight, grads[l].weight, velocity[l].weight);
        step(layers[l].bias, grads[l].bias, velocity[l].bias);
      }
      if (!model.all_finite()) throw NumericalAbort(epoch, b, "parameter became non-finite");
    }

    TraceRow row{epoch, xi, lr, loss_sum / static_cast<double>(order.size()),
                 accuracy(model, test_data)};
    if (on_epoch) on_epoch(row);
    result.trace.push_back(row);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace cfl

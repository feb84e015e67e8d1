#pragma once

// SGD training loop, evaluation and NaN diagnostics.

#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "axh/blocks.hpp"
#include "axh/pipeline/checkpoint.hpp"
#include "axh/pipeline/config.hpp"
#include "axh/pipeline/data.hpp"

namespace axh {

/// SGD with momentum and L2 weight decay:
///   g = grad + wd * w;  v = momentum * v + g;  w -= lr * v
template <class T>
class SGD {
 public:
  SGD(std::vector<NamedParam<T>> params, double momentum, double weight_decay);
  void step(double lr);
  void zero_grad();
  const std::vector<NamedParam<T>>& params() const { return params_; }

 private:
  std::vector<NamedParam<T>> params_;
  std::vector<std::vector<T>> velocity_;
  double momentum_;
  double weight_decay_;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0;
  double train_loss = 0;
  double train_acc = 0;            // running accuracy over the epoch's (augmented) batches
  std::optional<double> val_acc;   // eval mode
};

/// Top-1 accuracy in eval mode (running bn statistics, no augmentation).
template <class T>
double evaluate(Network<T>& net, const Dataset& data, const NormStats& stats, std::size_t batch_size = 256);

/// Name of the first layer whose output contains a non-finite value for
/// this batch, or of the first non-finite parameter; empty if none.
template <class T>
std::string first_nonfinite_layer(Network<T>& net, const Tensor<T>& images);

template <class T>
class Trainer {
 public:
  /// Throws ConfigError for an invalid config or when the dataset class count
  /// differs from the architecture's.
  Trainer(const TrainConfig& cfg, const DataSplit& data);

  /// One pass over the shuffled training split. Throws NumericError naming the
  /// first non-finite layer when the loss is not finite.
  EpochMetrics run_epoch(std::size_t epoch, bool with_validation = true);

  /// All epochs; writes metrics.csv and checkpoint.bin into out_dir after each
  /// epoch when out_dir is non-empty.
  std::vector<EpochMetrics> fit(const std::filesystem::path& out_dir = {},
                                const std::function<void(const EpochMetrics&)>& on_epoch = {});

  Network<T>& net() { return net_; }
  const TrainConfig& config() const { return cfg_; }
  Checkpoint checkpoint(std::size_t epoch);

 private:
  TrainConfig cfg_;
  const DataSplit& data_;
  Network<T> net_;
  std::optional<SGD<T>> opt_;
  std::mt19937_64 rng_;
};

std::string metrics_csv_header();
std::string metrics_csv_line(const EpochMetrics& m);

}  // namespace axh

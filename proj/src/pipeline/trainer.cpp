#include "axh/pipeline/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "axh/errors.hpp"
#include "axh/pipeline/schedule.hpp"

namespace axh {

template <class T>
SGD<T>::SGD(std::vector<NamedParam<T>> params, double momentum, double weight_decay)
    : params_(std::move(params)), momentum_(momentum), weight_decay_(weight_decay) {
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.emplace_back(p.tensor.numel(), T(0));
}

template <class T>
void SGD<T>::step(double lr) {
  const T m = static_cast<T>(momentum_);
  const T wd = static_cast<T>(weight_decay_);
  const T rate = static_cast<T>(lr);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& t = params_[i].tensor;
    if (!t.has_grad()) continue;
    auto w = t.mutable_data();
    const auto g = t.grad();
    auto& v = velocity_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = m * v[k] + g[k] + wd * w[k];
      w[k] -= rate * v[k];
    }
  }
}

template <class T>
void SGD<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

namespace {

template <class T>
std::size_t correct_predictions(const Tensor<T>& logits, std::span<const std::int32_t> labels) {
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  const auto v = logits.data();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = v.subspan(i * k, k);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == static_cast<std::size_t>(labels[i])) ++hits;
  }
  return hits;
}

template <class T>
bool all_finite(std::span<const T> v) {
  return std::all_of(v.begin(), v.end(), [](T x) { return std::isfinite(x); });
}

struct FoundNonFinite {
  std::string layer;
};

}  // namespace

template <class T>
double evaluate(Network<T>& net, const Dataset& data, const NormStats& stats, std::size_t batch_size) {
  if (data.num_classes != net.config().num_classes)
    throw ConfigError("dataset has " + std::to_string(data.num_classes) + " classes, network predicts " +
                      std::to_string(net.config().num_classes));
  if (data.size() == 0) return 0.0;
  if (data.height != net.config().input_size.h || data.width != net.config().input_size.w)
    throw ConfigError("dataset images are " + std::to_string(data.height) + "x" + std::to_string(data.width) +
                      ", network expects " + std::to_string(net.config().input_size.h) + "x" +
                      std::to_string(net.config().input_size.w));
  NoGradGuard no_grad;
  std::size_t hits = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto b = to_batch<T>(subset(data, idx), stats);
    hits += correct_predictions(net.forward(b.images, false), b.labels);
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

template <class T>
std::string first_nonfinite_layer(Network<T>& net, const Tensor<T>& images) {
  NoGradGuard no_grad;
  if (!all_finite(images.data())) return "input";
  // batch statistics as in training, without touching the running statistics
  auto reg = net.registry();
  std::vector<std::vector<T>> saved;
  for (const auto& b : reg.buffers) saved.push_back(*b.values);
  std::string found;
  try {
    net.forward(images, true, [](const std::string& layer, const Tensor<T>& out) {
      if (!all_finite(out.data())) throw FoundNonFinite{layer};
    });
  } catch (const FoundNonFinite& f) {
    found = f.layer;
  }
  for (std::size_t i = 0; i < reg.buffers.size(); ++i) *reg.buffers[i].values = saved[i];
  if (!found.empty()) return found;
  for (const auto& p : reg.params)
    if (!all_finite(p.tensor.data())) return p.name;
  return {};
}

template <class T>
Trainer<T>::Trainer(const TrainConfig& cfg, const DataSplit& data)
    : cfg_(cfg), data_(data), net_((validate_train_config(cfg), cfg.arch), cfg.seed), rng_(cfg.seed ^ 0x9e3779b97f4a7c15ULL) {
  if (data.train.num_classes != cfg.arch.num_classes)
    throw ConfigError("dataset has " + std::to_string(data.train.num_classes) + " classes, arch has " +
                      std::to_string(cfg.arch.num_classes));
  if (data.train.height != cfg.arch.input_size.h || data.train.width != cfg.arch.input_size.w)
    throw ConfigError("dataset images are " + std::to_string(data.train.height) + "x" +
                      std::to_string(data.train.width) + ", arch input is " +
                      std::to_string(cfg.arch.input_size.h) + "x" + std::to_string(cfg.arch.input_size.w));
  opt_.emplace(net_.registry().params, cfg.momentum, cfg.weight_decay);
}

template <class T>
EpochMetrics Trainer<T>::run_epoch(std::size_t epoch, bool with_validation) {
  EpochMetrics m;
  m.epoch = epoch;
  m.lr = lr_schedule(epoch, cfg_);
  const Dataset& train = data_.train;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);

  double loss_sum = 0;
  std::size_t hits = 0;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
    Dataset raw = subset(train, std::span<const std::size_t>(order).subspan(start, end - start));
    if (cfg_.augment) raw = augment(raw, rng_);
    const auto batch = to_batch<T>(raw, data_.stats);

    opt_->zero_grad();
    const auto logits = net_.forward(batch.images, true);
    const auto loss = softmax_cross_entropy(logits, std::span<const std::int32_t>(batch.labels));
    const double l = static_cast<double>(loss.item());
    if (!std::isfinite(l)) {
      const auto layer = first_nonfinite_layer(net_, batch.images);
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                         std::to_string(start) + "; first non-finite layer: " +
                         (layer.empty() ? std::string("loss") : layer));
    }
    backward(loss);
    opt_->step(m.lr);
    loss_sum += l * static_cast<double>(end - start);
    hits += correct_predictions(logits, batch.labels);
  }
  m.train_loss = loss_sum / static_cast<double>(train.size());
  m.train_acc = static_cast<double>(hits) / static_cast<double>(train.size());
  if (with_validation && data_.test.size() > 0) m.val_acc = evaluate(net_, data_.test, data_.stats);
  return m;
}

template <class T>
Checkpoint Trainer<T>::checkpoint(std::size_t epoch) {
  Checkpoint c = snapshot(net_, data_.stats);
  c.epoch = epoch;
  c.config_text = train_config_to_text(cfg_);
  std::ostringstream rs;
  rs << rng_;
  c.rng_state = rs.str();
  return c;
}

template <class T>
std::vector<EpochMetrics> Trainer<T>::fit(const std::filesystem::path& out_dir,
                                          const std::function<void(const EpochMetrics&)>& on_epoch) {
  std::ofstream csv;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    csv.open(out_dir / "metrics.csv", std::ios::trunc);
    if (!csv) throw FormatError("cannot write " + (out_dir / "metrics.csv").string());
    csv << metrics_csv_header() << '\n';
  }
  std::vector<EpochMetrics> history;
  for (std::size_t e = 0; e < cfg_.epochs; ++e) {
    history.push_back(run_epoch(e));
    if (!out_dir.empty()) {
      csv << metrics_csv_line(history.back()) << '\n' << std::flush;
      save_checkpoint(out_dir / "checkpoint.bin", checkpoint(e));
    }
    if (on_epoch) on_epoch(history.back());
  }
  return history;
}

std::string metrics_csv_header() { return "epoch,lr,train_loss,val_acc"; }

std::string metrics_csv_line(const EpochMetrics& m) {
  std::ostringstream os;
  os.precision(9);
  os << m.epoch << ',' << m.lr << ',' << m.train_loss << ',';
  if (m.val_acc) os << *m.val_acc;
  return os.str();
}

#define AXH_INSTANTIATE(T)                                                                 \
  template class SGD<T>;                                                                   \
  template class Trainer<T>;                                                               \
  template double evaluate<T>(Network<T>&, const Dataset&, const NormStats&, std::size_t); \
  template std::string first_nonfinite_layer<T>(Network<T>&, const Tensor<T>&);

AXH_INSTANTIATE(float)
AXH_INSTANTIATE(double)
#undef AXH_INSTANTIATE

}  // namespace axh

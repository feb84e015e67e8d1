#pragma once

// Differentiable tensor operations. All of them record a backward rule when
// grad mode is on and an input requires grad. Image tensors are N,C,H,W.

#include <cstdint>
#include <span>
#include <vector>

#include "axh/tensor.hpp"

namespace axh {

struct Hw {
  std::size_t h = 1;
  std::size_t w = 1;
  friend bool operator==(const Hw&, const Hw&) = default;
};

/// Output extent of a cross-correlation along one axis.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad);

/// Cross-correlation (no kernel flip). kernel is [C_out, C_in, kh, kw].
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, Hw stride, Hw padding);

/// y[n,:] = W x[n,:] + b with x [N,d], W [k,d], b [k] (b may be undefined).
template <class T>
Tensor<T> matmul_affine(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> scale(const Tensor<T>& a, T factor);
/// Sum of all elements, shape [1].
template <class T>
Tensor<T> sum(const Tensor<T>& a);

template <class T>
Tensor<T> relu(const Tensor<T>& x);

/// Running statistics and hyperparameters of one batchnorm layer.
template <class T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);

  explicit BatchNormState(std::size_t channels = 0)
      : running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

/// Batch normalization over the channel axis of N,C,H,W. In training mode the
/// batch statistics are used and the running statistics updated (unbiased
/// variance); otherwise the running statistics are used.
template <class T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      BatchNormState<T>& state, bool training);

/// N,C,H,W -> N,C
template <class T>
Tensor<T> global_avg_pool(const Tensor<T>& x);

/// Inserts zero channels: N,C,H,W -> N,before+C+after,H,W.
template <class T>
Tensor<T> pad_channels(const Tensor<T>& x, std::size_t before, std::size_t after);

/// Row-wise softmax of [N,K] logits (values only, not recorded).
template <class T>
std::vector<T> softmax_rows(const Tensor<T>& logits);

/// Mean over the batch of -log softmax(logits)[label]; shape [1].
template <class T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> labels);

namespace instrument {

/// While alive on a thread, conv2d and matmul_affine run their direct-loop
/// reference paths, and every op counts the multiply-adds (one per kernel tap
/// per output, padded taps included) or elementwise operations it executes.
class CountingScope {
 public:
  CountingScope();
  ~CountingScope();
  CountingScope(const CountingScope&) = delete;
  CountingScope& operator=(const CountingScope&) = delete;

  std::uint64_t count() const;

 private:
  bool previous_;
  std::uint64_t start_;
};

bool counting();

}  // namespace instrument

}  // namespace axh

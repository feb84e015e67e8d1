#pragma once

// Layers binding the hypercomplex weight synthesis to tensor execution.

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "axh/hyperalgebra.hpp"
#include "axh/ops.hpp"

namespace axh {

enum class LayerKind { conv, qconv, vconv, axial_v_h, axial_v_w, dense, phm_dense, batchnorm, relu, pool };

std::string_view kind_name(LayerKind kind);

/// While alive on a thread, layers are built with zero-filled kernels and
/// dense weights instead of random initialization (L and PHM I matrices keep
/// their initial values). For cost analysis of large networks.
class ShapeOnlyScope {
 public:
  ShapeOnlyScope();
  ~ShapeOnlyScope();
  ShapeOnlyScope(const ShapeOnlyScope&) = delete;
  ShapeOnlyScope& operator=(const ShapeOnlyScope&) = delete;

 private:
  bool previous_;
};

bool shape_only();

/// Channel grouping of a layer kind: 4 for quaternion, 3 for vectormap and
/// axial vectormap, 1 otherwise.
std::size_t algebra_dim(LayerKind kind);

bool is_conv(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  Hw kernel{1, 1};
  Hw stride{1, 1};
  Hw padding{0, 0};
  std::size_t phm_n = 0;  // phm_dense only
};

/// Throws ConfigError when the channel/feature counts are not divisible by the
/// layer's grouping or an axial layer has the wrong kernel orientation.
void validate_layer_spec(const LayerSpec& spec);

/// Learnable scalars owned by a layer with this spec.
std::size_t layer_param_count(const LayerSpec& spec);

template <class T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;
};

/// Non-learnable state that still belongs in a checkpoint (batchnorm running stats).
template <class T>
struct NamedBuffer {
  std::string name;
  std::vector<T>* values;
};

template <class T>
struct ParamRegistry {
  std::vector<NamedParam<T>> params;
  std::vector<NamedBuffer<T>> buffers;

  void add(std::string name, Tensor<T> t) { params.push_back({std::move(name), std::move(t)}); }
  void add_buffer(std::string name, std::vector<T>* v) { buffers.push_back({std::move(name), v}); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.tensor.numel();
    return n;
  }
  /// Parameters whose name starts with `prefix`.
  std::vector<NamedParam<T>> with_prefix(std::string_view prefix) const;
};

/// Quaternion convolution: one real conv2d with the synthesized 4x4-block kernel.
template <class T>
Tensor<T> qconv2d_forward(const Tensor<T>& x, const QuaternionKernel<T>& k, Hw stride, Hw padding);

/// Vectormap convolution with an L-scaled circulant kernel. `kernel` must be
/// one of (3,3), (3,1), (1,3), (1,1) and match the component kernels.
template <class T>
Tensor<T> vconv_forward(const Tensor<T>& x, const VectormapKernel<T>& k, Hw kernel, Hw stride, Hw padding);

/// y = H x + b with H synthesized from the current A_i, I_i. The input is read
/// as n contiguous parts (Q_in = Q_r + Q_w + ...) and the output likewise.
template <class T>
Tensor<T> phm_dense_forward(const Tensor<T>& x, const PHMWeight<T>& w);

/// Real, quaternion, vectormap or axial-vectormap convolution without bias.
template <class T>
class ConvLayer {
 public:
  ConvLayer() = default;
  ConvLayer(const LayerSpec& spec, std::mt19937_64& rng);

  Tensor<T> forward(const Tensor<T>& x) const;
  /// The dense real kernel this layer currently executes.
  Tensor<T> synthesized_kernel() const;

  const LayerSpec& spec() const { return spec_; }
  /// Shared kernels (1, 3 or 4 of them), [C_out/n, C_in/n, kh, kw] each.
  const std::vector<Tensor<T>>& components() const { return components_; }
  const Tensor<T>& l_matrix() const { return l_; }
  QuaternionKernel<T> quaternion_kernel() const;
  VectormapKernel<T> vectormap_kernel() const;

  void collect(ParamRegistry<T>& reg, const std::string& prefix) const;

 private:
  LayerSpec spec_;
  std::vector<Tensor<T>> components_;
  Tensor<T> l_;
};

template <class T>
class BatchNormLayer {
 public:
  BatchNormLayer() = default;
  explicit BatchNormLayer(std::size_t channels);

  Tensor<T> forward(const Tensor<T>& x, bool training);
  void collect(ParamRegistry<T>& reg, const std::string& prefix);
  std::size_t channels() const { return gamma_.numel(); }
  Tensor<T>& gamma() { return gamma_; }
  Tensor<T>& beta() { return beta_; }
  BatchNormState<T>& state() { return state_; }

 private:
  Tensor<T> gamma_;
  Tensor<T> beta_;
  BatchNormState<T> state_;
};

template <class T>
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::size_t in_features, std::size_t out_features, std::mt19937_64& rng);
  Tensor<T> forward(const Tensor<T>& x) const { return matmul_affine(x, weight_, bias_); }
  void collect(ParamRegistry<T>& reg, const std::string& prefix) const;
  LayerSpec spec() const;

 private:
  Tensor<T> weight_;
  Tensor<T> bias_;
};

template <class T>
class PHMDenseLayer {
 public:
  PHMDenseLayer() = default;
  PHMDenseLayer(std::size_t n, std::size_t in_features, std::size_t out_features, std::mt19937_64& rng);
  Tensor<T> forward(const Tensor<T>& x) const { return phm_dense_forward(x, weight_); }
  void collect(ParamRegistry<T>& reg, const std::string& prefix) const;
  LayerSpec spec() const;
  const PHMWeight<T>& weight() const { return weight_; }

 private:
  PHMWeight<T> weight_;
};

}  // namespace axh

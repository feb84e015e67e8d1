#include "axh/layers.hpp"

#include <cmath>
#include <string>

#include "axh/errors.hpp"

namespace axh {

namespace {
thread_local bool g_shape_only = false;
}  // namespace

ShapeOnlyScope::ShapeOnlyScope() : previous_(g_shape_only) { g_shape_only = true; }
ShapeOnlyScope::~ShapeOnlyScope() { g_shape_only = previous_; }
bool shape_only() { return g_shape_only; }

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::qconv: return "qconv";
    case LayerKind::vconv: return "vconv";
    case LayerKind::axial_v_h: return "axial_v_h";
    case LayerKind::axial_v_w: return "axial_v_w";
    case LayerKind::dense: return "dense";
    case LayerKind::phm_dense: return "phm_dense";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::relu: return "relu";
    case LayerKind::pool: return "pool";
  }
  return "?";
}

std::size_t algebra_dim(LayerKind kind) {
  switch (kind) {
    case LayerKind::qconv: return 4;
    case LayerKind::vconv:
    case LayerKind::axial_v_h:
    case LayerKind::axial_v_w: return 3;
    default: return 1;
  }
}

bool is_conv(LayerKind kind) {
  return kind == LayerKind::conv || kind == LayerKind::qconv || kind == LayerKind::vconv ||
         kind == LayerKind::axial_v_h || kind == LayerKind::axial_v_w;
}

void validate_layer_spec(const LayerSpec& s) {
  const auto name = std::string(kind_name(s.kind));
  if (s.in_channels == 0 || s.out_channels == 0) throw ConfigError(name + ": channel counts must be positive");
  if (is_conv(s.kind)) {
    const std::size_t n = algebra_dim(s.kind);
    if (s.in_channels % n != 0 || s.out_channels % n != 0)
      throw ConfigError(name + ": channels " + std::to_string(s.in_channels) + "->" + std::to_string(s.out_channels) +
                        " not divisible by " + std::to_string(n));
    if (s.kernel.h == 0 || s.kernel.w == 0 || s.stride.h == 0 || s.stride.w == 0)
      throw ConfigError(name + ": kernel and stride must be positive");
    if (s.kind == LayerKind::axial_v_h && !(s.kernel == Hw{3, 1}))
      throw ConfigError("axial_v_h needs a 3x1 kernel");
    if (s.kind == LayerKind::axial_v_w && !(s.kernel == Hw{1, 3}))
      throw ConfigError("axial_v_w needs a 1x3 kernel");
    if (s.kind == LayerKind::vconv) {
      const Hw k = s.kernel;
      if (!(k == Hw{3, 3} || k == Hw{3, 1} || k == Hw{1, 3} || k == Hw{1, 1}))
        throw ConfigError("vconv kernel must be 3x3, 3x1, 1x3 or 1x1");
    }
  }
  if (s.kind == LayerKind::phm_dense) {
    if (s.phm_n == 0 || s.in_channels % s.phm_n != 0 || s.out_channels % s.phm_n != 0)
      throw ConfigError("phm_dense: features " + std::to_string(s.in_channels) + "->" +
                        std::to_string(s.out_channels) + " not divisible by n=" + std::to_string(s.phm_n));
  }
}

std::size_t layer_param_count(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::conv:
    case LayerKind::qconv:
    case LayerKind::vconv:
    case LayerKind::axial_v_h:
    case LayerKind::axial_v_w: {
      const std::size_t n = algebra_dim(s.kind);
      const std::size_t kernels = s.kernel.h * s.kernel.w * s.in_channels * s.out_channels / n;
      return n == 3 ? kernels + 9 : kernels;
    }
    case LayerKind::dense: return s.in_channels * s.out_channels + s.out_channels;
    case LayerKind::phm_dense: return phm_param_count(s.phm_n, s.out_channels, s.in_channels);
    case LayerKind::batchnorm: return 2 * s.out_channels;
    case LayerKind::relu:
    case LayerKind::pool: return 0;
  }
  return 0;
}

template <class T>
std::vector<NamedParam<T>> ParamRegistry<T>::with_prefix(std::string_view prefix) const {
  std::vector<NamedParam<T>> out;
  for (const auto& p : params)
    if (std::string_view(p.name).substr(0, prefix.size()) == prefix) out.push_back(p);
  return out;
}

namespace {

void check_grouping(const Shape& x, std::size_t n, const char* what) {
  if (x.size() != 4) throw DimensionError(std::string(what) + ": input must be N,C,H,W");
  if (x[1] % n != 0)
    throw ConfigError(std::string(what) + ": " + std::to_string(x[1]) + " input channels not divisible by " +
                      std::to_string(n));
}

}  // namespace

template <class T>
Tensor<T> qconv2d_forward(const Tensor<T>& x, const QuaternionKernel<T>& k, Hw stride, Hw padding) {
  check_grouping(x.shape(), 4, "qconv2d");
  return conv2d(x, quaternion_weight_matrix(k), stride, padding);
}

template <class T>
Tensor<T> vconv_forward(const Tensor<T>& x, const VectormapKernel<T>& k, Hw kernel, Hw stride, Hw padding) {
  check_grouping(x.shape(), 3, "vconv");
  if (!(kernel == Hw{3, 3} || kernel == Hw{3, 1} || kernel == Hw{1, 3} || kernel == Hw{1, 1}))
    throw ConfigError("vconv kernel must be 3x3, 3x1, 1x3 or 1x1");
  if (k.a.dim(2) != kernel.h || k.a.dim(3) != kernel.w)
    throw DimensionError("vconv: component kernels are " + std::to_string(k.a.dim(2)) + "x" +
                         std::to_string(k.a.dim(3)) + ", requested " + std::to_string(kernel.h) + "x" +
                         std::to_string(kernel.w));
  return conv2d(x, vectormap_weight_matrix(k), stride, padding);
}

template <class T>
Tensor<T> phm_dense_forward(const Tensor<T>& x, const PHMWeight<T>& w) {
  if (x.ndim() != 2) throw DimensionError("phm_dense: input must be [N, d]");
  if (x.dim(1) % w.n != 0)
    throw ConfigError("phm_dense: " + std::to_string(x.dim(1)) + " input features not divisible by n=" +
                      std::to_string(w.n));
  return matmul_affine(x, phm_synthesize(w), w.bias);
}

template <class T>
ConvLayer<T>::ConvLayer(const LayerSpec& spec, std::mt19937_64& rng) : spec_(spec) {
  validate_layer_spec(spec);
  if (!is_conv(spec.kind)) throw ConfigError("ConvLayer needs a convolution kind");
  const std::size_t n = algebra_dim(spec.kind);
  const Shape comp{spec.out_channels / n, spec.in_channels / n, spec.kernel.h, spec.kernel.w};
  const std::size_t taps = spec.kernel.h * spec.kernel.w;
  const std::size_t fan_in = spec.in_channels / n * taps;
  const std::size_t fan_out = spec.out_channels / n * taps;
  if (shape_only()) {
    for (std::size_t i = 0; i < n; ++i) components_.push_back(Tensor<T>::zeros(comp, true));
    if (n == 3) {
      std::vector<T> l;
      for (const auto& row : kVectormapInitialL)
        for (double v : row) l.push_back(static_cast<T>(v));
      l_ = Tensor<T>::from({3, 3}, std::move(l), true);
    }
  } else if (n == 4) {
    components_ = init_quaternion_kernel<T>(comp, fan_in, fan_out, rng).components();
  } else if (n == 3) {
    auto k = init_vectormap<T>(comp, fan_in, fan_out, rng);
    components_ = k.components();
    l_ = k.l;
  } else {
    std::normal_distribution<double> g(0.0, std::sqrt(hypercomplex_init_variance(fan_in, fan_out)));
    std::vector<T> w(shape_numel(comp));
    for (auto& v : w) v = static_cast<T>(g(rng));
    components_ = {Tensor<T>::from(comp, std::move(w), true)};
  }
}

template <class T>
Tensor<T> ConvLayer<T>::synthesized_kernel() const {
  switch (algebra_dim(spec_.kind)) {
    case 4: return quaternion_weight_matrix(quaternion_kernel());
    case 3: return vectormap_weight_matrix(vectormap_kernel());
    default: return components_.at(0);
  }
}

template <class T>
Tensor<T> ConvLayer<T>::forward(const Tensor<T>& x) const {
  switch (algebra_dim(spec_.kind)) {
    case 4: return qconv2d_forward(x, quaternion_kernel(), spec_.stride, spec_.padding);
    case 3: return vconv_forward(x, vectormap_kernel(), spec_.kernel, spec_.stride, spec_.padding);
    default: return conv2d(x, components_.at(0), spec_.stride, spec_.padding);
  }
}

template <class T>
QuaternionKernel<T> ConvLayer<T>::quaternion_kernel() const {
  if (components_.size() != 4) throw ConfigError("not a quaternion convolution");
  return {components_[0], components_[1], components_[2], components_[3]};
}

template <class T>
VectormapKernel<T> ConvLayer<T>::vectormap_kernel() const {
  if (components_.size() != 3) throw ConfigError("not a vectormap convolution");
  return {components_[0], components_[1], components_[2], l_};
}

template <class T>
void ConvLayer<T>::collect(ParamRegistry<T>& reg, const std::string& prefix) const {
  static const char* qnames[] = {"r", "i", "j", "k"};
  static const char* vnames[] = {"a", "b", "c"};
  const std::size_t n = components_.size();
  for (std::size_t i = 0; i < n; ++i)
    reg.add(prefix + "." + (n == 4 ? qnames[i] : n == 3 ? vnames[i] : "weight"), components_[i]);
  if (l_.defined()) reg.add(prefix + ".L", l_);
}

template <class T>
BatchNormLayer<T>::BatchNormLayer(std::size_t channels)
    : gamma_(Tensor<T>::full({channels}, T(1), true)), beta_(Tensor<T>::zeros({channels}, true)), state_(channels) {}

template <class T>
Tensor<T> BatchNormLayer<T>::forward(const Tensor<T>& x, bool training) {
  return batchnorm2d(x, gamma_, beta_, state_, training);
}

template <class T>
void BatchNormLayer<T>::collect(ParamRegistry<T>& reg, const std::string& prefix) {
  reg.add(prefix + ".gamma", gamma_);
  reg.add(prefix + ".beta", beta_);
  reg.add_buffer(prefix + ".running_mean", &state_.running_mean);
  reg.add_buffer(prefix + ".running_var", &state_.running_var);
}

template <class T>
DenseLayer<T>::DenseLayer(std::size_t in_features, std::size_t out_features, std::mt19937_64& rng) {
  bias_ = Tensor<T>::zeros({out_features}, true);
  if (shape_only()) {
    weight_ = Tensor<T>::zeros({out_features, in_features}, true);
    return;
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(in_features + out_features));
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<T> w(in_features * out_features);
  for (auto& v : w) v = static_cast<T>(u(rng));
  weight_ = Tensor<T>::from({out_features, in_features}, std::move(w), true);
}

template <class T>
void DenseLayer<T>::collect(ParamRegistry<T>& reg, const std::string& prefix) const {
  reg.add(prefix + ".weight", weight_);
  reg.add(prefix + ".bias", bias_);
}

template <class T>
LayerSpec DenseLayer<T>::spec() const {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.in_channels = weight_.dim(1);
  s.out_channels = weight_.dim(0);
  return s;
}

template <class T>
PHMDenseLayer<T>::PHMDenseLayer(std::size_t n, std::size_t in_features, std::size_t out_features,
                                std::mt19937_64& rng)
    : weight_(init_phm<T>(n, out_features, in_features, rng)) {}

template <class T>
void PHMDenseLayer<T>::collect(ParamRegistry<T>& reg, const std::string& prefix) const {
  for (std::size_t i = 0; i < weight_.n; ++i) reg.add(prefix + ".A" + std::to_string(i), weight_.a_list[i]);
  for (std::size_t i = 0; i < weight_.n; ++i) reg.add(prefix + ".I" + std::to_string(i), weight_.i_list[i]);
  reg.add(prefix + ".bias", weight_.bias);
}

template <class T>
LayerSpec PHMDenseLayer<T>::spec() const {
  LayerSpec s;
  s.kind = LayerKind::phm_dense;
  s.in_channels = weight_.in_features();
  s.out_channels = weight_.out_features();
  s.phm_n = weight_.n;
  return s;
}

#define AXH_INSTANTIATE(T)                                                                       \
  template struct ParamRegistry<T>;                                                              \
  template Tensor<T> qconv2d_forward<T>(const Tensor<T>&, const QuaternionKernel<T>&, Hw, Hw);   \
  template Tensor<T> vconv_forward<T>(const Tensor<T>&, const VectormapKernel<T>&, Hw, Hw, Hw);  \
  template Tensor<T> phm_dense_forward<T>(const Tensor<T>&, const PHMWeight<T>&);                \
  template class ConvLayer<T>;                                                                   \
  template class BatchNormLayer<T>;                                                              \
  template class DenseLayer<T>;                                                                  \
  template class PHMDenseLayer<T>;

AXH_INSTANTIATE(float)
AXH_INSTANTIATE(double)
#undef AXH_INSTANTIATE

}  // namespace axh

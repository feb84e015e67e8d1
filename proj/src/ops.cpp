#include "axh/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "axh/errors.hpp"
#include "axh/simd/kernels.hpp"

namespace axh {

namespace instrument {
namespace {
thread_local bool g_counting = false;
thread_local std::uint64_t g_count = 0;
}  // namespace

CountingScope::CountingScope() : previous_(g_counting), start_(g_count) { g_counting = true; }
CountingScope::~CountingScope() { g_counting = previous_; }
std::uint64_t CountingScope::count() const { return g_count - start_; }
bool counting() { return g_counting; }

namespace {
void add_count(std::uint64_t n) {
  if (g_counting) g_count += n;
}
}  // namespace
}  // namespace instrument

using simd::Trans;

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (stride == 0) throw ContractError("convolution stride must be >= 1");
  if (kernel > in + 2 * pad)
    throw ContractError("kernel extent " + std::to_string(kernel) + " exceeds padded input extent " +
                        std::to_string(in + 2 * pad));
  return (in + 2 * pad - kernel) / stride + 1;
}

namespace {

struct ConvGeom {
  std::size_t n, ci, h, w, co, kh, kw, sh, sw, ph, pw, ho, wo;
  std::size_t patch() const { return ci * kh * kw; }
  std::size_t out_plane() const { return ho * wo; }
  bool pointwise() const { return kh == 1 && kw == 1 && sh == 1 && sw == 1 && ph == 0 && pw == 0; }
};

template <class T>
void im2col(const ConvGeom& g, const T* x, T* col) {
  for (std::size_t c = 0; c < g.ci; ++c)
    for (std::size_t ki = 0; ki < g.kh; ++ki)
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        T* row = col + ((c * g.kh + ki) * g.kw + kj) * g.out_plane();
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.sh + ki) - static_cast<std::ptrdiff_t>(g.ph);
          T* dst = row + oh * g.wo;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(dst, dst + g.wo, T(0));
            continue;
          }
          const T* src = x + (c * g.h + static_cast<std::size_t>(ih)) * g.w;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * g.sw + kj) - static_cast<std::ptrdiff_t>(g.pw);
            dst[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.w)) ? T(0) : src[iw];
          }
        }
      }
}

template <class T>
void col2im_add(const ConvGeom& g, const T* col, T* dx) {
  for (std::size_t c = 0; c < g.ci; ++c)
    for (std::size_t ki = 0; ki < g.kh; ++ki)
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const T* row = col + ((c * g.kh + ki) * g.kw + kj) * g.out_plane();
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.sh + ki) - static_cast<std::ptrdiff_t>(g.ph);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) continue;
          T* dst = dx + (c * g.h + static_cast<std::size_t>(ih)) * g.w;
          const T* src = row + oh * g.wo;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * g.sw + kj) - static_cast<std::ptrdiff_t>(g.pw);
            if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.w)) dst[iw] += src[ow];
          }
        }
      }
}

// Direct-loop path used under instrument::CountingScope.
template <class T>
void conv_direct_counting(const ConvGeom& g, const T* x, const T* k, T* y) {
  std::uint64_t macs = 0;
  for (std::size_t n = 0; n < g.n; ++n)
    for (std::size_t o = 0; o < g.co; ++o)
      for (std::size_t oh = 0; oh < g.ho; ++oh)
        for (std::size_t ow = 0; ow < g.wo; ++ow) {
          T acc = 0;
          for (std::size_t c = 0; c < g.ci; ++c)
            for (std::size_t ki = 0; ki < g.kh; ++ki)
              for (std::size_t kj = 0; kj < g.kw; ++kj) {
                ++macs;
                const std::ptrdiff_t ih =
                    static_cast<std::ptrdiff_t>(oh * g.sh + ki) - static_cast<std::ptrdiff_t>(g.ph);
                const std::ptrdiff_t iw =
                    static_cast<std::ptrdiff_t>(ow * g.sw + kj) - static_cast<std::ptrdiff_t>(g.pw);
                if (ih < 0 || iw < 0 || ih >= static_cast<std::ptrdiff_t>(g.h) ||
                    iw >= static_cast<std::ptrdiff_t>(g.w))
                  continue;
                acc += x[((n * g.ci + c) * g.h + static_cast<std::size_t>(ih)) * g.w + static_cast<std::size_t>(iw)] *
                       k[((o * g.ci + c) * g.kh + ki) * g.kw + kj];
              }
          y[((n * g.co + o) * g.ho + oh) * g.wo + ow] = acc;
        }
  instrument::add_count(macs);
}

void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.size() != rank)
    throw DimensionError(std::string(what) + " must have rank " + std::to_string(rank) + ", got " + shape_str(s));
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, Hw stride, Hw padding) {
  require_rank(input.shape(), 4, "conv2d input");
  require_rank(kernel.shape(), 4, "conv2d kernel");
  if (input.dim(1) != kernel.dim(1))
    throw DimensionError("conv2d: input has " + std::to_string(input.dim(1)) + " channels, kernel expects " +
                         std::to_string(kernel.dim(1)));
  ConvGeom g{input.dim(0), input.dim(1), input.dim(2), input.dim(3), kernel.dim(0), kernel.dim(2), kernel.dim(3),
             stride.h, stride.w, padding.h, padding.w, 0, 0};
  g.ho = conv_out_extent(g.h, g.kh, g.sh, g.ph);
  g.wo = conv_out_extent(g.w, g.kw, g.sw, g.pw);

  std::vector<T> out(g.n * g.co * g.out_plane());
  const T* x = input.data().data();
  const T* k = kernel.data().data();
  const auto& kt = simd::kernels<T>();
  if (instrument::counting()) {
    conv_direct_counting(g, x, k, out.data());
  } else {
    std::vector<T> col(g.pointwise() ? 0 : g.patch() * g.out_plane());
    for (std::size_t n = 0; n < g.n; ++n) {
      const T* xn = x + n * g.ci * g.h * g.w;
      const T* b = xn;
      if (!g.pointwise()) {
        im2col(g, xn, col.data());
        b = col.data();
      }
      kt.gemm(Trans::No, Trans::No, g.co, g.out_plane(), g.patch(), T(1), k, g.patch(), b, g.out_plane(), T(0),
              out.data() + n * g.co * g.out_plane(), g.out_plane());
    }
  }

  auto in_node = input.node();
  auto k_node = kernel.node();
  return make_result<T>(
      {g.n, g.co, g.ho, g.wo}, std::move(out), {input, kernel},
      [g, in_node, k_node](const Node<T>& o) {
        const auto& kt = simd::kernels<T>();
        const T* gy = o.grad.data();
        const T* x = in_node->data.data();
        std::vector<T> col(g.pointwise() ? 0 : g.patch() * g.out_plane());
        if (k_node->requires_grad) {
          T* gk = k_node->grad_buffer();
          for (std::size_t n = 0; n < g.n; ++n) {
            const T* xn = x + n * g.ci * g.h * g.w;
            const T* b = xn;
            if (!g.pointwise()) {
              im2col(g, xn, col.data());
              b = col.data();
            }
            kt.gemm(Trans::No, Trans::Yes, g.co, g.patch(), g.out_plane(), T(1), gy + n * g.co * g.out_plane(),
                    g.out_plane(), b, g.out_plane(), T(1), gk, g.patch());
          }
        }
        if (in_node->requires_grad) {
          T* gx = in_node->grad_buffer();
          const T* k = k_node->data.data();
          for (std::size_t n = 0; n < g.n; ++n) {
            T* gxn = gx + n * g.ci * g.h * g.w;
            if (g.pointwise()) {
              kt.gemm(Trans::Yes, Trans::No, g.patch(), g.out_plane(), g.co, T(1), k, g.patch(),
                      gy + n * g.co * g.out_plane(), g.out_plane(), T(1), gxn, g.out_plane());
            } else {
              kt.gemm(Trans::Yes, Trans::No, g.patch(), g.out_plane(), g.co, T(1), k, g.patch(),
                      gy + n * g.co * g.out_plane(), g.out_plane(), T(0), col.data(), g.out_plane());
              col2im_add(g, col.data(), gxn);
            }
          }
        }
      },
      "conv2d");
}

template <class T>
Tensor<T> matmul_affine(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank(x.shape(), 2, "affine input");
  require_rank(weight.shape(), 2, "affine weight");
  const std::size_t n = x.dim(0), d = x.dim(1), k = weight.dim(0);
  if (weight.dim(1) != d)
    throw DimensionError("affine: input has " + std::to_string(d) + " features, weight expects " +
                         std::to_string(weight.dim(1)));
  if (bias.defined() && (bias.ndim() != 1 || bias.dim(0) != k))
    throw DimensionError("affine: bias shape " + shape_str(bias.shape()) + " does not match " + std::to_string(k) +
                         " outputs");
  std::vector<T> y(n * k);
  const T* xv = x.data().data();
  const T* wv = weight.data().data();
  if (instrument::counting()) {
    std::uint64_t macs = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t r = 0; r < k; ++r) {
        T acc = 0;
        for (std::size_t c = 0; c < d; ++c, ++macs) acc += wv[r * d + c] * xv[i * d + c];
        y[i * k + r] = acc;
      }
    instrument::add_count(macs);
  } else {
    simd::kernels<T>().gemm(Trans::No, Trans::Yes, n, k, d, T(1), xv, d, wv, d, T(0), y.data(), k);
  }
  if (bias.defined())
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t r = 0; r < k; ++r) y[i * k + r] += bias.data()[r];

  auto xn = x.node();
  auto wn = weight.node();
  auto bn = bias.defined() ? bias.node() : nullptr;
  return make_result<T>(
      {n, k}, std::move(y), {x, weight, bias},
      [n, d, k, xn, wn, bn](const Node<T>& o) {
        const auto& kt = simd::kernels<T>();
        const T* gy = o.grad.data();
        if (xn->requires_grad)
          kt.gemm(Trans::No, Trans::No, n, d, k, T(1), gy, k, wn->data.data(), d, T(1), xn->grad_buffer(), d);
        if (wn->requires_grad)
          kt.gemm(Trans::Yes, Trans::No, k, d, n, T(1), gy, k, xn->data.data(), d, T(1), wn->grad_buffer(), d);
        if (bn && bn->requires_grad) {
          T* gb = bn->grad_buffer();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t r = 0; r < k; ++r) gb[r] += gy[i * k + r];
        }
      },
      "matmul_affine");
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> y(a.data().begin(), a.data().end());
  const auto bv = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  auto an = a.node();
  auto bn = b.node();
  return make_result<T>(
      a.shape(), std::move(y), {a, b},
      [an, bn](const Node<T>& o) {
        for (const auto& p : {an, bn}) {
          if (!p->requires_grad) continue;
          T* g = p->grad_buffer();
          for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
        }
      },
      "add");
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> y(a.numel());
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  auto an = a.node();
  auto bn = b.node();
  return make_result<T>(
      a.shape(), std::move(y), {a, b},
      [an, bn](const Node<T>& o) {
        if (an->requires_grad) {
          T* g = an->grad_buffer();
          for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i] * bn->data[i];
        }
        if (bn->requires_grad) {
          T* g = bn->grad_buffer();
          for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i] * an->data[i];
        }
      },
      "mul");
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> y(a.data().begin(), a.data().end());
  for (auto& v : y) v *= factor;
  auto an = a.node();
  return make_result<T>(
      a.shape(), std::move(y), {a},
      [an, factor](const Node<T>& o) {
        T* g = an->grad_buffer();
        for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += factor * o.grad[i];
      },
      "scale");
}

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.data()) s += v;
  auto an = a.node();
  return make_result<T>(
      {1}, {s}, {a},
      [an](const Node<T>& o) {
        T* g = an->grad_buffer();
        for (std::size_t i = 0; i < an->data.size(); ++i) g[i] += o.grad[0];
      },
      "sum");
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> y(x.data().begin(), x.data().end());
  for (auto& v : y) v = v < T(0) ? T(0) : v;
  instrument::add_count(y.size());
  auto xn = x.node();
  return make_result<T>(
      x.shape(), std::move(y), {x},
      [xn](const Node<T>& o) {
        T* g = xn->grad_buffer();
        for (std::size_t i = 0; i < o.grad.size(); ++i)
          if (xn->data[i] > T(0)) g[i] += o.grad[i];
      },
      "relu");
}

template <class T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, BatchNormState<T>& state,
                      bool training) {
  require_rank(x.shape(), 4, "batchnorm input");
  const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  const std::size_t m = n * plane;
  if (gamma.numel() != c || beta.numel() != c || state.running_mean.size() != c || state.running_var.size() != c)
    throw DimensionError("batchnorm: parameters do not match " + std::to_string(c) + " channels");
  if (!(state.eps > T(0))) throw ContractError("batchnorm: eps must be positive");
  if (training && m < 2)
    throw ContractError("batchnorm: training mode needs more than one value per channel, got " + std::to_string(m));

  const auto xv = x.data();
  std::vector<T> xhat(x.numel());
  std::vector<T> inv_std(c);
  std::vector<T> y(x.numel());
  for (std::size_t ch = 0; ch < c; ++ch) {
    T mean, var;
    if (training) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < plane; ++p) s += xv[(i * c + ch) * plane + p];
      const double mu = s / static_cast<double>(m);
      double ss = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < plane; ++p) {
          const double d = xv[(i * c + ch) * plane + p] - mu;
          ss += d * d;
        }
      mean = static_cast<T>(mu);
      var = static_cast<T>(ss / static_cast<double>(m));
      const T unbiased = static_cast<T>(ss / static_cast<double>(m - 1));
      state.running_mean[ch] = (T(1) - state.momentum) * state.running_mean[ch] + state.momentum * mean;
      state.running_var[ch] = (T(1) - state.momentum) * state.running_var[ch] + state.momentum * unbiased;
    } else {
      mean = state.running_mean[ch];
      var = state.running_var[ch];
    }
    const T is = T(1) / std::sqrt(var + state.eps);
    inv_std[ch] = is;
    const T gm = gamma.data()[ch], bt = beta.data()[ch];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < plane; ++p) {
        const std::size_t idx = (i * c + ch) * plane + p;
        xhat[idx] = (xv[idx] - mean) * is;
        y[idx] = gm * xhat[idx] + bt;
      }
  }
  instrument::add_count(x.numel());

  auto xn = x.node();
  auto gn = gamma.node();
  auto bn = beta.node();
  return make_result<T>(
      x.shape(), std::move(y), {x, gamma, beta},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](const Node<T>& o) {
        const T* gy = o.grad.data();
        T* gx = xn->requires_grad ? xn->grad_buffer() : nullptr;
        T* gg = gn->requires_grad ? gn->grad_buffer() : nullptr;
        T* gb = bn->requires_grad ? bn->grad_buffer() : nullptr;
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sdy = 0, sdyx = 0;
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t p = 0; p < plane; ++p) {
              const std::size_t idx = (i * c + ch) * plane + p;
              sdy += gy[idx];
              sdyx += static_cast<double>(gy[idx]) * xhat[idx];
            }
          if (gg) gg[ch] += static_cast<T>(sdyx);
          if (gb) gb[ch] += static_cast<T>(sdy);
          if (!gx) continue;
          const T gm = gn->data[ch];
          if (training) {
            const T f = gm * inv_std[ch] / static_cast<T>(m);
            const T mdy = static_cast<T>(sdy), mdyx = static_cast<T>(sdyx);
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t p = 0; p < plane; ++p) {
                const std::size_t idx = (i * c + ch) * plane + p;
                gx[idx] += f * (static_cast<T>(m) * gy[idx] - mdy - xhat[idx] * mdyx);
              }
          } else {
            const T f = gm * inv_std[ch];
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t p = 0; p < plane; ++p) {
                const std::size_t idx = (i * c + ch) * plane + p;
                gx[idx] += f * gy[idx];
              }
          }
        }
      },
      "batchnorm2d");
}

template <class T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_rank(x.shape(), 4, "global_avg_pool input");
  const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  std::vector<T> y(n * c);
  const auto xv = x.data();
  for (std::size_t i = 0; i < n * c; ++i) {
    T s = 0;
    for (std::size_t p = 0; p < plane; ++p) s += xv[i * plane + p];
    y[i] = s / static_cast<T>(plane);
  }
  instrument::add_count(x.numel());
  auto xn = x.node();
  return make_result<T>(
      {n, c}, std::move(y), {x},
      [xn, n, c, plane](const Node<T>& o) {
        T* g = xn->grad_buffer();
        for (std::size_t i = 0; i < n * c; ++i) {
          const T v = o.grad[i] / static_cast<T>(plane);
          for (std::size_t p = 0; p < plane; ++p) g[i * plane + p] += v;
        }
      },
      "global_avg_pool");
}

template <class T>
Tensor<T> pad_channels(const Tensor<T>& x, std::size_t before, std::size_t after) {
  require_rank(x.shape(), 4, "pad_channels input");
  const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  const std::size_t co = before + c + after;
  std::vector<T> y(n * co * plane, T(0));
  const auto xv = x.data();
  for (std::size_t i = 0; i < n; ++i)
    std::copy(xv.begin() + i * c * plane, xv.begin() + (i + 1) * c * plane, y.begin() + (i * co + before) * plane);
  auto xn = x.node();
  return make_result<T>(
      {n, co, x.dim(2), x.dim(3)}, std::move(y), {x},
      [xn, n, c, co, plane, before](const Node<T>& o) {
        T* g = xn->grad_buffer();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < c * plane; ++j) g[i * c * plane + j] += o.grad[(i * co + before) * plane + j];
      },
      "pad_channels");
}

template <class T>
std::vector<T> softmax_rows(const Tensor<T>& logits) {
  require_rank(logits.shape(), 2, "softmax input");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  std::vector<T> p(n * k);
  const auto z = logits.data();
  for (std::size_t i = 0; i < n; ++i) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, z[i * k + j]);
    T s = 0;
    for (std::size_t j = 0; j < k; ++j) s += (p[i * k + j] = std::exp(z[i * k + j] - mx));
    for (std::size_t j = 0; j < k; ++j) p[i * k + j] /= s;
  }
  return p;
}

template <class T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> labels) {
  require_rank(logits.shape(), 2, "cross-entropy logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n)
    throw DimensionError("cross-entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(n));
  for (auto l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= k)
      throw ContractError("cross-entropy: label " + std::to_string(l) + " outside [0," + std::to_string(k) + ")");
  const auto z = logits.data();
  double loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, z[i * k + j]);
    double s = 0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(static_cast<double>(z[i * k + j] - mx));
    loss += std::log(s) + mx - z[i * k + static_cast<std::size_t>(labels[i])];
  }
  loss /= static_cast<double>(n);
  auto zn = logits.node();
  std::vector<std::int32_t> lab(labels.begin(), labels.end());
  return make_result<T>(
      {1}, {static_cast<T>(loss)}, {logits},
      [zn, n, k, lab = std::move(lab)](const Node<T>& o) {
        const auto p = softmax_rows(Tensor<T>(zn));
        T* g = zn->grad_buffer();
        const T f = o.grad[0] / static_cast<T>(n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < k; ++j)
            g[i * k + j] += f * (p[i * k + j] - (static_cast<std::size_t>(lab[i]) == j ? T(1) : T(0)));
      },
      "softmax_cross_entropy");
}

#define AXH_INSTANTIATE(T)                                                                                    \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, Hw, Hw);                                   \
  template Tensor<T> matmul_affine<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                              \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                              \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                                           \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                                \
  template Tensor<T> relu<T>(const Tensor<T>&);                                                               \
  template Tensor<T> batchnorm2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, BatchNormState<T>&, \
                                    bool);                                                                    \
  template Tensor<T> global_avg_pool<T>(const Tensor<T>&);                                                    \
  template Tensor<T> pad_channels<T>(const Tensor<T>&, std::size_t, std::size_t);                             \
  template std::vector<T> softmax_rows<T>(const Tensor<T>&);                                                  \
  template Tensor<T> softmax_cross_entropy<T>(const Tensor<T>&, std::span<const std::int32_t>);

AXH_INSTANTIATE(float)
AXH_INSTANTIATE(double)
#undef AXH_INSTANTIATE

}  // namespace axh

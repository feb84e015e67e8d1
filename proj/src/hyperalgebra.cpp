#include "axh/hyperalgebra.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "axh/errors.hpp"

namespace axh {

Quaternion hamilton_product(const Quaternion& p, const Quaternion& q) {
  return {p.r * q.r - p.x * q.x - p.y * q.y - p.z * q.z,  //
          p.x * q.r + p.r * q.x + p.y * q.z - p.z * q.y,  //
          p.y * q.r + p.r * q.y + p.z * q.x - p.x * q.z,  //
          p.z * q.r + p.r * q.z + p.x * q.y - p.y * q.x};
}

double norm(const Quaternion& q) { return std::sqrt(q.r * q.r + q.x * q.x + q.y * q.y + q.z * q.z); }

const BlockTable<4>& quaternion_table() {
  static const BlockTable<4> t{{
      {{{0, +1}, {1, -1}, {2, -1}, {3, -1}}},
      {{{1, +1}, {0, +1}, {3, +1}, {2, -1}}},
      {{{2, +1}, {3, -1}, {0, +1}, {1, +1}}},
      {{{3, +1}, {2, +1}, {1, -1}, {0, +1}}},
  }};
  return t;
}

const BlockTable<3>& vectormap_table() {
  static const BlockTable<3> t{{
      {{{0, +1}, {1, +1}, {2, +1}}},
      {{{2, +1}, {0, +1}, {1, +1}}},
      {{{1, +1}, {2, +1}, {0, +1}}},
  }};
  return t;
}

std::array<std::array<double, 4>, 4> hamilton_basis(int component) {
  if (component < 0 || component > 3) throw ConfigError("quaternion component must be in 0..3");
  std::array<std::array<double, 4>, 4> m{};
  const auto& t = quaternion_table();
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b)
      if (t[a][b].component == component) m[a][b] = t[a][b].sign;
  return m;
}

template <class T, std::size_t N>
Tensor<T> synthesize_block_kernel(const std::vector<Tensor<T>>& components, const BlockTable<N>& table,
                                  const Tensor<T>& l_scale) {
  if (components.size() != N)
    throw ConfigError("block synthesis needs " + std::to_string(N) + " components, got " +
                      std::to_string(components.size()));
  const Shape& cs = components[0].shape();
  if (cs.size() != 4) throw DimensionError("kernel components must be [Go, Gi, kh, kw], got " + shape_str(cs));
  for (const auto& c : components)
    if (c.shape() != cs) throw DimensionError("kernel components differ in shape");
  if (l_scale.defined() && l_scale.shape() != Shape{N, N})
    throw DimensionError("scale matrix must be " + std::to_string(N) + "x" + std::to_string(N));

  const std::size_t go = cs[0], gi = cs[1], taps = cs[2] * cs[3];
  const std::size_t co = N * go, ci = N * gi;
  std::vector<T> out(co * ci * taps);
  std::array<std::array<T, N>, N> factor{};
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b)
      factor[a][b] = static_cast<T>(table[a][b].sign) * (l_scale.defined() ? l_scale.data()[a * N + b] : T(1));

  for (std::size_t o = 0; o < go; ++o)
    for (std::size_t a = 0; a < N; ++a)
      for (std::size_t i = 0; i < gi; ++i)
        for (std::size_t b = 0; b < N; ++b) {
          const T* src = components[static_cast<std::size_t>(table[a][b].component)].data().data() + (o * gi + i) * taps;
          T* dst = out.data() + ((N * o + a) * ci + (N * i + b)) * taps;
          for (std::size_t t = 0; t < taps; ++t) dst[t] = factor[a][b] * src[t];
        }

  std::vector<Tensor<T>> inputs = components;
  inputs.push_back(l_scale);
  std::vector<typename Tensor<T>::NodePtr> comp_nodes;
  for (const auto& c : components) comp_nodes.push_back(c.node());
  auto l_node = l_scale.defined() ? l_scale.node() : nullptr;
  return make_result<T>(
      {co, ci, cs[2], cs[3]}, std::move(out), inputs,
      [=, &table](const Node<T>& node) {
        const T* g = node.grad.data();
        std::array<std::array<double, N>, N> dl{};
        for (std::size_t o = 0; o < go; ++o)
          for (std::size_t a = 0; a < N; ++a)
            for (std::size_t i = 0; i < gi; ++i)
              for (std::size_t b = 0; b < N; ++b) {
                const auto& comp = comp_nodes[static_cast<std::size_t>(table[a][b].component)];
                const T* gs = g + ((N * o + a) * ci + (N * i + b)) * taps;
                const std::size_t off = (o * gi + i) * taps;
                if (comp->requires_grad) {
                  T* gc = comp->grad_buffer() + off;
                  for (std::size_t t = 0; t < taps; ++t) gc[t] += factor[a][b] * gs[t];
                }
                if (l_node && l_node->requires_grad) {
                  const T* v = comp->data.data() + off;
                  double acc = 0;
                  for (std::size_t t = 0; t < taps; ++t) acc += static_cast<double>(v[t]) * gs[t];
                  dl[a][b] += table[a][b].sign * acc;
                }
              }
        if (l_node && l_node->requires_grad) {
          T* gl = l_node->grad_buffer();
          for (std::size_t a = 0; a < N; ++a)
            for (std::size_t b = 0; b < N; ++b) gl[a * N + b] += static_cast<T>(dl[a][b]);
        }
      },
      "block_kernel");
}

template <class T>
Tensor<T> quaternion_weight_matrix(const QuaternionKernel<T>& k) {
  return synthesize_block_kernel<T, 4>(k.components(), quaternion_table(), Tensor<T>());
}

template <class T>
Tensor<T> vectormap_weight_matrix(const VectormapKernel<T>& k) {
  if (!k.l.defined()) throw ConfigError("vectormap kernel is missing its L matrix");
  return synthesize_block_kernel<T, 3>(k.components(), vectormap_table(), k.l);
}

template <class T>
Tensor<T> kronecker(const Tensor<T>& p, const Tensor<T>& q) {
  if (p.ndim() != 2 || q.ndim() != 2) throw DimensionError("kronecker operands must be matrices");
  const std::size_t a = p.dim(0), b = p.dim(1), c = q.dim(0), d = q.dim(1);
  std::vector<T> out(a * c * b * d);
  const auto pv = p.data();
  const auto qv = q.data();
  for (std::size_t u = 0; u < a; ++u)
    for (std::size_t r = 0; r < c; ++r)
      for (std::size_t v = 0; v < b; ++v)
        for (std::size_t s = 0; s < d; ++s) out[(u * c + r) * (b * d) + v * d + s] = pv[u * b + v] * qv[r * d + s];
  auto pn = p.node();
  auto qn = q.node();
  return make_result<T>(
      {a * c, b * d}, std::move(out), {p, q},
      [=](const Node<T>& o) {
        const T* g = o.grad.data();
        T* gp = pn->requires_grad ? pn->grad_buffer() : nullptr;
        T* gq = qn->requires_grad ? qn->grad_buffer() : nullptr;
        for (std::size_t u = 0; u < a; ++u)
          for (std::size_t r = 0; r < c; ++r)
            for (std::size_t v = 0; v < b; ++v)
              for (std::size_t s = 0; s < d; ++s) {
                const T gg = g[(u * c + r) * (b * d) + v * d + s];
                if (gp) gp[u * b + v] += gg * qn->data[r * d + s];
                if (gq) gq[r * d + s] += gg * pn->data[u * b + v];
              }
      },
      "kronecker");
}

namespace {
void check_phm_n(std::size_t n) {
  if (n != 1 && n != 4 && n != 5) throw ConfigError("PHM dimension n must be 1, 4 or 5, got " + std::to_string(n));
}
}  // namespace

std::size_t phm_param_count(std::size_t n, std::size_t out_features, std::size_t in_features) {
  return n * (out_features / n) * (in_features / n) + n * n * n + out_features;
}

template <class T>
Tensor<T> phm_synthesize(const PHMWeight<T>& w) {
  const std::size_t n = w.n;
  check_phm_n(n);
  if (w.a_list.size() != n || w.i_list.size() != n)
    throw ConfigError("PHM weight needs " + std::to_string(n) + " A and I matrices");
  const Shape as = w.a_list[0].shape();
  if (as.size() != 2) throw DimensionError("PHM A matrices must be 2-D");
  for (std::size_t i = 0; i < n; ++i) {
    if (w.a_list[i].shape() != as) throw DimensionError("PHM A matrices differ in shape");
    if (w.i_list[i].shape() != Shape{n, n}) throw DimensionError("PHM I matrices must be n x n");
  }
  const std::size_t kb = as[0], db = as[1];
  const std::size_t k = n * kb, d = n * db;
  std::vector<T> h(k * d, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto iv = w.i_list[i].data();
    const auto av = w.a_list[i].data();
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        const T s = iv[a * n + b];
        if (s == T(0)) continue;
        for (std::size_t p = 0; p < kb; ++p) {
          T* dst = h.data() + (a * kb + p) * d + b * db;
          const T* src = av.data() + p * db;
          for (std::size_t q = 0; q < db; ++q) dst[q] += s * src[q];
        }
      }
  }
  std::vector<Tensor<T>> inputs = w.a_list;
  inputs.insert(inputs.end(), w.i_list.begin(), w.i_list.end());
  std::vector<typename Tensor<T>::NodePtr> an, in;
  for (const auto& t : w.a_list) an.push_back(t.node());
  for (const auto& t : w.i_list) in.push_back(t.node());
  return make_result<T>(
      {k, d}, std::move(h), inputs,
      [=](const Node<T>& o) {
        const T* g = o.grad.data();
        for (std::size_t i = 0; i < n; ++i) {
          T* ga = an[i]->requires_grad ? an[i]->grad_buffer() : nullptr;
          T* gi = in[i]->requires_grad ? in[i]->grad_buffer() : nullptr;
          const T* iv = in[i]->data.data();
          const T* av = an[i]->data.data();
          for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
              const T s = iv[a * n + b];
              double acc = 0;
              for (std::size_t p = 0; p < kb; ++p) {
                const T* gs = g + (a * kb + p) * d + b * db;
                if (ga)
                  for (std::size_t q = 0; q < db; ++q) ga[p * db + q] += s * gs[q];
                if (gi)
                  for (std::size_t q = 0; q < db; ++q) acc += static_cast<double>(av[p * db + q]) * gs[q];
              }
              if (gi) gi[a * n + b] += static_cast<T>(acc);
            }
        }
      },
      "phm_synthesize");
}

double hypercomplex_init_variance(std::size_t fan_in, std::size_t fan_out) {
  return 1.0 / (2.0 * static_cast<double>(fan_in + fan_out));
}

namespace {

void check_fans(std::size_t fan_in, std::size_t fan_out) {
  if (fan_in == 0 || fan_out == 0) throw ConfigError("initializer fans must be positive");
}

// Unit vector uniform on S^2.
std::array<double, 3> random_axis(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    std::array<double, 3> v{g(rng), g(rng), g(rng)};
    const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (len > 1e-12) return {v[0] / len, v[1] / len, v[2] / len};
  }
}

// sigma * chi(dof)
double random_modulus(std::mt19937_64& rng, double sigma, int dof) {
  std::chi_squared_distribution<double> chi2(dof);
  return sigma * std::sqrt(chi2(rng));
}

// Angle on [0, pi] with density proportional to sin^2, by rejection.
double random_phase(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const double t = std::numbers::pi * u(rng);
    const double s = std::sin(t);
    if (u(rng) < s * s) return t;
  }
}

}  // namespace

template <class T>
QuaternionKernel<T> init_quaternion_kernel(const Shape& component_shape, std::size_t fan_in, std::size_t fan_out,
                                           std::mt19937_64& rng) {
  check_fans(fan_in, fan_out);
  const double sigma = std::sqrt(hypercomplex_init_variance(fan_in, fan_out));
  const std::size_t n = shape_numel(component_shape);
  std::array<std::vector<T>, 4> parts;
  for (auto& p : parts) p.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    const double m = random_modulus(rng, sigma, 4);
    const double t = random_phase(rng);
    const auto axis = random_axis(rng);
    parts[0][e] = static_cast<T>(m * std::cos(t));
    for (int c = 0; c < 3; ++c) parts[static_cast<std::size_t>(c) + 1][e] = static_cast<T>(m * std::sin(t) * axis[c]);
  }
  return {Tensor<T>::from(component_shape, std::move(parts[0]), true),
          Tensor<T>::from(component_shape, std::move(parts[1]), true),
          Tensor<T>::from(component_shape, std::move(parts[2]), true),
          Tensor<T>::from(component_shape, std::move(parts[3]), true)};
}

template <class T>
VectormapKernel<T> init_vectormap(const Shape& component_shape, std::size_t fan_in, std::size_t fan_out,
                                  std::mt19937_64& rng) {
  check_fans(fan_in, fan_out);
  const double sigma = std::sqrt(hypercomplex_init_variance(fan_in, fan_out));
  const std::size_t n = shape_numel(component_shape);
  std::array<std::vector<T>, 3> parts;
  for (auto& p : parts) p.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    const double m = random_modulus(rng, sigma, 3);
    const auto dir = random_axis(rng);
    for (std::size_t c = 0; c < 3; ++c) parts[c][e] = static_cast<T>(m * dir[c]);
  }
  std::vector<T> l;
  for (const auto& row : kVectormapInitialL)
    for (double v : row) l.push_back(static_cast<T>(v));
  return {Tensor<T>::from(component_shape, std::move(parts[0]), true),
          Tensor<T>::from(component_shape, std::move(parts[1]), true),
          Tensor<T>::from(component_shape, std::move(parts[2]), true), Tensor<T>::from({3, 3}, std::move(l), true)};
}

template <class T>
PHMWeight<T> init_phm(std::size_t n, std::size_t out_features, std::size_t in_features, std::mt19937_64& rng) {
  check_phm_n(n);
  if (out_features % n != 0 || in_features % n != 0)
    throw ConfigError("PHM features (" + std::to_string(out_features) + " out, " + std::to_string(in_features) +
                      " in) must be divisible by n=" + std::to_string(n));
  PHMWeight<T> w;
  w.n = n;
  const double bound = std::sqrt(6.0 / static_cast<double>(out_features + in_features));
  std::uniform_real_distribution<double> ua(-bound, bound);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<T> a((out_features / n) * (in_features / n));
    for (auto& v : a) v = static_cast<T>(ua(rng));
    w.a_list.push_back(Tensor<T>::from({out_features / n, in_features / n}, std::move(a), true));
  }
  if (n == 1) {
    w.i_list.push_back(Tensor<T>::from({1, 1}, {T(1)}, true));
  } else if (n == 4) {
    for (int c = 0; c < 4; ++c) {
      std::vector<T> m;
      for (const auto& row : hamilton_basis(c))
        for (double v : row) m.push_back(static_cast<T>(v));
      w.i_list.push_back(Tensor<T>::from({4, 4}, std::move(m), true));
    }
  } else {
    std::uniform_int_distribution<int> tri(-1, 1);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> m(n * n);
      for (auto& v : m) v = tri(rng);
      for (std::size_t col = 0; col < n; ++col) {
        double ss = 0;
        for (std::size_t r = 0; r < n; ++r) ss += m[r * n + col] * m[r * n + col];
        if (ss == 0) {
          m[col * n + col] = 1;
          continue;
        }
        const double s = 1.0 / std::sqrt(ss);
        for (std::size_t r = 0; r < n; ++r) m[r * n + col] *= s;
      }
      std::vector<T> mt(m.begin(), m.end());
      w.i_list.push_back(Tensor<T>::from({n, n}, std::move(mt), true));
    }
  }
  w.bias = Tensor<T>::zeros({out_features}, true);
  return w;
}

#define AXH_INSTANTIATE(T)                                                                                        \
  template Tensor<T> synthesize_block_kernel<T, 4>(const std::vector<Tensor<T>>&, const BlockTable<4>&,           \
                                                   const Tensor<T>&);                                             \
  template Tensor<T> synthesize_block_kernel<T, 3>(const std::vector<Tensor<T>>&, const BlockTable<3>&,           \
                                                   const Tensor<T>&);                                             \
  template Tensor<T> quaternion_weight_matrix<T>(const QuaternionKernel<T>&);                                     \
  template Tensor<T> vectormap_weight_matrix<T>(const VectormapKernel<T>&);                                       \
  template Tensor<T> kronecker<T>(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> phm_synthesize<T>(const PHMWeight<T>&);                                                      \
  template QuaternionKernel<T> init_quaternion_kernel<T>(const Shape&, std::size_t, std::size_t, std::mt19937_64&); \
  template VectormapKernel<T> init_vectormap<T>(const Shape&, std::size_t, std::size_t, std::mt19937_64&);        \
  template PHMWeight<T> init_phm<T>(std::size_t, std::size_t, std::size_t, std::mt19937_64&);

AXH_INSTANTIATE(float)
AXH_INSTANTIATE(double)
#undef AXH_INSTANTIATE

}  // namespace axh

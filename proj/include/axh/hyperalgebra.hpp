#pragma once

// Hypercomplex algebra: Hamilton products, the weight-sharing block structure
// of quaternion and vectormap convolutions, Kronecker products and the PHM
// weight synthesis H = sum_i I_i (x) A_i, plus the matching initializers.
//
// Convolution channel layout is interleaved: channel c belongs to group c / n
// and is lane c % n of that group (n = 4 for quaternion, 3 for vectormap).
// Synthesized kernels therefore satisfy
//   W[n*go + a, n*gi + b, :, :] = scale(a,b) * sign(a,b) * K_{component(a,b)}[go, gi, :, :].

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "axh/tensor.hpp"

namespace axh {

struct Quaternion {
  double r = 0, x = 0, y = 0, z = 0;
  friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

/// p * q with i^2 = j^2 = k^2 = ijk = -1 (so ij = k, ji = -k).
Quaternion hamilton_product(const Quaternion& p, const Quaternion& q);
double norm(const Quaternion& q);

/// One entry of an n x n weight-sharing table: which shared kernel fills the
/// block and with which sign.
struct BlockEntry {
  int component;
  int sign;
};

template <std::size_t N>
using BlockTable = std::array<std::array<BlockEntry, N>, N>;

/// Quaternion convolution M (*) F read row by row (output lane a, input lane b):
///   r: [ F_r, -F_i, -F_j, -F_k]
///   i: [ F_i,  F_r,  F_k, -F_j]
///   j: [ F_j, -F_k,  F_r,  F_i]
///   k: [ F_k,  F_j, -F_i,  F_r]
/// Components are numbered r=0, i=1, j=2, k=3.
const BlockTable<4>& quaternion_table();

/// Circulant arrangement [[A,B,C],[C,A,B],[B,C,A]]; block (u,v) uses component (v-u) mod 3.
const BlockTable<3>& vectormap_table();

/// Initial value of the learnable vectormap scale matrix L.
constexpr std::array<std::array<double, 3>, 3> kVectormapInitialL{{{1, 1, 1}, {-1, 1, 1}, {-1, 1, 1}}};

/// The four shared kernels of a quaternion convolution, each [C_out/4, C_in/4, kh, kw].
template <class T>
struct QuaternionKernel {
  Tensor<T> r, i, j, k;
  std::vector<Tensor<T>> components() const { return {r, i, j, k}; }
};

/// The three shared kernels of a vectormap convolution, each [C_out/3, C_in/3, kh, kw],
/// plus the 3x3 learnable scale matrix L.
template <class T>
struct VectormapKernel {
  Tensor<T> a, b, c;
  Tensor<T> l;
  std::vector<Tensor<T>> components() const { return {a, b, c}; }
};

/// PHM dense weight: n matrices A_i [k/n, d/n], n matrices I_i [n, n], bias [k].
template <class T>
struct PHMWeight {
  std::size_t n = 1;
  std::vector<Tensor<T>> a_list;
  std::vector<Tensor<T>> i_list;
  Tensor<T> bias;

  std::size_t out_features() const { return n * a_list.at(0).dim(0); }
  std::size_t in_features() const { return n * a_list.at(0).dim(1); }
};

/// Builds the full [n*Go, n*Gi, kh, kw] real kernel from n equally shaped
/// components following `table`; `l_scale` (n x n) multiplies block (a,b) when defined.
/// Gradients flow to the components and to `l_scale`.
template <class T, std::size_t N>
Tensor<T> synthesize_block_kernel(const std::vector<Tensor<T>>& components, const BlockTable<N>& table,
                                  const Tensor<T>& l_scale);

template <class T>
Tensor<T> quaternion_weight_matrix(const QuaternionKernel<T>& k);

template <class T>
Tensor<T> vectormap_weight_matrix(const VectormapKernel<T>& k);

/// P [a,b] (x) Q [c,d] -> [a*c, b*d], block (u,v) = P[u,v] * Q.
template <class T>
Tensor<T> kronecker(const Tensor<T>& p, const Tensor<T>& q);

/// H = sum_i kronecker(I_i, A_i), shape [k, d]. Throws ConfigError on
/// inconsistent shapes or an unsupported n.
template <class T>
Tensor<T> phm_synthesize(const PHMWeight<T>& w);

/// The n x n matrix whose Kronecker sum with quaternion components reproduces
/// the quaternion table above: entry (a,b) is sign(a,b) where component(a,b) == c.
std::array<std::array<double, 4>, 4> hamilton_basis(int component);

/// Target per-component variance of the hypercomplex initializers.
double hypercomplex_init_variance(std::size_t fan_in, std::size_t fan_out);

/// Polar initialization: each 4-tuple (r,i,j,k) is modulus * direction with the
/// modulus sigma*chi(4) distributed and the direction uniform on the unit
/// 3-sphere, written as (cos t, sin t * axis) with axis uniform on S^2 and
/// t in [0, pi] with density proportional to sin^2 t. Every component then has
/// variance sigma^2 = 1/(2*(fan_in+fan_out)). Components require grad.
template <class T>
QuaternionKernel<T> init_quaternion_kernel(const Shape& component_shape, std::size_t fan_in, std::size_t fan_out,
                                           std::mt19937_64& rng);

/// Three-component analogue (modulus sigma*chi(3), direction uniform on S^2);
/// L starts at kVectormapInitialL.
template <class T>
VectormapKernel<T> init_vectormap(const Shape& component_shape, std::size_t fan_in, std::size_t fan_out,
                                  std::mt19937_64& rng);

/// n = 1: I_1 = [1]. n = 4: the Hamilton basis. n = 5: entries drawn from
/// {-1, 0, 1} with each column scaled to unit norm (an empty column gets a 1
/// on the diagonal). A_i ~ U(+-sqrt(6/(k+d))), bias zero. All learnable.
template <class T>
PHMWeight<T> init_phm(std::size_t n, std::size_t out_features, std::size_t in_features, std::mt19937_64& rng);

/// Sum of the learnable scalars of a PHM weight: n*(k/n)*(d/n) + n*n*n + k.
std::size_t phm_param_count(std::size_t n, std::size_t out_features, std::size_t in_features);

}  // namespace axh

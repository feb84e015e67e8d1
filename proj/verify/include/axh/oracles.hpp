#pragma once

// Independent reference implementations used only for verification. They
// work on plain row-major arrays and share no code with the library kernels.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "axh/hyperalgebra.hpp"
#include "axh/ops.hpp"

namespace axh::oracle {

struct Arr {
  Shape shape;
  std::vector<double> v;

  Arr() = default;
  Arr(Shape s, std::vector<double> values) : shape(std::move(s)), v(std::move(values)) {}
  explicit Arr(Shape s) : shape(std::move(s)), v(shape_numel(shape), 0.0) {}
  double& at4(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return v[((a * shape[1] + b) * shape[2] + c) * shape[3] + d];
  }
  double at4(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return v[((a * shape[1] + b) * shape[2] + c) * shape[3] + d];
  }
};

Arr from_tensor(const Tensor<double>& t);
Tensor<double> to_tensor(const Arr& a, bool requires_grad = false);
Arr random_arr(const Shape& s, std::mt19937_64& rng, double scale = 1.0);

/// max |a - b| (shapes must match).
double max_abs_diff(const Arr& a, const Arr& b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

/// Six nested loops, cross-correlation with zero padding.
Arr naive_conv2d(const Arr& x, const Arr& k, Hw stride, Hw pad);

/// y[n,r] = sum_c W[r,c] x[n,c] + b[r]
Arr naive_affine(const Arr& x, const Arr& w, const std::vector<double>& b);

/// Channels n*g + lane of an N,C,H,W array as N,C/n,H,W.
Arr lane(const Arr& x, std::size_t n, std::size_t which);
Arr interleave(const std::vector<Arr>& lanes);
Arr lin(double a, const Arr& x, double b, const Arr& y);

/// The 16 real convolutions of M (*) F written term by term, M being the
/// input lanes (r, i, j, k) and F the four shared kernels.
Arr quaternion_conv_expansion(const Arr& x, const Arr& fr, const Arr& fi, const Arr& fj, const Arr& fk, Hw stride,
                              Hw pad);

/// Three output rows of L (.) [[A,B,C],[C,A,B],[B,C,A]] * [x; y; z] written out.
Arr vectormap_row_expansion(const Arr& x, const Arr& a, const Arr& b, const Arr& c,
                            const std::array<std::array<double, 3>, 3>& l, Hw stride, Hw pad);

/// Quaternion dense layer with input x [N,d] read as 4 contiguous parts
/// (part p holds component p of every input quaternion) and weights
/// W[o,i] = (A_r, A_i, A_j, A_k)[o,i]; out_o = sum_i x_i * W[o,i] (Hamilton).
Arr quaternion_dense(const Arr& x, const std::array<Arr, 4>& a, const std::vector<double>& bias);

/// Loop Kronecker product and Kronecker sum.
Arr kron(const Arr& p, const Arr& q);
Arr kron_sum(const std::vector<Arr>& i_list, const std::vector<Arr>& a_list);

/// vec(Q X P^T) for X [d, b] (column-major vec), used for (P (x) Q) vec(X).
std::vector<double> vec_qxpt(const Arr& p, const Arr& q, const Arr& x);
std::vector<double> vec_colmajor(const Arr& x);
std::vector<double> matvec(const Arr& m, std::span<const double> x);

struct GradCheck {
  double max_rel = 0;
  std::size_t worst = 0;
  std::size_t checked = 0;
  double analytic = 0;
  double numeric = 0;
};

/// rel = |a - n| / max(|a|, |n|, 1e-6)
double rel_error(double a, double n);

/// Central differences of `loss` w.r.t. values[i] for i in `indices` (all
/// when empty), compared with `analytic`. values are restored afterwards.
GradCheck check_gradient(const std::function<double()>& loss, std::span<double> values,
                         std::span<const double> analytic, double step = 1e-5,
                         std::span<const std::size_t> indices = {});

/// Up to `count` distinct indices in [0, n) spread uniformly at random.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, std::mt19937_64& rng);

}  // namespace axh::oracle

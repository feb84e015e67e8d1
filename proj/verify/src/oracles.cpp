#include "axh/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace axh::oracle {

Arr from_tensor(const Tensor<double>& t) { return Arr(t.shape(), {t.data().begin(), t.data().end()}); }

Tensor<double> to_tensor(const Arr& a, bool requires_grad) { return Tensor<double>::from(a.shape, a.v, requires_grad); }

Arr random_arr(const Shape& s, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Arr a(s);
  for (auto& x : a.v) x = g(rng);
  return a;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_abs_diff: size mismatch");
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    if (std::isnan(d)) return INFINITY;
    m = std::max(m, d);
  }
  return m;
}

double max_abs_diff(const Arr& a, const Arr& b) {
  if (a.shape != b.shape) throw std::invalid_argument("max_abs_diff: shape " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  return max_abs_diff(std::span<const double>(a.v), std::span<const double>(b.v));
}

Arr naive_conv2d(const Arr& x, const Arr& k, Hw stride, Hw pad) {
  const std::size_t n = x.shape[0], ci = x.shape[1], h = x.shape[2], w = x.shape[3];
  const std::size_t co = k.shape[0], kh = k.shape[2], kw = k.shape[3];
  if (k.shape[1] != ci) throw std::invalid_argument("naive_conv2d: channel mismatch");
  const std::size_t ho = (h + 2 * pad.h - kh) / stride.h + 1;
  const std::size_t wo = (w + 2 * pad.w - kw) / stride.w + 1;
  Arr y({n, co, ho, wo});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t oy = 0; oy < ho; ++oy)
        for (std::size_t ox = 0; ox < wo; ++ox) {
          double acc = 0;
          for (std::size_t c = 0; c < ci; ++c)
            for (std::size_t u = 0; u < kh; ++u)
              for (std::size_t v = 0; v < kw; ++v) {
                const long iy = static_cast<long>(oy * stride.h + u) - static_cast<long>(pad.h);
                const long ix = static_cast<long>(ox * stride.w + v) - static_cast<long>(pad.w);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
                acc += x.at4(b, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) * k.at4(o, c, u, v);
              }
          y.at4(b, o, oy, ox) = acc;
        }
  return y;
}

Arr naive_affine(const Arr& x, const Arr& w, const std::vector<double>& b) {
  const std::size_t n = x.shape[0], d = x.shape[1], k = w.shape[0];
  Arr y({n, k});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < k; ++r) {
      double acc = b.empty() ? 0.0 : b[r];
      for (std::size_t c = 0; c < d; ++c) acc += w.v[r * d + c] * x.v[i * d + c];
      y.v[i * k + r] = acc;
    }
  return y;
}

Arr lane(const Arr& x, std::size_t n, std::size_t which) {
  const std::size_t g = x.shape[1] / n;
  Arr out({x.shape[0], g, x.shape[2], x.shape[3]});
  for (std::size_t b = 0; b < x.shape[0]; ++b)
    for (std::size_t c = 0; c < g; ++c)
      for (std::size_t y = 0; y < x.shape[2]; ++y)
        for (std::size_t z = 0; z < x.shape[3]; ++z) out.at4(b, c, y, z) = x.at4(b, n * c + which, y, z);
  return out;
}

Arr interleave(const std::vector<Arr>& lanes) {
  const std::size_t n = lanes.size();
  const Shape& s = lanes[0].shape;
  Arr out({s[0], s[1] * n, s[2], s[3]});
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t b = 0; b < s[0]; ++b)
      for (std::size_t c = 0; c < s[1]; ++c)
        for (std::size_t y = 0; y < s[2]; ++y)
          for (std::size_t z = 0; z < s[3]; ++z) out.at4(b, n * c + l, y, z) = lanes[l].at4(b, c, y, z);
  return out;
}

Arr lin(double a, const Arr& x, double b, const Arr& y) {
  Arr out(x.shape);
  for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = a * x.v[i] + b * y.v[i];
  return out;
}

Arr quaternion_conv_expansion(const Arr& x, const Arr& fr, const Arr& fi, const Arr& fj, const Arr& fk, Hw stride,
                              Hw pad) {
  const Arr mr = lane(x, 4, 0), mi = lane(x, 4, 1), mj = lane(x, 4, 2), mk = lane(x, 4, 3);
  const auto c = [&](const Arr& m, const Arr& f) { return naive_conv2d(m, f, stride, pad); };
  // O_r = M_r F_r - M_i F_i - M_j F_j - M_k F_k
  Arr o_r = c(mr, fr);
  o_r = lin(1, o_r, -1, c(mi, fi));
  o_r = lin(1, o_r, -1, c(mj, fj));
  o_r = lin(1, o_r, -1, c(mk, fk));
  // O_i = M_i F_r + M_r F_i + M_j F_k - M_k F_j
  Arr o_i = c(mi, fr);
  o_i = lin(1, o_i, 1, c(mr, fi));
  o_i = lin(1, o_i, 1, c(mj, fk));
  o_i = lin(1, o_i, -1, c(mk, fj));
  // O_j = M_j F_r + M_r F_j + M_k F_i - M_i F_k
  Arr o_j = c(mj, fr);
  o_j = lin(1, o_j, 1, c(mr, fj));
  o_j = lin(1, o_j, 1, c(mk, fi));
  o_j = lin(1, o_j, -1, c(mi, fk));
  // O_k = M_k F_r + M_r F_k + M_i F_j - M_j F_i
  Arr o_k = c(mk, fr);
  o_k = lin(1, o_k, 1, c(mr, fk));
  o_k = lin(1, o_k, 1, c(mi, fj));
  o_k = lin(1, o_k, -1, c(mj, fi));
  return interleave({o_r, o_i, o_j, o_k});
}

Arr vectormap_row_expansion(const Arr& x, const Arr& a, const Arr& b, const Arr& c,
                            const std::array<std::array<double, 3>, 3>& l, Hw stride, Hw pad) {
  const Arr xs = lane(x, 3, 0), ys = lane(x, 3, 1), zs = lane(x, 3, 2);
  const auto conv = [&](const Arr& m, const Arr& f) { return naive_conv2d(m, f, stride, pad); };
  // row 1: L00 A x + L01 B y + L02 C z
  Arr r0 = lin(l[0][0], conv(xs, a), l[0][1], conv(ys, b));
  r0 = lin(1, r0, l[0][2], conv(zs, c));
  // row 2: L10 C x + L11 A y + L12 B z
  Arr r1 = lin(l[1][0], conv(xs, c), l[1][1], conv(ys, a));
  r1 = lin(1, r1, l[1][2], conv(zs, b));
  // row 3: L20 B x + L21 C y + L22 A z
  Arr r2 = lin(l[2][0], conv(xs, b), l[2][1], conv(ys, c));
  r2 = lin(1, r2, l[2][2], conv(zs, a));
  return interleave({r0, r1, r2});
}

Arr quaternion_dense(const Arr& x, const std::array<Arr, 4>& a, const std::vector<double>& bias) {
  const std::size_t n = x.shape[0], d = x.shape[1], k4 = a[0].shape[0], d4 = a[0].shape[1];
  if (d != 4 * d4) throw std::invalid_argument("quaternion_dense: feature mismatch");
  Arr y({n, 4 * k4});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t o = 0; o < k4; ++o) {
      Quaternion acc;
      for (std::size_t i = 0; i < d4; ++i) {
        const Quaternion xi{x.v[s * d + i], x.v[s * d + d4 + i], x.v[s * d + 2 * d4 + i], x.v[s * d + 3 * d4 + i]};
        const Quaternion wi{a[0].v[o * d4 + i], a[1].v[o * d4 + i], a[2].v[o * d4 + i], a[3].v[o * d4 + i]};
        const Quaternion p = hamilton_product(xi, wi);
        acc = {acc.r + p.r, acc.x + p.x, acc.y + p.y, acc.z + p.z};
      }
      const double parts[4] = {acc.r, acc.x, acc.y, acc.z};
      for (std::size_t p = 0; p < 4; ++p)
        y.v[s * 4 * k4 + p * k4 + o] = parts[p] + (bias.empty() ? 0.0 : bias[p * k4 + o]);
    }
  return y;
}

Arr kron(const Arr& p, const Arr& q) {
  const std::size_t a = p.shape[0], b = p.shape[1], c = q.shape[0], d = q.shape[1];
  Arr out({a * c, b * d});
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < b; ++j)
      for (std::size_t u = 0; u < c; ++u)
        for (std::size_t v = 0; v < d; ++v) out.v[(i * c + u) * (b * d) + j * d + v] = p.v[i * b + j] * q.v[u * d + v];
  return out;
}

Arr kron_sum(const std::vector<Arr>& i_list, const std::vector<Arr>& a_list) {
  Arr h = kron(i_list.at(0), a_list.at(0));
  for (std::size_t t = 1; t < i_list.size(); ++t) {
    const Arr k = kron(i_list[t], a_list[t]);
    for (std::size_t e = 0; e < h.v.size(); ++e) h.v[e] += k.v[e];
  }
  return h;
}

std::vector<double> vec_colmajor(const Arr& x) {
  const std::size_t r = x.shape[0], c = x.shape[1];
  std::vector<double> out(r * c);
  for (std::size_t j = 0; j < c; ++j)
    for (std::size_t i = 0; i < r; ++i) out[j * r + i] = x.v[i * c + j];
  return out;
}

std::vector<double> vec_qxpt(const Arr& p, const Arr& q, const Arr& x) {
  // Q [c,d] X [d,b] P^T [b,a] -> [c,a]
  const std::size_t a = p.shape[0], b = p.shape[1], c = q.shape[0], d = q.shape[1];
  Arr qx({c, b});
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      double s = 0;
      for (std::size_t t = 0; t < d; ++t) s += q.v[i * d + t] * x.v[t * b + j];
      qx.v[i * b + j] = s;
    }
  Arr out({c, a});
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < a; ++j) {
      double s = 0;
      for (std::size_t t = 0; t < b; ++t) s += qx.v[i * b + t] * p.v[j * b + t];
      out.v[i * a + j] = s;
    }
  return vec_colmajor(out);
}

std::vector<double> matvec(const Arr& m, std::span<const double> x) {
  const std::size_t r = m.shape[0], c = m.shape[1];
  std::vector<double> y(r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) y[i] += m.v[i * c + j] * x[j];
  return y;
}

double rel_error(double a, double n) {
  const double denom = std::max({std::abs(a), std::abs(n), 1e-6});
  return std::abs(a - n) / denom;
}

GradCheck check_gradient(const std::function<double()>& loss, std::span<double> values,
                         std::span<const double> analytic, double step, std::span<const std::size_t> indices) {
  GradCheck r;
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(values.size());
    std::iota(all.begin(), all.end(), 0);
    indices = all;
  }
  for (std::size_t i : indices) {
    const double keep = values[i];
    values[i] = keep + step;
    const double up = loss();
    values[i] = keep - step;
    const double down = loss();
    values[i] = keep;
    const double numeric = (up - down) / (2 * step);
    const double e = rel_error(analytic[i], numeric);
    ++r.checked;
    if (e > r.max_rel || std::isnan(e)) {
      r.max_rel = std::isnan(e) ? INFINITY : e;
      r.worst = i;
      r.analytic = analytic[i];
      r.numeric = numeric;
    }
  }
  return r;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (count >= n) return idx;
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> u(i, n - 1);
    std::swap(idx[i], idx[u(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace axh::oracle

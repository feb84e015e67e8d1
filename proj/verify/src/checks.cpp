#include "axh/checks.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include "axh/analysis.hpp"
#include "axh/oracles.hpp"

namespace axh::verify {

using oracle::Arr;
using TD = Tensor<double>;

std::string format(const CheckResult& r) {
  return std::string(r.passed ? "[PASS] " : "[FAIL] ") + r.name + (r.detail.empty() ? "" : ": " + r.detail);
}

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

CheckResult tolerance_result(std::string name, double worst, double tol, std::size_t trials) {
  return {std::move(name), worst <= tol,
          "max error " + sci(worst) + " over " + std::to_string(trials) + " trials (tol " + sci(tol) + ")"};
}

struct ConvCase {
  std::size_t n, gi, go, h, w;
  Hw kernel, stride, pad;
};

ConvCase random_conv_case(std::mt19937_64& rng, bool allow_rect) {
  ConvCase c;
  c.n = pick(rng, 1, 2);
  c.gi = pick(rng, 1, 3);
  c.go = pick(rng, 1, 3);
  c.h = pick(rng, 3, 7);
  c.w = pick(rng, 3, 7);
  static const Hw kernels[] = {{1, 1}, {3, 3}, {3, 1}, {1, 3}};
  c.kernel = kernels[pick(rng, 0, allow_rect ? 3 : 1)];
  c.stride = {pick(rng, 1, 2), pick(rng, 1, 2)};
  c.pad = {pick(rng, 0, 1), pick(rng, 0, 1)};
  return c;
}

}  // namespace

CheckResult conv2d_matches_naive(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto c = random_conv_case(rng, true);
    const Arr x = oracle::random_arr({c.n, c.gi * 2 + 1, c.h, c.w}, rng);
    const Arr k = oracle::random_arr({c.go * 2, c.gi * 2 + 1, c.kernel.h, c.kernel.w}, rng);
    const auto y = conv2d(oracle::to_tensor(x), oracle::to_tensor(k), c.stride, c.pad);
    worst = std::max(worst, oracle::max_abs_diff(oracle::from_tensor(y), oracle::naive_conv2d(x, k, c.stride, c.pad)));
  }
  return tolerance_result("conv2d == nested-loop reference", worst, 1e-12, trials);
}

CheckResult quaternion_conv_equivalence(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto c = random_conv_case(rng, true);
    const Arr x = oracle::random_arr({c.n, 4 * c.gi, c.h, c.w}, rng);
    std::array<Arr, 4> f;
    for (auto& a : f) a = oracle::random_arr({c.go, c.gi, c.kernel.h, c.kernel.w}, rng);
    const QuaternionKernel<double> k{oracle::to_tensor(f[0]), oracle::to_tensor(f[1]), oracle::to_tensor(f[2]),
                                     oracle::to_tensor(f[3])};
    const auto y = qconv2d_forward(oracle::to_tensor(x), k, c.stride, c.pad);
    const Arr ref = oracle::quaternion_conv_expansion(x, f[0], f[1], f[2], f[3], c.stride, c.pad);
    worst = std::max(worst, oracle::max_abs_diff(oracle::from_tensor(y), ref));
  }
  return tolerance_result("quaternion conv == 16-term expansion", worst, 1e-10, trials);
}

CheckResult vectormap_conv_equivalence(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto c = random_conv_case(rng, true);
    const Arr x = oracle::random_arr({c.n, 3 * c.gi, c.h, c.w}, rng);
    const Arr a = oracle::random_arr({c.go, c.gi, c.kernel.h, c.kernel.w}, rng);
    const Arr b = oracle::random_arr({c.go, c.gi, c.kernel.h, c.kernel.w}, rng);
    const Arr cc = oracle::random_arr({c.go, c.gi, c.kernel.h, c.kernel.w}, rng);
    const Arr l = oracle::random_arr({3, 3}, rng);
    std::array<std::array<double, 3>, 3> lm;
    for (std::size_t u = 0; u < 3; ++u)
      for (std::size_t v = 0; v < 3; ++v) lm[u][v] = l.v[u * 3 + v];
    const VectormapKernel<double> k{oracle::to_tensor(a), oracle::to_tensor(b), oracle::to_tensor(cc),
                                    oracle::to_tensor(l)};
    const auto y = vconv_forward(oracle::to_tensor(x), k, c.kernel, c.stride, c.pad);
    const Arr ref = oracle::vectormap_row_expansion(x, a, b, cc, lm, c.stride, c.pad);
    worst = std::max(worst, oracle::max_abs_diff(oracle::from_tensor(y), ref));
  }
  return tolerance_result("vectormap conv == row expansion", worst, 1e-10, trials);
}

CheckResult phm_n1_is_affine(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::size_t mismatches = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = pick(rng, 1, 4), d = pick(rng, 1, 9), k = pick(rng, 1, 9);
    const TD x = oracle::to_tensor(oracle::random_arr({n, d}, rng));
    PHMWeight<double> w;
    w.n = 1;
    w.a_list = {oracle::to_tensor(oracle::random_arr({k, d}, rng))};
    w.i_list = {TD::from({1, 1}, {1.0})};
    w.bias = oracle::to_tensor(oracle::random_arr({k}, rng));
    const auto y = phm_dense_forward(x, w);
    const auto ref = matmul_affine(x, w.a_list[0], w.bias);
    const auto h = phm_synthesize(w);
    if (!std::equal(y.data().begin(), y.data().end(), ref.data().begin())) ++mismatches;
    if (!std::equal(h.data().begin(), h.data().end(), w.a_list[0].data().begin())) ++mismatches;
  }
  return {"PHM n=1 == affine (bit-exact)", mismatches == 0,
          std::to_string(mismatches) + " mismatches over " + std::to_string(trials) + " trials"};
}

CheckResult phm_hamilton_is_quaternion_dense(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = pick(rng, 1, 3), d4 = pick(rng, 1, 4), k4 = pick(rng, 1, 4);
    const Arr x = oracle::random_arr({n, 4 * d4}, rng);
    std::array<Arr, 4> a;
    PHMWeight<double> w;
    w.n = 4;
    for (int c = 0; c < 4; ++c) {
      a[static_cast<std::size_t>(c)] = oracle::random_arr({k4, d4}, rng);
      w.a_list.push_back(oracle::to_tensor(a[static_cast<std::size_t>(c)]));
      std::vector<double> m;
      for (const auto& row : hamilton_basis(c)) m.insert(m.end(), row.begin(), row.end());
      w.i_list.push_back(TD::from({4, 4}, m));
    }
    const Arr bias = oracle::random_arr({4 * k4}, rng);
    w.bias = oracle::to_tensor(bias);
    const auto y = phm_dense_forward(oracle::to_tensor(x), w);
    worst = std::max(worst, oracle::max_abs_diff(oracle::from_tensor(y), oracle::quaternion_dense(x, a, bias.v)));
  }
  return tolerance_result("PHM n=4 (Hamilton I) == quaternion dense", worst, 1e-10, trials);
}

CheckResult kronecker_vec_identity(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t a = pick(rng, 1, 4), b = pick(rng, 1, 4), c = pick(rng, 1, 4), d = pick(rng, 1, 4);
    const Arr p = oracle::random_arr({a, b}, rng);
    const Arr q = oracle::random_arr({c, d}, rng);
    const Arr x = oracle::random_arr({d, b}, rng);
    const Arr pq = oracle::from_tensor(kronecker(oracle::to_tensor(p), oracle::to_tensor(q)));
    const auto lhs = oracle::matvec(pq, oracle::vec_colmajor(x));
    worst = std::max(worst, oracle::max_abs_diff(lhs, oracle::vec_qxpt(p, q, x)));
    worst = std::max(worst, oracle::max_abs_diff(pq, oracle::kron(p, q)));
  }
  return tolerance_result("(P kron Q) vec(X) == vec(Q X P^T)", worst, 1e-10, trials);
}

CheckResult phm_n5_matches_kron_sum(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t k5 = pick(rng, 1, 3), d5 = pick(rng, 1, 3);
    PHMWeight<double> w;
    w.n = 5;
    std::vector<Arr> is, as;
    for (int i = 0; i < 5; ++i) {
      is.push_back(oracle::random_arr({5, 5}, rng));
      as.push_back(oracle::random_arr({k5, d5}, rng));
      w.i_list.push_back(oracle::to_tensor(is.back()));
      w.a_list.push_back(oracle::to_tensor(as.back()));
    }
    w.bias = TD::zeros({5 * k5});
    worst = std::max(worst, oracle::max_abs_diff(oracle::from_tensor(phm_synthesize(w)), oracle::kron_sum(is, as)));
  }
  return tolerance_result("PHM n=5 synthesis == Kronecker-sum loop", worst, 1e-12, trials);
}

// gradients

namespace {

struct GradOutcome {
  double worst = 0;
  std::string where;
  std::size_t checked = 0;
};

GradOutcome grad_case(std::vector<TD> leaves, const std::vector<std::string>& names,
                      const std::function<TD()>& build, std::mt19937_64& rng, std::size_t per_leaf) {
  TD probe;
  {
    NoGradGuard g;
    probe = build();
  }
  const TD r = oracle::to_tensor(oracle::random_arr(probe.shape(), rng));
  const auto loss = [&] { return sum(mul(build(), r)); };
  for (auto& l : leaves) l.zero_grad();
  backward(loss());
  GradOutcome out;
  const auto value = [&] {
    NoGradGuard g;
    return loss().item();
  };
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    auto& l = leaves[i];
    std::vector<double> analytic(l.numel(), 0.0);
    if (l.has_grad()) analytic.assign(l.grad().begin(), l.grad().end());
    const auto idx = oracle::sample_indices(l.numel(), per_leaf, rng);
    const auto gc = oracle::check_gradient(value, l.mutable_data(), analytic, 1e-6, idx);
    out.checked += gc.checked;
    if (gc.max_rel > out.worst || std::isinf(gc.max_rel)) {
      out.worst = gc.max_rel;
      out.where = names[i] + "[" + std::to_string(gc.worst) + "] analytic " + sci(gc.analytic) + " numeric " +
                  sci(gc.numeric);
    }
  }
  return out;
}

CheckResult grad_result(const std::string& name, const GradOutcome& g, double tol) {
  std::string detail = "max rel error " + sci(g.worst) + " over " + std::to_string(g.checked) + " coordinates";
  if (g.worst > tol) detail += " (worst " + g.where + ")";
  return {name, g.worst <= tol, detail};
}

TD rnd(const Shape& s, std::mt19937_64& rng, double scale = 1.0) {
  return oracle::to_tensor(oracle::random_arr(s, rng, scale), true);
}

}  // namespace

std::vector<CheckResult> layer_gradient_checks(std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  const std::size_t per = 24;
  const std::string pre = "gradient ";

  {
    auto x = rnd({2, 3, 6, 6}, rng), k = rnd({4, 3, 3, 3}, rng);
    out.push_back(grad_result(pre + "conv2d",
                              grad_case({x, k}, {"x", "kernel"},
                                        [&] { return conv2d(x, k, {2, 1}, {1, 1}); }, rng, per),
                              tol));
  }
  {
    auto x = rnd({3, 7}, rng), w = rnd({5, 7}, rng), b = rnd({5}, rng);
    out.push_back(grad_result(pre + "matmul_affine",
                              grad_case({x, w, b}, {"x", "W", "b"}, [&] { return matmul_affine(x, w, b); }, rng, per),
                              tol));
  }
  {
    auto x = rnd({3, 4, 3, 3}, rng), g = rnd({4}, rng), b = rnd({4}, rng);
    BatchNormState<double> st(4);
    out.push_back(grad_result(pre + "batchnorm (training)",
                              grad_case({x, g, b}, {"x", "gamma", "beta"},
                                        [&] { return batchnorm2d(x, g, b, st, true); }, rng, per),
                              tol));
    BatchNormState<double> ev(4);
    for (auto& v : ev.running_mean) v = 0.3;
    for (auto& v : ev.running_var) v = 1.7;
    out.push_back(grad_result(pre + "batchnorm (eval)",
                              grad_case({x, g, b}, {"x", "gamma", "beta"},
                                        [&] { return batchnorm2d(x, g, b, ev, false); }, rng, per),
                              tol));
  }
  {
    Arr a = oracle::random_arr({2, 3, 4, 4}, rng);
    for (auto& v : a.v) v = (v < 0 ? -0.1 : 0.1) + v;  // away from the kink
    auto x = oracle::to_tensor(a, true);
    out.push_back(grad_result(pre + "relu", grad_case({x}, {"x"}, [&] { return relu(x); }, rng, per), tol));
  }
  {
    auto x = rnd({2, 3, 4, 5}, rng);
    out.push_back(grad_result(pre + "global_avg_pool",
                              grad_case({x}, {"x"}, [&] { return global_avg_pool(x); }, rng, per), tol));
  }
  {
    auto z = rnd({4, 5}, rng);
    const std::vector<std::int32_t> labels{0, 3, 4, 1};
    out.push_back(grad_result(pre + "softmax_cross_entropy",
                              grad_case({z}, {"logits"},
                                        [&] { return softmax_cross_entropy(z, std::span<const std::int32_t>(labels)); },
                                        rng, per),
                              tol));
  }
  {
    auto x = rnd({2, 3, 2, 2}, rng), y = rnd({2, 3, 2, 2}, rng);
    out.push_back(grad_result(pre + "add/mul/scale/reshape/pad_channels",
                              grad_case({x, y}, {"x", "y"},
                                        [&] {
                                          auto h = mul(add(x, y), scale(y, 0.7));
                                          return pad_channels(h.reshape({2, 3, 4, 1}), 1, 0);
                                        },
                                        rng, per),
                              tol));
  }
  {
    auto x = rnd({2, 8, 5, 5}, rng);
    QuaternionKernel<double> k{rnd({2, 2, 3, 3}, rng), rnd({2, 2, 3, 3}, rng), rnd({2, 2, 3, 3}, rng),
                               rnd({2, 2, 3, 3}, rng)};
    out.push_back(grad_result(pre + "qconv2d",
                              grad_case({x, k.r, k.i, k.j, k.k}, {"x", "F_r", "F_i", "F_j", "F_k"},
                                        [&] { return qconv2d_forward(x, k, {1, 1}, {1, 1}); }, rng, per),
                              tol));
  }
  {
    auto x = rnd({2, 6, 5, 5}, rng);
    VectormapKernel<double> k{rnd({2, 2, 3, 3}, rng), rnd({2, 2, 3, 3}, rng), rnd({2, 2, 3, 3}, rng),
                              rnd({3, 3}, rng)};
    out.push_back(grad_result(pre + "vconv 3x3",
                              grad_case({x, k.a, k.b, k.c, k.l}, {"x", "A", "B", "C", "L"},
                                        [&] { return vconv_forward(x, k, {3, 3}, {2, 2}, {1, 1}); }, rng, per),
                              tol));
  }
  {
    auto x = rnd({2, 6, 6, 6}, rng);
    VectormapKernel<double> h{rnd({2, 2, 3, 1}, rng), rnd({2, 2, 3, 1}, rng), rnd({2, 2, 3, 1}, rng),
                              rnd({3, 3}, rng)};
    VectormapKernel<double> w{rnd({2, 2, 1, 3}, rng), rnd({2, 2, 1, 3}, rng), rnd({2, 2, 1, 3}, rng),
                              rnd({3, 3}, rng)};
    out.push_back(grad_result(pre + "axial vconv pair (3x1 then 1x3, stride 2)",
                              grad_case({x, h.a, h.l, w.b, w.l}, {"x", "A_h", "L_h", "B_w", "L_w"},
                                        [&] {
                                          auto y = vconv_forward(x, h, {3, 1}, {2, 1}, {1, 0});
                                          return vconv_forward(y, w, {1, 3}, {1, 2}, {0, 1});
                                        },
                                        rng, per),
                              tol));
  }
  for (std::size_t n : {4u, 5u}) {
    auto x = rnd({3, 2 * n}, rng);
    PHMWeight<double> w;
    w.n = n;
    std::vector<TD> leaves{x};
    std::vector<std::string> names{"x"};
    for (std::size_t i = 0; i < n; ++i) {
      w.a_list.push_back(rnd({2, 2}, rng));
      w.i_list.push_back(rnd({n, n}, rng));
      leaves.push_back(w.a_list.back());
      names.push_back("A" + std::to_string(i));
      leaves.push_back(w.i_list.back());
      names.push_back("I" + std::to_string(i));
    }
    w.bias = rnd({2 * n}, rng);
    leaves.push_back(w.bias);
    names.push_back("bias");
    out.push_back(grad_result(pre + "phm_dense n=" + std::to_string(n),
                              grad_case(leaves, names, [&] { return phm_dense_forward(x, w); }, rng, 8), tol));
  }
  {
    auto p = rnd({2, 3}, rng), q = rnd({3, 2}, rng);
    out.push_back(grad_result(pre + "kronecker",
                              grad_case({p, q}, {"P", "Q"}, [&] { return kronecker(p, q); }, rng, per), tol));
  }
  return out;
}

ArchConfig tiny_axial_config(std::size_t side, std::size_t num_classes, std::size_t phm_n) {
  ArchConfig c;
  c.family = Family::axial;
  c.multipliers = {1, 1, 1, 1};
  c.widths = {12, 24, 48, 96};
  c.stem_channels = 12;
  c.num_classes = num_classes;
  c.input_size = {side, side};
  c.phm_n = phm_n;
  return c;
}

CheckResult end_to_end_gradient(std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  auto net = build_network<double>(tiny_axial_config(8, 8, 4), seed);
  auto x = rnd({4, 3, 8, 8}, rng);
  std::vector<std::int32_t> labels{1, 5, 2, 7};
  const auto loss = [&] { return softmax_cross_entropy(net.forward(x, true), std::span<const std::int32_t>(labels)); };

  auto reg = net.registry();
  std::vector<TD> leaves{x};
  std::vector<std::string> names{"image"};
  for (const char* n : {"stem.conv.r", "stem.conv.k", "group1.block0.conv1.i", "group1.block0.conv2.a",
                        "group1.block0.conv2.L", "group2.block0.conv3.c", "group2.block0.conv3.j",
                        "group3.block0.proj.conv.r", "group3.block0.bn2.gamma", "group4.block0.bn4.beta",
                        "group4.block0.conv2.L", "head.A0", "head.I2", "head.bias"}) {
    for (const auto& p : reg.params)
      if (p.name == n) {
        leaves.push_back(p.tensor);
        names.push_back(n);
      }
  }
  for (const auto& p : reg.params) p.tensor.node()->grad.clear();
  x.zero_grad();
  backward(loss());
  GradOutcome out;
  const auto value = [&] {
    NoGradGuard g;
    return loss().item();
  };
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    auto& l = leaves[i];
    std::vector<double> analytic(l.numel(), 0.0);
    if (l.has_grad()) analytic.assign(l.grad().begin(), l.grad().end());
    const auto idx = oracle::sample_indices(l.numel(), 6, rng);
    const auto gc = oracle::check_gradient(value, l.mutable_data(), analytic, 1e-6, idx);
    out.checked += gc.checked;
    if (gc.max_rel > out.worst) {
      out.worst = gc.max_rel;
      out.where = names[i] + "[" + std::to_string(gc.worst) + "] analytic " + sci(gc.analytic) + " numeric " +
                  sci(gc.numeric);
    }
  }
  auto r = grad_result("end-to-end gradient, tiny axial net (8x8 input, step 1e-6)", out, tol);
  r.detail += "; worst at " + out.where;
  return r;
}

// structure

CheckResult weight_sharing_cardinality() {
  std::size_t layers = 0;
  std::vector<std::string> problems;
  for (const char* arch : {"axial-26", "quaternion-26", "vectormap-26"}) {
    ShapeOnlyScope shape_only;
    auto net = build_network<float>(named_arch(arch));
    const auto reg = net.registry();
    for (const auto& row : net.trace()) {
      if (!is_conv(row.spec.kind)) continue;
      ++layers;
      const auto params = reg.with_prefix(row.name + ".");
      const std::size_t n = algebra_dim(row.spec.kind);
      const Shape comp{row.spec.out_channels / n, row.spec.in_channels / n, row.spec.kernel.h, row.spec.kernel.w};
      std::size_t kernels = 0, l = 0, scalars = 0;
      for (const auto& p : params) {
        scalars += p.tensor.numel();
        if (p.tensor.shape() == comp) ++kernels;
        else if (p.tensor.shape() == Shape{3, 3} && p.name.ends_with(".L")) ++l;
      }
      const bool ok = kernels == n && l == (n == 3 ? 1u : 0u) && params.size() == kernels + l &&
                      scalars == layer_param_count(row.spec);
      if (!ok) problems.push_back(std::string(arch) + ":" + row.name);
    }
  }
  return {"weight sharing: 4 kernels per quaternion layer, 3 kernels + L per vectormap layer", problems.empty(),
          std::to_string(layers) + " conv layers inspected" +
              (problems.empty() ? std::string() : ", first violation " + problems.front())};
}

CheckResult axial_receptive_field() {
  std::mt19937_64 rng(11);
  LayerSpec hs{LayerKind::axial_v_h, 3, 3, {3, 1}, {1, 1}, {1, 0}, 0};
  LayerSpec ws{LayerKind::axial_v_w, 3, 3, {1, 3}, {1, 1}, {0, 1}, 0};
  ConvLayer<double> h(hs, rng), w(ws, rng);
  std::uniform_real_distribution<double> pos(0.5, 1.5);
  for (auto* layer : {&h, &w})
    for (auto t : layer->components())
      for (auto& v : t.mutable_data()) v = pos(rng);
  bool ok = true;
  std::string detail;
  for (std::size_t lane = 0; lane < 3; ++lane) {
    auto img = TD::zeros({1, 3, 9, 9});
    img.mutable_data()[(lane * 9 + 4) * 9 + 4] = 1.0;
    const auto y = w.forward(h.forward(img));
    std::set<std::pair<std::size_t, std::size_t>> support;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t r = 0; r < 9; ++r)
        for (std::size_t q = 0; q < 9; ++q)
          if (y.data()[(c * 9 + r) * 9 + q] != 0.0) support.insert({r, q});
    std::set<std::pair<std::size_t, std::size_t>> want;
    for (std::size_t r = 3; r <= 5; ++r)
      for (std::size_t q = 3; q <= 5; ++q) want.insert({r, q});
    if (support != want) {
      ok = false;
      detail = "impulse on lane " + std::to_string(lane) + " reaches " + std::to_string(support.size()) + " pixels";
    }
  }
  return {"axial pair receptive field is exactly 3x3", ok, ok ? "impulse on each lane -> 3x3 patch" : detail};
}

CheckResult spatial_ladder() {
  const std::vector<Shape> want{{120, 32, 32}, {480, 32, 32}, {960, 16, 16}, {1920, 8, 8}, {3840, 4, 4}};
  bool ok = true;
  std::string detail = "32 -> 32 -> 16 -> 8 -> 4 for";
  for (const char* arch : {"axial-26", "quaternion-26", "qphm-26", "vectormap-26"}) {
    ShapeOnlyScope shape_only;
    auto net = build_network<float>(named_arch(arch));
    std::vector<std::string> tails{"stem.bn"};
    for (std::size_t g = 0; g < 4; ++g)
      tails.push_back("group" + std::to_string(g + 1) + ".block" + std::to_string(net.config().multipliers[g] - 1) +
                      ".out");
    std::vector<Shape> got(tails.size());
    NoGradGuard no_grad;
    net.forward(Tensor<float>::zeros({1, 3, 32, 32}), false, [&](const std::string& name, const Tensor<float>& t) {
      for (std::size_t i = 0; i < tails.size(); ++i)
        if (name == tails[i]) got[i] = {t.dim(1), t.dim(2), t.dim(3)};
    });
    if (got != want) {
      ok = false;
      detail = std::string(arch) + " deviates";
      break;
    }
    detail += std::string(" ") + arch;
  }
  return {"spatial ladder of the four 26-layer families", ok, detail};
}

CheckResult param_ordering() {
  bool ok = true;
  std::string detail;
  for (const char* depth : {"26", "35", "50"}) {
    std::uint64_t p[3];
    const char* fams[3] = {"axial-", "qphm-", "vectormap-"};
    for (int i = 0; i < 3; ++i) {
      ShapeOnlyScope shape_only;
      auto net = build_network<float>(named_arch(std::string(fams[i]) + depth));
      p[i] = count_params(net);
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s: %.2fM < %.2fM < %.2fM; ", depth, p[0] / 1e6, p[1] / 1e6, p[2] / 1e6);
    detail += buf;
    ok = ok && p[0] < p[1] && p[1] < p[2];
  }
  return {"params axial < qphm < vectormap at 26/35/50 layers", ok, detail};
}

// cost

CheckResult mac_counter_matches_instrumented(std::uint64_t seed) {
  bool ok = true;
  std::string detail;
  for (Family f : {Family::axial, Family::quaternion, Family::qphm, Family::vectormap}) {
    ArchConfig cfg = tiny_axial_config(8, 8, 4);
    cfg.family = f;
    if (f == Family::vectormap) cfg.stem_channels = 12;
    auto net = build_network<double>(cfg, seed);
    const CostReport rep = count_flops(net, {3, 8, 8});
    std::mt19937_64 rng(seed);
    const auto x = oracle::to_tensor(oracle::random_arr({2, 3, 8, 8}, rng));
    std::uint64_t executed = 0;
    {
      NoGradGuard no_grad;
      instrument::CountingScope scope;
      net.forward(x, false);
      executed = scope.count();
    }
    const bool match = executed == 2 * rep.macs;
    ok = ok && match;
    detail += std::string(family_name(f)) + " " + std::to_string(executed) + (match ? " == " : " != ") +
              std::to_string(2 * rep.macs) + "; ";
  }
  return {"analytic MAC count == instrumented execution (tiny nets, batch 2)", ok, detail};
}

namespace {

TraceRow spatial_row(LayerKind kind, std::size_t w, std::size_t res, Hw k, Hw pad) {
  LayerSpec s;
  s.kind = kind;
  s.in_channels = s.out_channels = w;
  s.kernel = k;
  s.padding = pad;
  return {"", s, {w, res, res}, {w, res, res}};
}

}  // namespace

CheckResult spatial_flop_ratio() {
  bool ok = true;
  std::size_t cases = 0;
  std::string detail;
  for (std::size_t w : {12u, 24u, 48u, 120u, 240u, 480u, 960u})
    for (std::size_t res : {32u, 16u, 8u, 4u}) {
      const auto pair = row_flops(spatial_row(LayerKind::axial_v_h, w, res, {3, 1}, {1, 0})) +
                        row_flops(spatial_row(LayerKind::axial_v_w, w, res, {1, 3}, {0, 1}));
      const auto quat = row_flops(spatial_row(LayerKind::qconv, w, res, {3, 3}, {1, 1}));
      ++cases;
      if (9 * pair != 8 * quat) {
        ok = false;
        detail = "w=" + std::to_string(w) + " res=" + std::to_string(res) + ": " + std::to_string(pair) + " vs " +
                 std::to_string(quat);
      }
    }
  // and on rows traced from built blocks
  std::mt19937_64 rng(3);
  ShapeOnlyScope shape_only;
  const auto ab = build_axial_bottleneck<float>(480, 120, 1, rng);
  const auto qb = build_quaternion_bottleneck<float>(480, 120, 1, rng);
  std::vector<TraceRow> ar, qr;
  ab.trace(ar, "a", {480, 32, 32});
  qb.trace(qr, "q", {480, 32, 32});
  std::uint64_t pair = 0, quat = 0;
  for (const auto& r : ar)
    if (r.name == "a.conv2" || r.name == "a.conv3") pair += row_flops(r);
  for (const auto& r : qr)
    if (r.name == "q.conv2") quat = row_flops(r);
  ok = ok && 9 * pair == 8 * quat;
  if (detail.empty())
    detail = std::to_string(cases) + " width/resolution cases; width 120 block at 32x32: " + std::to_string(pair) +
             " / " + std::to_string(quat) + " = 8/9";
  return {"axial pair spatial FLOPs / quaternion 3x3 FLOPs == 8/9", ok, detail};
}

CheckResult axial_block_fewer_params() {
  bool ok = true;
  double worst_ratio = 0;
  std::size_t cases = 0;
  std::string failing;
  std::mt19937_64 rng(5);
  for (std::size_t w : {12u, 24u, 36u, 60u, 120u, 240u, 480u, 960u})
    for (int proj = 0; proj < 2; ++proj) {
      ShapeOnlyScope shape_only;
      const std::size_t c_in = proj ? 2 * w : 4 * w;
      const std::size_t stride = proj ? 2 : 1;
      auto ab = build_axial_bottleneck<float>(c_in, w, stride, rng);
      auto qb = build_quaternion_bottleneck<float>(c_in, w, stride, rng);
      ParamRegistry<float> ra, rq;
      ab.collect(ra, "a");
      qb.collect(rq, "q");
      const double ratio = static_cast<double>(ra.scalar_count()) / static_cast<double>(rq.scalar_count());
      worst_ratio = std::max(worst_ratio, ratio);
      if (ra.scalar_count() >= rq.scalar_count()) {
        ok = false;
        failing += " w=" + std::to_string(w) + (proj ? "/proj " : "/id ") + std::to_string(ra.scalar_count()) +
                   " vs " + std::to_string(rq.scalar_count()) + ";";
      }
      ++cases;
    }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu blocks (widths 12..960), largest axial/quaternion ratio %.4f", cases,
                worst_ratio);
  return {"axial block params < quaternion block params", ok,
          buf + (failing.empty() ? std::string() : "; not fewer at" + failing)};
}

std::vector<CheckResult> property_suite(std::uint64_t seed) {
  std::vector<CheckResult> all;
  all.push_back(conv2d_matches_naive(100, seed));
  all.push_back(quaternion_conv_equivalence(100, seed + 1));
  all.push_back(vectormap_conv_equivalence(100, seed + 2));
  all.push_back(phm_n1_is_affine(100, seed + 3));
  all.push_back(phm_hamilton_is_quaternion_dense(100, seed + 4));
  all.push_back(kronecker_vec_identity(100, seed + 5));
  all.push_back(phm_n5_matches_kron_sum(100, seed + 6));
  for (auto& r : layer_gradient_checks(seed + 7)) all.push_back(std::move(r));
  all.push_back(end_to_end_gradient(seed + 8));
  all.push_back(weight_sharing_cardinality());
  all.push_back(axial_receptive_field());
  all.push_back(spatial_ladder());
  all.push_back(param_ordering());
  all.push_back(mac_counter_matches_instrumented(seed + 9));
  all.push_back(spatial_flop_ratio());
  all.push_back(axial_block_fewer_params());
  return all;
}

}  // namespace axh::verify

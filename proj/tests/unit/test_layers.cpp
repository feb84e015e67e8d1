#include <random>

#include "axh/errors.hpp"
#include "axh/layers.hpp"
#include "axh/oracles.hpp"
#include "doctest.h"

using namespace axh;
using TD = Tensor<double>;
using oracle::Arr;

namespace {

TD delta(std::size_t kh, std::size_t kw) {
  auto t = TD::zeros({1, 1, kh, kw});
  t.mutable_data()[(kh / 2) * kw + kw / 2] = 1.0;
  return t;
}

LayerSpec conv_spec(LayerKind kind, std::size_t cin, std::size_t cout, Hw k, Hw pad = {0, 0}, Hw stride = {1, 1}) {
  return {kind, cin, cout, k, stride, pad, 0};
}

std::size_t registry_scalars(const ConvLayer<double>& l) {
  ParamRegistry<double> reg;
  l.collect(reg, "x");
  return reg.scalar_count();
}

}  // namespace

TEST_CASE("quaternion conv with a centered real delta is the identity") {
  std::mt19937_64 rng(1);
  const auto x = oracle::to_tensor(oracle::random_arr({2, 4, 5, 5}, rng));
  const auto z = TD::zeros({1, 1, 3, 3});
  const auto y = qconv2d_forward(x, QuaternionKernel<double>{delta(3, 3), z, z, z}, {1, 1}, {1, 1});
  CHECK(oracle::max_abs_diff(oracle::from_tensor(y), oracle::from_tensor(x)) == 0.0);
}

TEST_CASE("pure-i filter on pure-r input lands in the i lane") {
  auto x = TD::zeros({1, 4, 2, 2});
  for (std::size_t p = 0; p < 4; ++p) x.mutable_data()[p] = 1.0 + static_cast<double>(p);  // r lane
  const auto z = TD::zeros({1, 1, 1, 1});
  const auto y = qconv2d_forward(x, QuaternionKernel<double>{z, TD::full({1, 1, 1, 1}, 1.0), z, z}, {1, 1}, {0, 0});
  for (std::size_t p = 0; p < 4; ++p) {
    CHECK(y.data()[p] == 0.0);
    CHECK(y.data()[4 + p] == 1.0 + static_cast<double>(p));
    CHECK(y.data()[8 + p] == 0.0);
    CHECK(y.data()[12 + p] == 0.0);
  }
}

TEST_CASE("quaternion conv matches the 16-term expansion") {
  std::mt19937_64 rng(2);
  const Arr x = oracle::random_arr({2, 8, 5, 5}, rng);
  std::array<Arr, 4> f;
  for (auto& a : f) a = oracle::random_arr({2, 2, 3, 3}, rng);
  const QuaternionKernel<double> k{oracle::to_tensor(f[0]), oracle::to_tensor(f[1]), oracle::to_tensor(f[2]),
                                   oracle::to_tensor(f[3])};
  const auto y = qconv2d_forward(oracle::to_tensor(x), k, {1, 1}, {1, 1});
  CHECK(oracle::max_abs_diff(oracle::from_tensor(y), oracle::quaternion_conv_expansion(x, f[0], f[1], f[2], f[3],
                                                                                       {1, 1}, {1, 1})) <= 1e-10);
}

TEST_CASE("vectormap identity and axial composition") {
  std::mt19937_64 rng(3);
  const auto x = oracle::to_tensor(oracle::random_arr({1, 6, 5, 5}, rng));
  const auto ones = TD::full({3, 3}, 1.0);
  const auto z33 = TD::zeros({2, 2, 3, 3});
  auto a = TD::zeros({2, 2, 3, 3});
  for (std::size_t g = 0; g < 2; ++g) a.mutable_data()[((g * 2 + g) * 3 + 1) * 3 + 1] = 1.0;
  const auto y = vconv_forward(x, VectormapKernel<double>{a, z33, z33, ones}, {3, 3}, {1, 1}, {1, 1});
  CHECK(oracle::max_abs_diff(oracle::from_tensor(y), oracle::from_tensor(x)) == 0.0);

  // (3,1) then (1,3) with centered deltas
  auto ah = TD::zeros({2, 2, 3, 1}), aw = TD::zeros({2, 2, 1, 3});
  for (std::size_t g = 0; g < 2; ++g) {
    ah.mutable_data()[(g * 2 + g) * 3 + 1] = 1.0;
    aw.mutable_data()[(g * 2 + g) * 3 + 1] = 1.0;
  }
  const auto zh = TD::zeros({2, 2, 3, 1}), zw = TD::zeros({2, 2, 1, 3});
  const auto h = vconv_forward(x, VectormapKernel<double>{ah, zh, zh, ones}, {3, 1}, {1, 1}, {1, 0});
  const auto w = vconv_forward(h, VectormapKernel<double>{aw, zw, zw, ones}, {1, 3}, {1, 1}, {0, 1});
  CHECK(oracle::max_abs_diff(oracle::from_tensor(w), oracle::from_tensor(x)) == 0.0);
}

TEST_CASE("vconv rejects a kernel shape outside the allowed set") {
  const auto k = TD::zeros({1, 1, 5, 5});
  CHECK_THROWS_AS(vconv_forward(TD::zeros({1, 3, 6, 6}), VectormapKernel<double>{k, k, k, TD::zeros({3, 3})}, {5, 5},
                                {1, 1}, {0, 0}),
                  ConfigError);
}

TEST_CASE("layer spec validation") {
  CHECK_THROWS_AS(validate_layer_spec(conv_spec(LayerKind::qconv, 6, 8, {1, 1})), ConfigError);
  CHECK_THROWS_AS(validate_layer_spec(conv_spec(LayerKind::vconv, 6, 8, {1, 1})), ConfigError);
  CHECK_THROWS_AS(validate_layer_spec(conv_spec(LayerKind::axial_v_h, 6, 6, {1, 3})), ConfigError);
  CHECK_THROWS_AS(validate_layer_spec(conv_spec(LayerKind::axial_v_w, 6, 6, {3, 1})), ConfigError);
  CHECK_NOTHROW(validate_layer_spec(conv_spec(LayerKind::axial_v_h, 6, 6, {3, 1})));
  LayerSpec phm{LayerKind::phm_dense, 12, 7, {1, 1}, {1, 1}, {0, 0}, 5};
  CHECK_THROWS_AS(validate_layer_spec(phm), ConfigError);
  std::mt19937_64 rng(0);
  CHECK_THROWS_AS(ConvLayer<double>(conv_spec(LayerKind::qconv, 4, 6, {1, 1}), rng), ConfigError);
  CHECK_THROWS_AS(qconv2d_forward(TD::zeros({1, 6, 3, 3}),
                                  QuaternionKernel<double>{TD::zeros({1, 1, 1, 1}), TD::zeros({1, 1, 1, 1}),
                                                           TD::zeros({1, 1, 1, 1}), TD::zeros({1, 1, 1, 1})},
                                  {1, 1}, {0, 0}),
                  ConfigError);
}

TEST_CASE("parameter counts by registry introspection") {
  std::mt19937_64 rng(4);
  for (std::size_t c : {12u, 24u, 120u}) {
    const ConvLayer<double> real(conv_spec(LayerKind::conv, c, c, {3, 3}, {1, 1}), rng);
    const ConvLayer<double> q(conv_spec(LayerKind::qconv, c, c, {3, 3}, {1, 1}), rng);
    const ConvLayer<double> v(conv_spec(LayerKind::vconv, c, c, {3, 3}, {1, 1}), rng);
    const ConvLayer<double> ah(conv_spec(LayerKind::axial_v_h, c, c, {3, 1}, {1, 0}), rng);
    const ConvLayer<double> aw(conv_spec(LayerKind::axial_v_w, c, c, {1, 3}, {0, 1}), rng);
    CHECK(registry_scalars(real) == 9 * c * c);
    CHECK(registry_scalars(q) * 4 == registry_scalars(real));
    CHECK(registry_scalars(v) == 9 * c * c / 3 + 9);
    CHECK(registry_scalars(q) == layer_param_count(q.spec()));
    CHECK(registry_scalars(v) == layer_param_count(v.spec()));
    // axial pair kernels: 6 taps against 9
    CHECK(3 * (registry_scalars(ah) - 9 + registry_scalars(aw) - 9) == 2 * (registry_scalars(v) - 9));
  }
  const ConvLayer<double> one(conv_spec(LayerKind::conv, 4, 4, {1, 1}), rng);
  CHECK(registry_scalars(one) == 16);

  const PHMDenseLayer<double> phm(5, 3840, 10, rng);
  ParamRegistry<double> reg;
  phm.collect(reg, "head");
  CHECK(reg.scalar_count() == 5 * 2 * 768 + 125 + 10);
  CHECK(reg.scalar_count() == layer_param_count(phm.spec()));
  CHECK(reg.with_prefix("head.I").size() == 5);
  CHECK(reg.with_prefix("head.A").size() == 5);
}

TEST_CASE("weight sharing: tensor counts and names") {
  std::mt19937_64 rng(5);
  const ConvLayer<double> q(conv_spec(LayerKind::qconv, 8, 12, {3, 3}, {1, 1}), rng);
  const ConvLayer<double> v(conv_spec(LayerKind::axial_v_w, 9, 6, {1, 3}, {0, 1}), rng);
  ParamRegistry<double> rq, rv;
  q.collect(rq, "q");
  v.collect(rv, "v");
  REQUIRE(rq.params.size() == 4);
  CHECK(rq.params[0].name == "q.r");
  CHECK(rq.params[3].name == "q.k");
  for (const auto& p : rq.params) CHECK(p.tensor.shape() == Shape{3, 2, 3, 3});
  REQUIRE(rv.params.size() == 4);
  CHECK(rv.params[3].name == "v.L");
  CHECK(rv.params[3].tensor.shape() == Shape{3, 3});
  for (std::size_t u = 0; u < 3; ++u)
    for (std::size_t w = 0; w < 3; ++w) CHECK(v.l_matrix().data()[u * 3 + w] == kVectormapInitialL[u][w]);
}

TEST_CASE("layer forward equals conv with the synthesized kernel") {
  std::mt19937_64 rng(6);
  const ConvLayer<double> q(conv_spec(LayerKind::qconv, 8, 4, {3, 3}, {1, 1}, {2, 2}), rng);
  const auto x = oracle::to_tensor(oracle::random_arr({2, 8, 7, 7}, rng));
  const auto y = q.forward(x);
  const auto ref = conv2d(x, q.synthesized_kernel(), {2, 2}, {1, 1});
  CHECK(oracle::max_abs_diff(oracle::from_tensor(y), oracle::from_tensor(ref)) <= 1e-12);
  CHECK(y.shape() == Shape{2, 4, 4, 4});
}

TEST_CASE("phm n=1 equals matmul_affine exactly") {
  std::mt19937_64 rng(7);
  PHMWeight<double> w = init_phm<double>(1, 6, 9, rng);
  const auto x = oracle::to_tensor(oracle::random_arr({4, 9}, rng));
  const auto y = phm_dense_forward(x, w);
  const auto r = matmul_affine(x, w.a_list[0], w.bias);
  CHECK(std::equal(y.data().begin(), y.data().end(), r.data().begin()));
}

TEST_CASE("shape-only scope zero-fills kernels but keeps L and I") {
  std::mt19937_64 rng(8);
  {
    ShapeOnlyScope scope;
    CHECK(shape_only());
    const ConvLayer<float> v(conv_spec(LayerKind::vconv, 6, 6, {3, 3}, {1, 1}), rng);
    for (const auto& c : v.components())
      for (float x : c.data()) CHECK(x == 0.0f);
    CHECK(v.l_matrix().data()[3] == -1.0f);
    const PHMDenseLayer<float> p(4, 8, 8, rng);
    CHECK(p.weight().i_list[0].data()[0] == 1.0f);
  }
  CHECK_FALSE(shape_only());
}

TEST_CASE("dense and batchnorm layers") {
  std::mt19937_64 rng(9);
  const DenseLayer<double> d(7, 3, rng);
  ParamRegistry<double> reg;
  d.collect(reg, "fc");
  CHECK(reg.scalar_count() == 7 * 3 + 3);
  CHECK(layer_param_count(d.spec()) == 24);
  BatchNormLayer<double> bn(5);
  ParamRegistry<double> rb;
  bn.collect(rb, "bn");
  CHECK(rb.scalar_count() == 10);
  CHECK(rb.buffers.size() == 2);
  CHECK(rb.buffers[0].name == "bn.running_mean");
}

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "axh/errors.hpp"
#include "axh/ops.hpp"
#include "axh/oracles.hpp"
#include "doctest.h"

using namespace axh;
using TD = Tensor<double>;
using oracle::Arr;

TEST_CASE("tensor construction and shape invariants") {
  auto t = TD::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(shape_numel(t.shape()) == t.data().size());
  CHECK_THROWS_AS(TD::from({2, 2}, {1, 2, 3}), DimensionError);
  auto r = t.reshape({3, 2});
  CHECK(r.shape() == Shape{3, 2});
  CHECK(t.shape() == Shape{2, 3});
  CHECK_THROWS_AS(t.reshape({4, 2}), DimensionError);
  CHECK(TD::scalar(2.5).item() == 2.5);
  CHECK_THROWS(t.item());
}

TEST_CASE("conv2d hand examples") {
  auto ones = TD::full({1, 1, 3, 3}, 1.0);
  auto y = conv2d(ones, TD::from({1, 1, 1, 1}, {2.0}), {1, 1}, {0, 0});
  CHECK(y.shape() == Shape{1, 1, 3, 3});
  for (double v : y.data()) CHECK(v == 2.0);

  std::vector<double> nine(9);
  std::iota(nine.begin(), nine.end(), 1.0);
  auto s = conv2d(TD::from({1, 1, 3, 3}, nine), TD::full({1, 1, 3, 3}, 1.0), {1, 1}, {0, 0});
  CHECK(s.shape() == Shape{1, 1, 1, 1});
  CHECK(s.item() == 45.0);
}

TEST_CASE("conv2d matches the nested-loop oracle") {
  std::mt19937_64 rng(5);
  const Arr x = oracle::random_arr({2, 3, 8, 8}, rng);
  const Arr k = oracle::random_arr({4, 3, 3, 3}, rng);
  const auto y = conv2d(oracle::to_tensor(x), oracle::to_tensor(k), {2, 2}, {1, 1});
  CHECK(y.shape() == Shape{2, 4, 4, 4});
  CHECK(oracle::max_abs_diff(oracle::from_tensor(y), oracle::naive_conv2d(x, k, {2, 2}, {1, 1})) <= 1e-12);
}

TEST_CASE("conv2d direct-loop path under the counter agrees with the fast path") {
  std::mt19937_64 rng(6);
  const auto x = oracle::to_tensor(oracle::random_arr({1, 4, 6, 5}, rng));
  const auto k = oracle::to_tensor(oracle::random_arr({2, 4, 3, 1}, rng));
  const auto fast = conv2d(x, k, {1, 2}, {1, 0});
  std::uint64_t macs = 0;
  TD slow;
  {
    instrument::CountingScope scope;
    slow = conv2d(x, k, {1, 2}, {1, 0});
    macs = scope.count();
  }
  CHECK(oracle::max_abs_diff(oracle::from_tensor(fast), oracle::from_tensor(slow)) <= 1e-12);
  CHECK(macs == slow.numel() * 4 * 3 * 1);
}

TEST_CASE("conv2d linearity") {
  std::mt19937_64 rng(7);
  const Arr x = oracle::random_arr({1, 2, 5, 5}, rng), y = oracle::random_arr({1, 2, 5, 5}, rng);
  const auto k = oracle::to_tensor(oracle::random_arr({3, 2, 3, 3}, rng));
  const auto lhs = conv2d(oracle::to_tensor(oracle::lin(1.5, x, -0.25, y)), k, {1, 1}, {1, 1});
  const auto cx = oracle::from_tensor(conv2d(oracle::to_tensor(x), k, {1, 1}, {1, 1}));
  const auto cy = oracle::from_tensor(conv2d(oracle::to_tensor(y), k, {1, 1}, {1, 1}));
  CHECK(oracle::max_abs_diff(oracle::from_tensor(lhs), oracle::lin(1.5, cx, -0.25, cy)) <= 1e-10);
}

TEST_CASE("conv2d rejects mismatched shapes") {
  CHECK_THROWS_AS(conv2d(TD::zeros({1, 3, 4, 4}), TD::zeros({2, 4, 3, 3}), {1, 1}, {0, 0}), DimensionError);
  CHECK_THROWS_AS(conv2d(TD::zeros({1, 3, 2, 2}), TD::zeros({2, 3, 3, 3}), {1, 1}, {0, 0}), ContractError);
}

TEST_CASE("matmul_affine hand examples and oracle") {
  auto eye = TD::from({2, 2}, {1, 0, 0, 1});
  auto y = matmul_affine(TD::from({1, 2}, {3, 4}), eye, TD::zeros({2}));
  CHECK(y.data()[0] == 3.0);
  CHECK(y.data()[1] == 4.0);
  auto z = matmul_affine(TD::from({1, 2}, {2, 3}), TD::from({2, 2}, {1, 1, 1, -1}), TD::from({2}, {1, 0}));
  CHECK(z.data()[0] == 6.0);
  CHECK(z.data()[1] == -1.0);

  std::mt19937_64 rng(8);
  const Arr x = oracle::random_arr({3, 7}, rng), w = oracle::random_arr({5, 7}, rng);
  const Arr b = oracle::random_arr({5}, rng);
  const auto r = matmul_affine(oracle::to_tensor(x), oracle::to_tensor(w), oracle::to_tensor(b));
  CHECK(oracle::max_abs_diff(oracle::from_tensor(r), oracle::naive_affine(x, w, b.v)) <= 1e-12);
}

TEST_CASE("backward basics") {
  auto x = TD::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  backward(sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);

  auto q = TD::from({3}, {1, 2, 3}, true);
  backward(sum(mul(q, q)));
  CHECK(q.grad()[0] == 2.0);
  CHECK(q.grad()[1] == 4.0);
  CHECK(q.grad()[2] == 6.0);
  CHECK_THROWS_AS(backward(mul(q, q)), ContractError);
}

TEST_CASE("topological order puts inputs first and visits nodes once") {
  auto a = TD::from({2}, {1, 2}, true);
  auto b = add(a, a);
  auto c = mul(b, a);
  auto loss = sum(add(c, b));
  const auto order = topological_order(loss);
  std::set<Node<double>*> seen(order.begin(), order.end());
  CHECK(seen.size() == order.size());
  const auto pos = [&](const TD& t) { return std::find(order.begin(), order.end(), t.node().get()) - order.begin(); };
  CHECK(pos(a) < pos(b));
  CHECK(pos(b) < pos(c));
  CHECK(pos(c) < pos(loss));
  backward(loss);
  // loss = sum(2a*a + 2a): d/da = 4a + 2
  CHECK(a.grad()[0] == 6.0);
  CHECK(a.grad()[1] == 10.0);
}

TEST_CASE("backward twice with zeroed grads reproduces gradients") {
  std::mt19937_64 rng(10);
  auto x = oracle::to_tensor(oracle::random_arr({2, 3, 5, 5}, rng), true);
  auto k = oracle::to_tensor(oracle::random_arr({4, 3, 3, 3}, rng), true);
  const auto loss = [&] { return sum(relu(conv2d(x, k, {1, 1}, {1, 1}))); };
  backward(loss());
  const std::vector<double> g1(k.grad().begin(), k.grad().end());
  k.zero_grad();
  x.zero_grad();
  backward(loss());
  const std::vector<double> g2(k.grad().begin(), k.grad().end());
  CHECK(g1 == g2);
}

TEST_CASE("no-grad mode records nothing") {
  auto x = TD::from({2}, {1, 2}, true);
  NoGradGuard g;
  auto y = mul(x, x);
  CHECK_FALSE(y.requires_grad());
  CHECK(y.is_leaf());
}

TEST_CASE("pointwise suite examples") {
  auto r = relu(TD::from({3}, {-1, 0, 2}));
  CHECK(r.data()[0] == 0.0);
  CHECK(r.data()[1] == 0.0);
  CHECK(r.data()[2] == 2.0);
  CHECK(std::isnan(relu(TD::from({1}, {std::nan("")})).data()[0]));

  BatchNormState<double> st(1);
  auto bn = batchnorm2d(TD::full({2, 1, 2, 2}, 3.0), TD::full({1}, 1.0), TD::zeros({1}), st, true);
  for (double v : bn.data()) CHECK(v == 0.0);

  auto ce = softmax_cross_entropy(TD::zeros({3, 10}), std::vector<std::int32_t>{0, 4, 9});
  CHECK(ce.item() == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  CHECK(ce.item() == doctest::Approx(2.302585).epsilon(1e-6));

  auto pool = global_avg_pool(TD::from({1, 2, 1, 2}, {1, 3, 5, 7}));
  CHECK(pool.shape() == Shape{1, 2});
  CHECK(pool.data()[0] == 2.0);
  CHECK(pool.data()[1] == 6.0);
}

TEST_CASE("softmax rows sum to one and cross-entropy is non-negative") {
  std::mt19937_64 rng(11);
  const auto z = oracle::to_tensor(oracle::random_arr({6, 7}, rng, 5.0));
  const auto p = softmax_rows(z);
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 7; ++j) s += p[i * 7 + j];
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  const std::vector<std::int32_t> labels{0, 1, 2, 3, 4, 5};
  CHECK(softmax_cross_entropy(z, labels).item() >= 0.0);
  CHECK_THROWS_AS(softmax_cross_entropy(z, std::vector<std::int32_t>{0, 1, 2, 3, 4, 7}), ContractError);
}

TEST_CASE("batchnorm running statistics") {
  BatchNormState<double> st(1);
  auto x = TD::from({2, 1, 1, 2}, {1, 2, 3, 4});
  batchnorm2d(x, TD::full({1}, 1.0), TD::zeros({1}), st, true);
  CHECK(st.running_mean[0] == doctest::Approx(0.25));
  // unbiased batch variance 5/3
  CHECK(st.running_var[0] == doctest::Approx(0.9 + 0.1 * 5.0 / 3.0));
  auto e = batchnorm2d(x, TD::full({1}, 2.0), TD::full({1}, 1.0), st, false);
  CHECK(e.data()[0] == doctest::Approx(2.0 * (1 - 0.25) / std::sqrt(st.running_var[0] + 1e-5) + 1.0));
}

TEST_CASE("pad_channels inserts zero channels") {
  auto x = TD::from({1, 1, 1, 2}, {5, 6});
  auto y = pad_channels(x, 1, 2);
  CHECK(y.shape() == Shape{1, 4, 1, 2});
  CHECK(std::vector<double>(y.data().begin(), y.data().end()) == std::vector<double>{0, 0, 5, 6, 0, 0, 0, 0});
}

TEST_CASE("composite graph passes the finite-difference check") {
  std::mt19937_64 rng(12);
  auto x = oracle::to_tensor(oracle::random_arr({2, 2, 4, 4}, rng), true);
  auto k = oracle::to_tensor(oracle::random_arr({3, 2, 3, 3}, rng), true);
  auto g = oracle::to_tensor(oracle::random_arr({3}, rng), true);
  auto b = oracle::to_tensor(oracle::random_arr({3}, rng), true);
  auto w = oracle::to_tensor(oracle::random_arr({4, 3}, rng), true);
  auto c = oracle::to_tensor(oracle::random_arr({4}, rng), true);
  const std::vector<std::int32_t> labels{1, 3};
  const auto loss = [&] {
    BatchNormState<double> st(3);
    auto h = relu(batchnorm2d(conv2d(x, k, {1, 1}, {1, 1}), g, b, st, true));
    return softmax_cross_entropy(matmul_affine(global_avg_pool(h), w, c), labels);
  };
  backward(loss());
  const auto value = [&] {
    NoGradGuard ng;
    return loss().item();
  };
  for (TD* t : {&x, &k, &g, &b, &w, &c}) {
    const std::vector<double> analytic(t->grad().begin(), t->grad().end());
    const auto r = oracle::check_gradient(value, t->mutable_data(), analytic);
    CHECK(r.max_rel <= 1e-4);
  }
}

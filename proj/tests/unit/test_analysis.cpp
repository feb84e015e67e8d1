#include <random>
#include <sstream>

#include "axh/analysis.hpp"
#include "axh/checks.hpp"
#include "axh/errors.hpp"
#include "doctest.h"

using namespace axh;

namespace {

TraceRow row(LayerKind kind, std::size_t c, std::size_t res, Hw k, std::size_t cout = 0) {
  LayerSpec s;
  s.kind = kind;
  s.in_channels = c;
  s.out_channels = cout ? cout : c;
  s.kernel = k;
  return {"x", s, {c, res, res}, {s.out_channels, res, res}};
}

// Params of the real-valued network with the same layer shapes: every
// hypercomplex conv replaced by a dense real kernel, head by a dense layer.
std::uint64_t real_equivalent_params(const std::vector<TraceRow>& trace) {
  std::uint64_t p = 0;
  for (const auto& r : trace) {
    const auto& s = r.spec;
    if (is_conv(s.kind)) p += static_cast<std::uint64_t>(s.kernel.h) * s.kernel.w * s.in_channels * s.out_channels;
    else if (s.kind == LayerKind::dense || s.kind == LayerKind::phm_dense)
      p += static_cast<std::uint64_t>(s.in_channels) * s.out_channels + s.out_channels;
    else p += layer_param_count(s);
  }
  return p;
}

}  // namespace

TEST_CASE("row cost formulas") {
  const auto real = row(LayerKind::conv, 4, 1, {1, 1});
  CHECK(row_params(real) == 16);
  CHECK(row_macs(real) == 16);
  const auto q = row(LayerKind::qconv, 120, 32, {3, 3});
  CHECK(row_params(q) == 9 * 120 * 120 / 4);
  CHECK(row_macs(q) == 9ull * 120 * 120 * 32 * 32);
  CHECK(row_flops(q) * 4 == row_macs(q));
  const auto v = row(LayerKind::vconv, 120, 32, {3, 3});
  CHECK(row_params(v) == 9 * 120 * 120 / 3 + 9);
  CHECK(row_flops(v) * 3 == row_macs(v));
  // spatial-stage kernels at width 120
  const auto ah = row(LayerKind::axial_v_h, 120, 32, {3, 1});
  const auto aw = row(LayerKind::axial_v_w, 120, 32, {1, 3});
  CHECK(row_params(ah) - 9 + row_params(aw) - 9 == 28800);
  CHECK(row_params(q) == 32400);
  CHECK(9 * (row_flops(ah) + row_flops(aw)) == 8 * row_flops(q));
}

TEST_CASE("report totals equal the sum of rows") {
  ShapeOnlyScope s;
  auto net = build_network<float>(named_arch("qphm-26"));
  const auto r = count_flops(net, {3, 32, 32});
  std::uint64_t p = 0, f = 0, m = 0;
  for (const auto& x : r.rows) {
    p += x.params;
    f += x.flops;
    m += x.macs;
  }
  CHECK(p == r.params);
  CHECK(f == r.flops);
  CHECK(m == r.macs);
  CHECK(r.params == count_params(net));

  const auto csv = report_csv(r);
  std::istringstream in(csv);
  std::string line, last;
  std::getline(in, line);
  CHECK(line == "layer,params,flops");
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    last = line;
    ++lines;
  }
  CHECK(lines == r.rows.size() + 1);
  CHECK(last == "total," + std::to_string(r.params) + "," + std::to_string(r.flops));
  CHECK(report_table(r).find("total") != std::string::npos);
}

TEST_CASE("flops scale with resolution") {
  ShapeOnlyScope s;
  auto net = build_network<float>(named_arch("axial-26"));
  const auto small = count_flops(net, {3, 32, 32});
  const auto big = count_flops(net, {3, 64, 64});
  CHECK(big.params == small.params);
  CHECK(big.flops > 3 * small.flops);
}

TEST_CASE("parameter ordering including the real-valued equivalent") {
  ShapeOnlyScope s;
  auto a = build_network<float>(named_arch("axial-26"));
  auto p = build_network<float>(named_arch("qphm-26"));
  auto v = build_network<float>(named_arch("vectormap-26"));
  auto q = build_network<float>(named_arch("quaternion-26"));
  CHECK(count_params(a) < count_params(p));
  CHECK(count_params(p) < count_params(v));
  CHECK(count_params(v) < real_equivalent_params(q.trace()));
}

TEST_CASE("analytic MACs equal instrumented execution") {
  const auto r = verify::mac_counter_matches_instrumented(3);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("quantile and latency harness") {
  CHECK(quantile({1, 2, 3, 4, 5}, 0.5) == 3.0);
  CHECK(quantile({1, 2}, 0.5) == 1.5);
  CHECK(quantile({7}, 0.95) == 7.0);
  auto net = build_network<float>(verify::tiny_axial_config(8, 8, 4), 1);
  CHECK_THROWS_AS(bench_latency(net, {3, 8, 8}, 29, 5), ContractError);
  CHECK_THROWS_AS(bench_latency(net, {3, 8, 8}, 30, 4), ContractError);
  const auto st = bench_latency(net, {3, 8, 8}, 30, 5);
  CHECK(st.samples_ms.size() == 30);
  CHECK(st.p50_ms <= st.p95_ms);
  CHECK(st.mean_ms > 0.0);
}

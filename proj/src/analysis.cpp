#include "axh/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "axh/errors.hpp"

namespace axh {

std::uint64_t row_params(const TraceRow& row) { return layer_param_count(row.spec); }

std::uint64_t row_macs(const TraceRow& row) {
  const auto& s = row.spec;
  switch (s.kind) {
    case LayerKind::conv:
    case LayerKind::qconv:
    case LayerKind::vconv:
    case LayerKind::axial_v_h:
    case LayerKind::axial_v_w:
      return shape_numel(row.out) * s.kernel.h * s.kernel.w * s.in_channels;
    case LayerKind::dense:
    case LayerKind::phm_dense: return static_cast<std::uint64_t>(s.in_channels) * s.out_channels;
    case LayerKind::batchnorm:
    case LayerKind::relu: return shape_numel(row.out);
    case LayerKind::pool: return shape_numel(row.in);
  }
  return 0;
}

std::uint64_t row_flops(const TraceRow& row) {
  const auto& s = row.spec;
  if (is_conv(s.kind)) return row_macs(row) / algebra_dim(s.kind);
  if (s.kind == LayerKind::phm_dense) return row_macs(row) / s.phm_n;
  return row_macs(row);
}

CostReport cost_report(const std::vector<TraceRow>& trace) {
  CostReport r;
  for (const auto& t : trace) {
    CostRow row{t.name, t.spec.kind, row_params(t), row_flops(t), row_macs(t)};
    r.params += row.params;
    r.flops += row.flops;
    r.macs += row.macs;
    r.rows.push_back(std::move(row));
  }
  return r;
}

template <class T>
std::uint64_t count_params(Network<T>& net) {
  return net.registry().scalar_count();
}

template <class T>
CostReport count_flops(const Network<T>& net, const Shape& image) {
  return cost_report(net.trace(image));
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

template <class T>
LatencyStats bench_latency(Network<T>& net, const Shape& image, std::size_t runs, std::size_t warmup,
                           std::uint64_t seed) {
  if (runs < 30) throw ContractError("bench_latency needs at least 30 runs, got " + std::to_string(runs));
  if (warmup < 5) throw ContractError("bench_latency needs at least 5 warmup runs, got " + std::to_string(warmup));
  if (image.size() != 3) throw DimensionError("bench image must be C,H,W");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<T> px(shape_numel(image));
  for (auto& v : px) v = static_cast<T>(g(rng));
  const auto x = Tensor<T>::from({1, image[0], image[1], image[2]}, std::move(px));

  NoGradGuard no_grad;
  for (std::size_t i = 0; i < warmup; ++i) net.forward(x, false);
  LatencyStats st;
  st.samples_ms.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    net.forward(x, false);
    const auto t1 = std::chrono::steady_clock::now();
    st.samples_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  auto sorted = st.samples_ms;
  std::sort(sorted.begin(), sorted.end());
  st.mean_ms = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(runs);
  st.p50_ms = quantile(sorted, 0.50);
  st.p95_ms = quantile(sorted, 0.95);
  return st;
}

std::string report_csv(const CostReport& r) {
  std::ostringstream os;
  os << "layer,params,flops\n";
  for (const auto& row : r.rows) os << row.layer << ',' << row.params << ',' << row.flops << '\n';
  os << "total," << r.params << ',' << r.flops << '\n';
  return os.str();
}

std::string report_table(const CostReport& r) {
  std::size_t w = 5;
  for (const auto& row : r.rows) w = std::max(w, row.layer.size());
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %-10s %12s %15s %15s\n", static_cast<int>(w), "layer", "kind", "params",
                "flops", "real MACs");
  os << buf;
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %-10s %12llu %15llu %15llu\n", static_cast<int>(w), row.layer.c_str(),
                  std::string(kind_name(row.kind)).c_str(), static_cast<unsigned long long>(row.params),
                  static_cast<unsigned long long>(row.flops), static_cast<unsigned long long>(row.macs));
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-*s  %-10s %12llu %15llu %15llu\n", static_cast<int>(w), "total", "",
                static_cast<unsigned long long>(r.params), static_cast<unsigned long long>(r.flops),
                static_cast<unsigned long long>(r.macs));
  os << buf;
  std::snprintf(buf, sizeof buf, "params %.3fM  flops %.3fG  real MACs %.3fG\n", r.params / 1e6, r.flops / 1e9,
                r.macs / 1e9);
  os << buf;
  if (r.latency) {
    std::snprintf(buf, sizeof buf, "latency over %zu runs: mean %.3f ms  p50 %.3f ms  p95 %.3f ms\n",
                  r.latency->samples_ms.size(), r.latency->mean_ms, r.latency->p50_ms, r.latency->p95_ms);
    os << buf;
  }
  return os.str();
}

#define AXH_INSTANTIATE(T)                                                                             \
  template std::uint64_t count_params<T>(Network<T>&);                                                 \
  template CostReport count_flops<T>(const Network<T>&, const Shape&);                                 \
  template LatencyStats bench_latency<T>(Network<T>&, const Shape&, std::size_t, std::size_t, std::uint64_t);

AXH_INSTANTIATE(float)
AXH_INSTANTIATE(double)
#undef AXH_INSTANTIATE

}  // namespace axh

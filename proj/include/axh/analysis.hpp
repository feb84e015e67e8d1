#pragma once

// Parameter, multiply-add and latency accounting for built networks.
//
// Two compute counts are reported per layer:
//   flops  one multiply-add per weight-shared hypercomplex product: a
//          quaternion conv costs its executed real MACs / 4, a vectormap conv
//          / 3, a PHM dense k*d/n. bn, relu and pool cost one per element.
//   macs   the multiply-adds the real-valued execution performs (dense
//          synthesized kernels, padded taps included). This is what the
//          instrumented direct-loop execution counts.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "axh/blocks.hpp"

namespace axh {

struct CostRow {
  std::string layer;
  LayerKind kind = LayerKind::conv;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
  std::uint64_t macs = 0;
};

struct LatencyStats {
  std::vector<double> samples_ms;
  double mean_ms = 0;
  double p50_ms = 0;
  double p95_ms = 0;
};

struct CostReport {
  std::vector<CostRow> rows;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
  std::uint64_t macs = 0;
  std::optional<LatencyStats> latency;
};

std::uint64_t row_params(const TraceRow& row);
std::uint64_t row_flops(const TraceRow& row);
std::uint64_t row_macs(const TraceRow& row);

/// Rows and totals for one forward pass of a single image.
CostReport cost_report(const std::vector<TraceRow>& trace);

/// Exact learnable-scalar count from the parameter registry.
template <class T>
std::uint64_t count_params(Network<T>& net);

/// Cost report for one image of shape [C,H,W].
template <class T>
CostReport count_flops(const Network<T>& net, const Shape& image);

/// Single-image forward timings in eval mode after `warmup` untimed runs.
/// Throws ContractError when runs < 30 or warmup < 5.
template <class T>
LatencyStats bench_latency(Network<T>& net, const Shape& image, std::size_t runs, std::size_t warmup,
                           std::uint64_t seed = 0);

/// Linear-interpolated order statistic of sorted samples, q in [0,1].
double quantile(const std::vector<double>& sorted, double q);

/// "layer,params,flops" followed by one line per row and a "total" line.
std::string report_csv(const CostReport& r);
std::string report_table(const CostReport& r);

}  // namespace axh

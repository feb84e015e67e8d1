// One PASS/FAIL line per acceptance criterion; details are indented below it.
// Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "axh/analysis.hpp"
#include "axh/checks.hpp"
#include "axh/errors.hpp"
#include "axh/pipeline/schedule.hpp"
#include "axh/pipeline/trainer.hpp"

using namespace axh;
using verify::CheckResult;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Criterion {
  std::string status;  // PASS, FAIL or SKIP
  std::vector<std::string> details;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

void add_check(Criterion& c, const CheckResult& r) {
  c.details.push_back(verify::format(r));
  if (!r.passed) c.status = "FAIL";
}

void add_line(Criterion& c, bool ok, const std::string& text) {
  c.details.push_back(std::string(ok ? "[PASS] " : "[FAIL] ") + text);
  if (!ok) c.status = "FAIL";
}

// 1

Criterion parameter_counts() {
  Criterion c{"PASS", {}};
  const struct {
    const char* arch;
    double millions;
  } targets[] = {{"axial-26", 6.2}, {"axial-35", 9.2}, {"axial-50", 13.6}, {"quaternion-26", 10.2},
                 {"quaternion-50", 21.09}};
  for (const auto& t : targets) {
    const auto t0 = Clock::now();
    ShapeOnlyScope shape_only;
    auto net = build_network<float>(named_arch(t.arch));
    const double got = static_cast<double>(count_params(net)) / 1e6;
    const double secs = seconds_since(t0);
    const double dev = got / t.millions - 1.0;
    add_line(c, std::abs(dev) <= 0.05 && secs < 1.0,
             std::string(t.arch) + fmt(": %.3fM vs %.2fM (%+.1f%%, tol 5%%), built and counted in %.2f s", got,
                                       t.millions, 100 * dev, secs));
  }
  return c;
}

// 2

Criterion flop_counts() {
  Criterion c{"PASS", {}};
  const struct {
    const char* arch;
    double giga;
  } targets[] = {{"axial-26", 1.06}, {"axial-50", 1.75}, {"quaternion-50", 1.93}};
  for (const auto& t : targets) {
    ShapeOnlyScope shape_only;
    auto net = build_network<float>(named_arch(t.arch));
    const auto r = count_flops(net, {3, 32, 32});
    const double got = static_cast<double>(r.flops) / 1e9;
    const double dev = got / t.giga - 1.0;
    add_line(c, std::abs(dev) <= 0.10,
             std::string(t.arch) +
                 fmt(": %.3fG weight-shared MACs vs %.2fG (%+.1f%%, tol 10%%); executed real MACs %.3fG", got,
                     t.giga, 100 * dev, static_cast<double>(r.macs) / 1e9));
  }
  add_check(c, verify::mac_counter_matches_instrumented(21));
  return c;
}

// 3

Criterion algebraic_equivalence() {
  Criterion c{"PASS", {}};
  add_check(c, verify::quaternion_conv_equivalence(100, 31));
  add_check(c, verify::vectormap_conv_equivalence(100, 32));
  add_check(c, verify::phm_n1_is_affine(100, 33));
  add_check(c, verify::phm_hamilton_is_quaternion_dense(100, 34));
  add_check(c, verify::kronecker_vec_identity(100, 35));
  return c;
}

// 4

Criterion gradients() {
  Criterion c{"PASS", {}};
  for (const auto& r : verify::layer_gradient_checks(41, 1e-4)) add_check(c, r);
  add_check(c, verify::end_to_end_gradient(42, 1e-3));
  return c;
}

// 5

Criterion structure() {
  Criterion c{"PASS", {}};
  add_check(c, verify::weight_sharing_cardinality());
  add_check(c, verify::axial_receptive_field());
  add_check(c, verify::spatial_ladder());
  add_check(c, verify::param_ordering());
  return c;
}

// 6

std::vector<EpochMetrics> short_run(const DataSplit& s) {
  TrainConfig cfg;
  cfg.arch = verify::tiny_axial_config(8, 8, 4);
  cfg.epochs = 3;
  cfg.warmup_epochs = 1;
  cfg.batch_size = 16;
  cfg.peak_lr = 0.05;
  cfg.seed = 61;
  Trainer<float> t(cfg, s);
  return t.fit();
}

Criterion schedule_and_pipeline() {
  Criterion c{"PASS", {}};
  const double lr9 = lr_schedule(9, 150, 10, 0.1);
  add_line(c, std::abs(lr9 - 0.1) <= 1e-15, fmt("lr(9) = %.17g (want 0.1)", lr9));
  const double end_warm = lr_schedule(9, 150, 10, 0.1), start_cos = lr_schedule(10, 150, 10, 0.1);
  add_line(c, std::abs(end_warm - start_cos) <= 1e-15 && std::abs(start_cos - 0.1) <= 1e-15,
           fmt("warmup end %.17g == cosine start %.17g == peak", end_warm, start_cos));
  const double last = lr_schedule(149, 150, 10, 0.1);
  add_line(c, std::abs(last) <= 1e-15, fmt("lr(149) = %.3g (want 0)", last));

  Dataset d;
  for (std::size_t i = 0; i < 2; ++i) {
    d.labels.push_back(static_cast<std::int32_t>(3 + 4 * i));
    for (std::size_t p = 0; p < d.image_size(); ++p)
      d.pixels.push_back(static_cast<float>((p * 7 + i * 101) % 256) / 255.0f);
  }
  const auto bytes = encode_records(d, cifar10_format());
  const Dataset back = parse_records(bytes, cifar10_format());
  const bool exact =
      back.labels == d.labels && back.pixels == d.pixels && encode_records(back, cifar10_format()) == bytes;
  add_line(c, exact, "CIFAR-10 loader round-trips 2 synthetic records bit-exactly (" + std::to_string(bytes.size()) +
                         " bytes)");

  DataSplit s;
  s.train = make_synthetic_dataset(96, 8, 8, 62);
  s.test = make_synthetic_dataset(32, 8, 8, 63);
  s.stats = compute_norm_stats(s.train);
  const auto a = short_run(s), b = short_run(s);
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i)
    same = a[i].train_loss == b[i].train_loss && a[i].val_acc == b[i].val_acc;
  add_line(c, same, fmt("two seeded 3-epoch runs give identical loss trajectories (final loss %.6f / %.6f)",
                        a.back().train_loss, b.back().train_loss));
  return c;
}

// 7

const char* cifar_dir() {
  const char* v = std::getenv("AXH_CIFAR10_DIR");
  return v && *v ? v : nullptr;
}

Criterion overfit_64() {
  Criterion c{"PASS", {}};
  const auto t0 = Clock::now();
  DataSplit s;
  TrainConfig cfg;
  std::string source;
  if (const char* dir = cifar_dir()) {
    const DataSplit full = load_cifar(dir, DatasetKind::cifar10);
    s.train = take_first(full.train, 64);
    s.stats = full.stats;
    cfg.arch = verify::tiny_axial_config(32, 10, 1);
    source = "CIFAR-10";
  } else {
    s.train = make_synthetic_dataset(64, 8, 32, 71);
    s.stats = compute_norm_stats(s.train);
    cfg.arch = verify::tiny_axial_config(32, 8, 4);
    source = "synthetic class-template images (CIFAR-10 not available)";
  }
  cfg.epochs = 200;
  cfg.warmup_epochs = 5;
  cfg.batch_size = 16;
  cfg.peak_lr = 0.05;
  cfg.weight_decay = 0;
  cfg.augment = false;
  cfg.seed = 72;
  Trainer<float> t(cfg, s);
  double acc = 0;
  std::size_t epoch = 0;
  for (; epoch < cfg.epochs; ++epoch) {
    t.run_epoch(epoch, false);
    acc = evaluate(t.net(), s.train, s.stats);
    if (acc >= 0.95) break;
  }
  add_line(c, acc >= 0.95,
           "7a overfit, 64 " + source + ", widths [12,24,48,96]: " +
               fmt("train accuracy %.3f after %.0f epochs (%.0f s)", acc, static_cast<double>(epoch + 1),
                   seconds_since(t0)));
  return c;
}

Criterion cifar_subset() {
  Criterion c{"PASS", {}};
  const char* dir = cifar_dir();
  if (!dir) {
    c.status = "SKIP";
    c.details.push_back("[SKIP] 7b needs CIFAR-10 binaries; set AXH_CIFAR10_DIR");
    return c;
  }
  const auto t0 = Clock::now();
  const DataSplit full = load_cifar(dir, DatasetKind::cifar10);
  DataSplit s;
  s.train = take_first(full.train, 2000);
  s.test = take_first(full.test, 2000);
  s.stats = full.stats;
  TrainConfig cfg;
  cfg.arch = named_arch("axial-26");
  cfg.arch.widths = {24, 48, 96, 192};
  cfg.arch.stem_channels = 24;
  cfg.arch.phm_n = 1;
  cfg.epochs = 30;
  cfg.warmup_epochs = 3;
  cfg.batch_size = 128;
  cfg.seed = 73;
  Trainer<float> t(cfg, s);
  EpochMetrics last;
  for (std::size_t e = 0; e < cfg.epochs; ++e) last = t.run_epoch(e, e + 1 == cfg.epochs);
  const double acc = last.val_acc.value_or(0.0);
  add_line(c, acc >= 0.35,
           fmt("7b axial-26 widths [24,48,96,192], 2000 CIFAR-10 images, 30 epochs: val accuracy %.3f on %.0f "
               "test images (want >= 0.35, %.0f s)",
               acc, static_cast<double>(s.test.size()), seconds_since(t0)));
  return c;
}

Criterion desk_learning() {
  Criterion c = overfit_64();
  const Criterion b = cifar_subset();
  c.details.insert(c.details.end(), b.details.begin(), b.details.end());
  if (b.status == "FAIL") c.status = "FAIL";
  else if (b.status == "SKIP" && c.status == "PASS") c.status = "PASS (7b skipped)";
  return c;
}

// 8

Criterion cost_claim() {
  Criterion c{"PASS", {}};
  add_check(c, verify::spatial_flop_ratio());
  add_check(c, verify::axial_block_fewer_params());
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Criterion()>>> criteria{
      {"1 parameter counts", parameter_counts},
      {"2 FLOP counts", flop_counts},
      {"3 algebraic equivalence", algebraic_equivalence},
      {"4 gradient correctness", gradients},
      {"5 structural invariants", structure},
      {"6 schedule and pipeline", schedule_and_pipeline},
      {"7 desk-scale learning", desk_learning},
      {"8 cost claim", cost_claim},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = Clock::now();
    Criterion r;
    try {
      r = run();
    } catch (const std::exception& e) {
      r = {"FAIL", {std::string("[FAIL] exception: ") + e.what()}};
    }
    std::printf("%s criterion %s (%.1f s)\n", r.status.c_str(), name.c_str(), seconds_since(t0));
    for (const auto& d : r.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    if (r.status == "FAIL") ++failed;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

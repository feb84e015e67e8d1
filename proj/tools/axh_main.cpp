#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "axh/analysis.hpp"
#include "axh/checks.hpp"
#include "axh/errors.hpp"
#include "axh/pipeline/checkpoint.hpp"
#include "axh/pipeline/trainer.hpp"

namespace fs = std::filesystem;
using namespace axh;

namespace {

ArchConfig resolve_arch(const std::string& arch, std::size_t classes) {
  if (is_named_arch(arch)) return named_arch(arch, classes);
  ArchConfig cfg = arch_from_text(read_text_file(arch));
  return cfg;
}

Hw parse_hw(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ConfigError("expected HxW, got '" + s + "'");
  try {
    return {std::stoul(s.substr(0, x)), std::stoul(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("expected HxW, got '" + s + "'");
  }
}

int cmd_train(const std::string& config, const std::string& data, const std::string& out) {
  const TrainConfig cfg = load_train_config(config);
  const DataSplit split = load_dataset(cfg, data);
  std::printf("train %zu  test %zu  classes %zu  arch %s\n", split.train.size(), split.test.size(),
              split.train.num_classes, std::string(family_name(cfg.arch.family)).c_str());
  Trainer<float> trainer(cfg, split);
  std::printf("params %zu\n", trainer.net().param_count());
  trainer.fit(out, [](const EpochMetrics& m) {
    std::printf("epoch %3zu  lr %.5f  loss %.4f  train_acc %.4f", m.epoch, m.lr, m.train_loss, m.train_acc);
    if (m.val_acc) std::printf("  val_acc %.4f", *m.val_acc);
    std::printf("\n");
    std::fflush(stdout);
  });
  std::printf("wrote %s\n", (fs::path(out) / "checkpoint.bin").string().c_str());
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  const TrainConfig cfg = train_config_from_text(ck.config_text);
  const DataSplit split = load_dataset(cfg, data);
  auto net = build_network<float>(cfg.arch, cfg.seed);
  restore(net, ck);
  const double acc = evaluate(net, split.test, checkpoint_norm_stats(ck));
  std::printf("epoch %llu  test %zu  accuracy %.4f\n", static_cast<unsigned long long>(ck.epoch),
              split.test.size(), acc);
  return 0;
}

int cmd_count(const std::string& arch, const std::string& input, std::size_t classes, bool csv) {
  ArchConfig cfg = resolve_arch(arch, classes);
  if (!input.empty()) cfg.input_size = parse_hw(input);
  ShapeOnlyScope shape_only;
  auto net = build_network<float>(cfg);
  CostReport r = count_flops(net, {3, cfg.input_size.h, cfg.input_size.w});
  r.params = count_params(net);
  std::cout << (csv ? report_csv(r) : report_table(r));
  return 0;
}

int cmd_bench(const std::string& arch, const std::string& input, std::size_t classes, std::size_t runs,
              std::size_t warmup) {
  ArchConfig cfg = resolve_arch(arch, classes);
  if (!input.empty()) cfg.input_size = parse_hw(input);
  auto net = build_network<float>(cfg);
  const auto s = bench_latency(net, {3, cfg.input_size.h, cfg.input_size.w}, runs, warmup);
  std::printf("runs %zu  mean %.2f ms  p50 %.2f ms  p95 %.2f ms\n", runs, s.mean_ms, s.p50_ms, s.p95_ms);
  return 0;
}

int cmd_verify(std::uint64_t seed) {
  std::size_t failed = 0;
  for (const auto& r : verify::property_suite(seed)) {
    std::cout << verify::format(r) << std::endl;
    if (!r.passed) ++failed;
  }
  std::printf("%zu failed\n", failed);
  return failed == 0 ? 0 : 1;
}

int cmd_synth(const std::string& out, std::size_t train, std::size_t test, std::size_t classes, std::size_t side,
              std::uint64_t seed) {
  fs::create_directories(out);
  RecordFormat fmt = cifar10_format();
  fmt.side = side;
  fmt.num_classes = classes;
  const Dataset all = make_synthetic_dataset(train + test, classes, side, seed);
  std::vector<std::size_t> a(train), b(test);
  for (std::size_t i = 0; i < train; ++i) a[i] = i;
  for (std::size_t i = 0; i < test; ++i) b[i] = train + i;
  write_records(fs::path(out) / "train.bin", subset(all, a), fmt);
  write_records(fs::path(out) / "test.bin", subset(all, b), fmt);
  std::printf("wrote %zu + %zu records (%zux%zu, %zu classes) to %s\n", train, test, side, side, classes,
              out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Axial hypercomplex networks: training, evaluation, cost analysis and verification"};
  app.require_subcommand(1);

  std::string config, data, out, checkpoint, arch, input;
  std::size_t classes = 10, runs = 30, warmup = 5, n_train = 1000, n_test = 200, side = 32;
  std::uint64_t seed = 7;
  bool csv = false;

  auto* train = app.add_subcommand("train", "train a network from a key=value config");
  train->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
  train->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", out, "output directory for metrics.csv and checkpoint.bin")->required();

  auto* eval = app.add_subcommand("eval", "top-1 accuracy of a checkpoint on the test split");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);

  auto* count = app.add_subcommand("count", "parameter and FLOP report");
  count->add_option("--arch", arch, "named arch (axial-26, ...) or arch config file")->required();
  count->add_option("--input", input, "input size HxW");
  count->add_option("--classes", classes, "classes for named archs");
  count->add_flag("--csv", csv, "CSV instead of a table");

  auto* bench = app.add_subcommand("bench", "single-image forward latency");
  bench->add_option("--arch", arch, "named arch or arch config file")->required();
  bench->add_option("--runs", runs, "timed runs (>= 30)");
  bench->add_option("--warmup", warmup, "untimed runs (>= 5)");
  bench->add_option("--input", input, "input size HxW");
  bench->add_option("--classes", classes, "classes for named archs");

  auto* ver = app.add_subcommand("verify", "oracle and equivalence suite");
  ver->add_option("--seed", seed, "seed");

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset in the generic-dir layout");
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--train", n_train, "training records");
  synth->add_option("--test", n_test, "test records");
  synth->add_option("--classes", classes, "classes");
  synth->add_option("--side", side, "image side");
  synth->add_option("--seed", seed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config, data, out);
    if (*eval) return cmd_eval(checkpoint, data);
    if (*count) return cmd_count(arch, input, classes, csv);
    if (*bench) return cmd_bench(arch, input, classes, runs, warmup);
    if (*ver) return cmd_verify(seed);
    if (*synth) return cmd_synth(out, n_train, n_test, classes, side, seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>

#include <unistd.h>

#include "axh/checks.hpp"
#include "axh/errors.hpp"
#include "axh/pipeline/checkpoint.hpp"
#include "axh/pipeline/schedule.hpp"
#include "axh/pipeline/trainer.hpp"
#include "doctest.h"

using namespace axh;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("axh_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Dataset known_records(std::size_t n, std::size_t side, std::size_t classes) {
  Dataset d;
  d.height = d.width = side;
  d.num_classes = classes;
  for (std::size_t i = 0; i < n; ++i) {
    d.labels.push_back(static_cast<std::int32_t>((i * 7) % classes));
    for (std::size_t p = 0; p < d.image_size(); ++p)
      d.pixels.push_back(static_cast<float>((i * 31 + p * 13) % 256) / 255.0f);
  }
  return d;
}

TrainConfig tiny_train_config(std::size_t classes, std::size_t side, std::size_t phm_n) {
  TrainConfig c;
  c.arch = verify::tiny_axial_config(side, classes, phm_n);
  c.epochs = 3;
  c.warmup_epochs = 1;
  c.batch_size = 16;
  c.peak_lr = 0.05;
  c.seed = 11;
  c.dataset = DatasetKind::generic_dir;
  c.image_side = side;
  return c;
}

DataSplit synthetic_split(std::size_t n_train, std::size_t n_test, std::size_t classes, std::size_t side,
                          std::uint64_t seed) {
  DataSplit s;
  const Dataset all = make_synthetic_dataset(n_train + n_test, classes, side, seed);
  s.train = take_first(all, n_train);
  std::vector<std::size_t> rest(n_test);
  for (std::size_t i = 0; i < n_test; ++i) rest[i] = n_train + i;
  s.test = subset(all, rest);
  s.stats = compute_norm_stats(s.train);
  return s;
}

std::vector<std::vector<float>> param_values(Network<float>& net) {
  std::vector<std::vector<float>> v;
  for (const auto& p : net.registry().params) v.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return v;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  const auto lr = [](std::size_t e) { return lr_schedule(e, 150, 10, 0.1); };
  CHECK(lr(0) == doctest::Approx(0.01));
  CHECK(lr(9) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(lr(10) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(std::abs(lr(149)) <= 1e-15);
  const double want80 = 0.1 * 0.5 * (1.0 + std::cos(std::numbers::pi * 70.0 / 139.0));
  CHECK(lr(80) == doctest::Approx(want80).epsilon(1e-14));
  CHECK(lr(80) == doctest::Approx(0.049435).epsilon(1e-4));
  for (std::size_t e = 10; e + 1 < 150; ++e) CHECK(lr(e + 1) <= lr(e));
  for (std::size_t e = 0; e + 1 < 10; ++e) CHECK(lr(e + 1) > lr(e));
  CHECK_THROWS_AS(lr(150), ContractError);
  CHECK(lr_schedule(1, 2, 1, 0.3) == 0.3);

  TrainConfig c;
  CHECK(lr_schedule(9, c) == lr(9));
}

TEST_CASE("CIFAR record round trip") {
  const Dataset d = known_records(2, 32, 10);
  const auto bytes = encode_records(d, cifar10_format());
  CHECK(bytes.size() == 2 * 3073);
  const Dataset back = parse_records(bytes, cifar10_format());
  CHECK(back.labels == d.labels);
  CHECK(back.pixels == d.pixels);
  CHECK(encode_records(back, cifar10_format()) == bytes);

  const Dataset c100 = known_records(3, 32, 100);
  const auto b100 = encode_records(c100, cifar100_format());
  CHECK(b100.size() == 3 * 3074);
  const Dataset back100 = parse_records(b100, cifar100_format());
  CHECK(back100.labels == c100.labels);
  CHECK(back100.pixels == c100.pixels);
}

TEST_CASE("truncated and out-of-range records") {
  auto bytes = encode_records(known_records(2, 32, 10), cifar10_format());
  bytes.push_back(0);
  REQUIRE(bytes.size() == 3073 * 2 + 1);
  try {
    parse_records(bytes, cifar10_format());
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("offset 6146") != std::string::npos);
  }
  auto bad = encode_records(known_records(2, 32, 10), cifar10_format());
  bad[3073] = 10;
  try {
    parse_records(bad, cifar10_format());
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("offset 3073") != std::string::npos);
  }
}

TEST_CASE("CIFAR-10 directory layout") {
  const auto dir = fresh_dir("cifar10");
  const auto sub = dir / "cifar-10-batches-bin";
  fs::create_directories(sub);
  for (int i = 1; i <= 5; ++i)
    write_records(sub / ("data_batch_" + std::to_string(i) + ".bin"), known_records(4, 32, 10), cifar10_format());
  write_records(sub / "test_batch.bin", known_records(3, 32, 10), cifar10_format());
  const auto s = load_cifar(dir, DatasetKind::cifar10);
  CHECK(s.train.size() == 20);
  CHECK(s.test.size() == 3);
  CHECK(fs::exists(sub / "axh_norm_stats.txt"));
  const auto again = load_cifar(dir, DatasetKind::cifar10);
  CHECK(again.stats.mean == s.stats.mean);
  CHECK_THROWS_AS(load_cifar(fresh_dir("empty"), DatasetKind::cifar10), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("generic directory loader with limits") {
  const auto dir = fresh_dir("generic");
  RecordFormat f = cifar10_format();
  f.side = 16;
  f.num_classes = 8;
  write_records(dir / "train.bin", known_records(10, 16, 8), f);
  write_records(dir / "test.bin", known_records(6, 16, 8), f);
  TrainConfig c = tiny_train_config(8, 16, 4);
  c.train_limit = 7;
  c.val_limit = 2;
  const auto s = load_dataset(c, dir);
  CHECK(s.train.size() == 7);
  CHECK(s.test.size() == 2);
  CHECK(s.train.height == 16);
  fs::remove_all(dir);
}

TEST_CASE("augmentation") {
  const Dataset d = known_records(5, 32, 10);
  std::vector<float> out(d.image_size());
  augment_image(d.image(0), out.data(), 3, 32, 32, false, 4, 4);
  CHECK(std::equal(out.begin(), out.end(), d.image(0)));

  // flip then crop at the corner: out[c][y][x] = padded[y][x], padded offset 4
  augment_image(d.image(1), out.data(), 3, 32, 32, true, 0, 8);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 32; ++y)
      for (std::size_t x = 0; x < 32; ++x) {
        const float v = out[(c * 32 + y) * 32 + x];
        if (y < 4 || x + 8 >= 36) CHECK(v == 0.0f);
        else CHECK(v == d.image(1)[(c * 32 + (y - 4)) * 32 + (31 - (x + 4))]);
      }

  std::mt19937_64 a(3), b(3);
  const auto x = augment(d, a), y = augment(d, b);
  CHECK(x.pixels == y.pixels);
  CHECK(x.labels == d.labels);
  CHECK(x.height == 32);
  CHECK(x.width == 32);
  CHECK(x.pixels.size() == d.pixels.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::multiset<float> src(d.image(i), d.image(i) + d.image_size());
    src.insert(0.0f);
    for (std::size_t p = 0; p < d.image_size(); ++p) CHECK(src.count(x.image(i)[p]) > 0);
  }
}

TEST_CASE("normalized batches") {
  const Dataset d = known_records(4, 8, 10);
  const NormStats s = compute_norm_stats(d);
  const auto b = to_batch<double>(d, s);
  CHECK(b.images.shape() == Shape{4, 3, 8, 8});
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t p = 0; p < 64; ++p) {
        const double v = b.images.data()[(i * 3 + c) * 64 + p];
        sum += v;
        sq += v * v;
      }
    CHECK(std::abs(sum / 256) <= 1e-5);
    CHECK(sq / 256 == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("train config text") {
  const auto c = train_config_from_text("arch=qphm-26\nepochs=20\nlr=0.05\nbatch_size=64\naugment=false\n");
  CHECK(c.arch.family == Family::qphm);
  CHECK(c.epochs == 20);
  CHECK(c.peak_lr == 0.05);
  CHECK_FALSE(c.augment);
  const auto back = train_config_from_text(train_config_to_text(c));
  CHECK(back.arch == c.arch);
  CHECK(back.epochs == c.epochs);
  CHECK(back.peak_lr == c.peak_lr);
  try {
    train_config_from_text("epochs=10\nbogus=1\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  TrainConfig bad;
  bad.warmup_epochs = bad.epochs;
  CHECK_THROWS_AS(validate_train_config(bad), ConfigError);
  bad = TrainConfig{};
  bad.batch_size = 0;
  CHECK_THROWS_AS(validate_train_config(bad), ConfigError);
}

TEST_CASE("checkpoint container") {
  auto net = build_network<float>(verify::tiny_axial_config(8, 8, 4), 5);
  NormStats st;
  st.mean = {0.1f, 0.2f, 0.3f};
  Checkpoint c = snapshot(net, st);
  c.epoch = 4;
  c.config_text = "epochs=5\n";
  c.rng_state = "123";
  const auto bytes = encode_checkpoint(c);
  const auto d = decode_checkpoint(bytes);
  CHECK(d.epoch == 4);
  CHECK(d.config_text == c.config_text);
  REQUIRE(d.entries.size() == c.entries.size());
  for (std::size_t i = 0; i < d.entries.size(); ++i) {
    CHECK(d.entries[i].name == c.entries[i].name);
    CHECK(d.entries[i].shape == c.entries[i].shape);
    CHECK(d.entries[i].payload == c.entries[i].payload);
  }
  CHECK(checkpoint_norm_stats(d).mean == st.mean);
  CHECK(d.find("stem.conv.r") != nullptr);
  CHECK(d.find("group1.block0.bn1.running_var") != nullptr);

  auto other = build_network<float>(verify::tiny_axial_config(8, 8, 4), 99);
  restore(other, d);
  const auto pa = param_values(net), pb = param_values(other);
  CHECK(pa == pb);

  std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(bytes.size() / 2));
  CHECK_THROWS_AS(decode_checkpoint(cut), FormatError);
  auto wrong = bytes;
  wrong[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(wrong), FormatError);

  ArchConfig wider = verify::tiny_axial_config(8, 8, 4);
  wider.widths = {24, 48, 96, 192};
  auto mismatch = build_network<float>(wider, 1);
  CHECK_THROWS_AS(restore(mismatch, d), ConfigError);

  const auto dir = fresh_dir("ckpt");
  save_checkpoint(dir / "c.bin", c);
  CHECK(encode_checkpoint(load_checkpoint(dir / "c.bin")) == bytes);
  fs::remove_all(dir);
}

TEST_CASE("training with lr 0 leaves parameters bit-identical") {
  const DataSplit s = synthetic_split(48, 0, 8, 8, 1);
  TrainConfig c = tiny_train_config(8, 8, 4);
  c.peak_lr = 0.0;
  Trainer<float> t(c, s);
  const auto before = param_values(t.net());
  t.run_epoch(0, false);
  CHECK(param_values(t.net()) == before);
}

TEST_CASE("fixed-seed training is bit-reproducible and learns") {
  const DataSplit s = synthetic_split(200, 40, 8, 8, 2);
  TrainConfig c = tiny_train_config(8, 8, 4);
  c.epochs = 8;
  c.warmup_epochs = 1;
  c.batch_size = 32;
  Trainer<float> a(c, s), b(c, s);
  const auto ha = a.fit(), hb = b.fit();
  REQUIRE(ha.size() == 8);
  for (std::size_t e = 0; e < ha.size(); ++e) {
    CHECK(ha[e].train_loss == hb[e].train_loss);
    CHECK(ha[e].val_acc == hb[e].val_acc);
  }
  CHECK(param_values(a.net()) == param_values(b.net()));
  CHECK(ha.back().train_loss < ha.front().train_loss);
}

TEST_CASE("fit writes metrics and a checkpoint that evaluates identically") {
  const DataSplit s = synthetic_split(64, 32, 8, 8, 3);
  TrainConfig c = tiny_train_config(8, 8, 4);
  c.epochs = 2;
  const auto dir = fresh_dir("fit");
  Trainer<float> t(c, s);
  const auto h = t.fit(dir);
  REQUIRE(fs::exists(dir / "metrics.csv"));
  const std::string csv = read_text_file(dir / "metrics.csv");
  CHECK(csv.rfind("epoch,lr,train_loss,val_acc\n", 0) == 0);
  const Checkpoint ck = load_checkpoint(dir / "checkpoint.bin");
  CHECK(ck.epoch == 1);
  const TrainConfig back = train_config_from_text(ck.config_text);
  CHECK(back.arch == c.arch);
  auto net = build_network<float>(back.arch, 12345);
  restore(net, ck);
  CHECK(evaluate(net, s.test, checkpoint_norm_stats(ck)) == *h.back().val_acc);
  CHECK(evaluate(net, s.test, checkpoint_norm_stats(ck)) == evaluate(t.net(), s.test, s.stats));
  fs::remove_all(dir);
}

TEST_CASE("class-count mismatch and non-finite loss") {
  const DataSplit s = synthetic_split(32, 8, 8, 8, 4);
  TrainConfig c = tiny_train_config(8, 8, 4);
  c.arch.num_classes = 4;
  CHECK_THROWS_AS(Trainer<float>(c, s), ConfigError);

  auto net = build_network<float>(verify::tiny_axial_config(8, 4, 4), 1);
  CHECK_THROWS_AS(evaluate(net, s.test, s.stats), ConfigError);

  c = tiny_train_config(8, 8, 4);
  Trainer<float> t(c, s);
  for (const auto& p : t.net().registry().params)
    if (p.name == "group2.block0.conv2.a") {
      auto handle = p.tensor;
      handle.mutable_data()[0] = std::nanf("");
    }
  try {
    t.run_epoch(0, false);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("group2.block0.conv2") != std::string::npos);
  }
}

TEST_CASE("untrained network is at chance level") {
  const Dataset d = make_synthetic_dataset(1000, 10, 8, 5);
  auto net = build_network<float>(verify::tiny_axial_config(8, 10, 1), 6);
  const double acc = evaluate(net, d, compute_norm_stats(d));
  CHECK(std::abs(acc - 0.10) <= 0.03 + 1e-12);
}

#pragma once

// CIFAR-format binary datasets, normalization and augmentation.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "axh/pipeline/config.hpp"
#include "axh/tensor.hpp"

namespace axh {

/// Images as [N,C,H,W] floats in [0,1] (plane-major RGB) plus labels.
struct Dataset {
  std::size_t channels = 3;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t num_classes = 10;
  std::vector<float> pixels;
  std::vector<std::int32_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t image_size() const { return channels * height * width; }
  const float* image(std::size_t i) const { return pixels.data() + i * image_size(); }
};

/// Layout of one binary record: `label_bytes` leading label bytes (the one at
/// `label_index` is used), then channels*side*side pixel bytes.
struct RecordFormat {
  std::size_t label_bytes = 1;
  std::size_t label_index = 0;
  std::size_t side = 32;
  std::size_t channels = 3;
  std::size_t num_classes = 10;

  std::size_t record_bytes() const { return label_bytes + channels * side * side; }
};

RecordFormat cifar10_format();
/// Coarse label, fine label, pixels; the fine label is used.
RecordFormat cifar100_format();

/// Throws FormatError naming the byte offset of a truncated record or an out
/// of range label.
Dataset read_records(const std::filesystem::path& file, const RecordFormat& fmt);
Dataset parse_records(std::span<const std::uint8_t> bytes, const RecordFormat& fmt);
/// Inverse of parse_records (pixels are rounded to bytes; other label bytes are 0).
std::vector<std::uint8_t> encode_records(const Dataset& d, const RecordFormat& fmt);
void write_records(const std::filesystem::path& file, const Dataset& d, const RecordFormat& fmt);

struct NormStats {
  std::array<float, 3> mean{0, 0, 0};
  std::array<float, 3> std{1, 1, 1};
};

NormStats compute_norm_stats(const Dataset& train);

struct DataSplit {
  Dataset train;
  Dataset test;
  NormStats stats;
};

/// CIFAR-10: data_batch_1..5.bin and test_batch.bin. CIFAR-100: train.bin and
/// test.bin. Either directly in `dir` or in the archive's usual subdirectory.
DataSplit load_cifar(const std::filesystem::path& dir, DatasetKind variant);

/// train.bin and test.bin in the CIFAR-10 record layout with the given side
/// and class count.
DataSplit load_generic_dir(const std::filesystem::path& dir, std::size_t side, std::size_t num_classes);

/// Loader chosen by cfg.dataset, with train/val limits applied (first records).
DataSplit load_dataset(const TrainConfig& cfg, const std::filesystem::path& dir);

/// Statistics of the training split, cached as text beside the data
/// (axh_norm_stats.txt) and reused when present.
NormStats cached_norm_stats(const std::filesystem::path& dir, const Dataset& train);

Dataset subset(const Dataset& d, std::span<const std::size_t> indices);
Dataset take_first(const Dataset& d, std::size_t n);

/// One image [C,H,W]: optional horizontal flip, zero padding by `pad` on every
/// side, then the HxW window whose top-left corner in the padded image is (dy, dx).
void augment_image(const float* src, float* dst, std::size_t c, std::size_t h, std::size_t w, bool flip,
                   std::size_t dy, std::size_t dx, std::size_t pad = 4);

/// Every image independently: flip with probability 0.5, pad 4, uniform random crop.
Dataset augment(const Dataset& batch, std::mt19937_64& rng);

template <class T>
struct Batch {
  Tensor<T> images;
  std::vector<std::int32_t> labels;
};

/// (x - mean[c]) / std[c] per channel.
template <class T>
Batch<T> to_batch(const Dataset& d, const NormStats& stats);

/// Images made of one random low-frequency template per class plus noise;
/// for learning checks without external data.
Dataset make_synthetic_dataset(std::size_t n, std::size_t num_classes, std::size_t side, std::uint64_t seed,
                               float noise = 0.15f);

}  // namespace axh

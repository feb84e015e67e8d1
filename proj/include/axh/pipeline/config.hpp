#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "axh/blocks.hpp"

namespace axh {

enum class DatasetKind { cifar10, cifar100, generic_dir };

std::string_view dataset_name(DatasetKind d);
DatasetKind parse_dataset(std::string_view name);

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 128;
  double peak_lr = 0.1;
  std::size_t warmup_epochs = 10;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  ArchConfig arch;
  DatasetKind dataset = DatasetKind::cifar10;
  bool augment = true;
  std::size_t train_limit = 0;  // 0 keeps every training record
  std::size_t val_limit = 0;
  std::size_t image_side = 32;  // generic_dir only
};

/// Throws ConfigError unless warmup_epochs < epochs, batch_size >= 1 and the
/// arch validates.
void validate_train_config(const TrainConfig& cfg);

/// key=value lines for every TrainConfig and ArchConfig field. Unknown keys
/// and malformed values raise ConfigError naming the line. The key `arch`
/// accepts a named architecture ("axial-26") and may be refined by later keys.
TrainConfig train_config_from_text(std::string_view text);
std::string train_config_to_text(const TrainConfig& cfg);
TrainConfig load_train_config(const std::filesystem::path& file);

/// Whole-file read; throws FormatError when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& file);

}  // namespace axh

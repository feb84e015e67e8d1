#include "axh/pipeline/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "axh/errors.hpp"

namespace axh {

std::string_view dataset_name(DatasetKind d) {
  switch (d) {
    case DatasetKind::cifar10: return "cifar10";
    case DatasetKind::cifar100: return "cifar100";
    case DatasetKind::generic_dir: return "generic-dir";
  }
  return "?";
}

DatasetKind parse_dataset(std::string_view name) {
  for (auto d : {DatasetKind::cifar10, DatasetKind::cifar100, DatasetKind::generic_dir})
    if (dataset_name(d) == name) return d;
  throw ConfigError("unknown dataset '" + std::string(name) + "' (expected cifar10, cifar100 or generic-dir)");
}

void validate_train_config(const TrainConfig& c) {
  if (c.epochs == 0) throw ConfigError("epochs must be positive");
  if (c.warmup_epochs >= c.epochs)
    throw ConfigError("warmup_epochs (" + std::to_string(c.warmup_epochs) + ") must be below epochs (" +
                      std::to_string(c.epochs) + ")");
  if (c.batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (c.peak_lr < 0) throw ConfigError("peak_lr must be non-negative");
  if (c.momentum < 0 || c.momentum >= 1) throw ConfigError("momentum must lie in [0, 1)");
  if (c.weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
  const auto v = validate_config(c.arch);
  if (!v.empty()) throw ConfigError("arch: " + v.front().message());
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class N>
N parse_number(std::string_view key, std::string_view v) {
  N out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(std::string(key) + ": cannot parse '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError(std::string(key) + ": expected a boolean, got '" + std::string(v) + "'");
}

bool apply_train_key(TrainConfig& c, std::string_view key, std::string_view v) {
  if (key == "epochs") c.epochs = parse_number<std::size_t>(key, v);
  else if (key == "batch_size") c.batch_size = parse_number<std::size_t>(key, v);
  else if (key == "peak_lr" || key == "lr") c.peak_lr = parse_number<double>(key, v);
  else if (key == "warmup_epochs") c.warmup_epochs = parse_number<std::size_t>(key, v);
  else if (key == "momentum") c.momentum = parse_number<double>(key, v);
  else if (key == "weight_decay") c.weight_decay = parse_number<double>(key, v);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "dataset") c.dataset = parse_dataset(v);
  else if (key == "augment") c.augment = parse_bool(key, v);
  else if (key == "train_limit") c.train_limit = parse_number<std::size_t>(key, v);
  else if (key == "val_limit") c.val_limit = parse_number<std::size_t>(key, v);
  else if (key == "image_side") c.image_side = parse_number<std::size_t>(key, v);
  else return false;
  return true;
}

}  // namespace

TrainConfig train_config_from_text(std::string_view text) {
  TrainConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (!apply_train_key(cfg, key, value) && !apply_arch_key(cfg.arch, key, value))
        throw ConfigError("unknown key '" + std::string(key) + "'");
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

std::string train_config_to_text(const TrainConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "epochs=" << c.epochs << '\n'
     << "batch_size=" << c.batch_size << '\n'
     << "peak_lr=" << c.peak_lr << '\n'
     << "warmup_epochs=" << c.warmup_epochs << '\n'
     << "momentum=" << c.momentum << '\n'
     << "weight_decay=" << c.weight_decay << '\n'
     << "seed=" << c.seed << '\n'
     << "dataset=" << dataset_name(c.dataset) << '\n'
     << "augment=" << (c.augment ? "true" : "false") << '\n'
     << "train_limit=" << c.train_limit << '\n'
     << "val_limit=" << c.val_limit << '\n'
     << "image_side=" << c.image_side << '\n'
     << arch_to_text(c.arch);
  return os.str();
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrainConfig load_train_config(const std::filesystem::path& file) {
  try {
    return train_config_from_text(read_text_file(file));
  } catch (const ConfigError& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

}  // namespace axh

#include "axh/pipeline/data.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "axh/errors.hpp"

namespace axh {

namespace fs = std::filesystem;

RecordFormat cifar10_format() { return {}; }

RecordFormat cifar100_format() {
  RecordFormat f;
  f.label_bytes = 2;
  f.label_index = 1;
  f.num_classes = 100;
  return f;
}

Dataset parse_records(std::span<const std::uint8_t> bytes, const RecordFormat& fmt) {
  const std::size_t rec = fmt.record_bytes();
  if (bytes.size() % rec != 0) {
    const std::size_t offset = bytes.size() / rec * rec;
    throw FormatError("truncated record at byte offset " + std::to_string(offset) + ": " +
                      std::to_string(bytes.size() - offset) + " trailing bytes, records are " + std::to_string(rec) +
                      " bytes");
  }
  Dataset d;
  d.channels = fmt.channels;
  d.height = d.width = fmt.side;
  d.num_classes = fmt.num_classes;
  const std::size_t n = bytes.size() / rec;
  const std::size_t px = d.image_size();
  d.labels.resize(n);
  d.pixels.resize(n * px);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* r = bytes.data() + i * rec;
    const std::size_t label = r[fmt.label_index];
    if (label >= fmt.num_classes)
      throw FormatError("label " + std::to_string(label) + " out of range at byte offset " +
                        std::to_string(i * rec + fmt.label_index) + " (" + std::to_string(fmt.num_classes) +
                        " classes)");
    d.labels[i] = static_cast<std::int32_t>(label);
    float* out = d.pixels.data() + i * px;
    for (std::size_t p = 0; p < px; ++p) out[p] = static_cast<float>(r[fmt.label_bytes + p]) / 255.0f;
  }
  return d;
}

Dataset read_records(const fs::path& file, const RecordFormat& fmt) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open " + file.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_records(bytes, fmt);
  } catch (const FormatError& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_records(const Dataset& d, const RecordFormat& fmt) {
  if (d.channels != fmt.channels || d.height != fmt.side || d.width != fmt.side)
    throw DimensionError("dataset image shape does not match the record format");
  const std::size_t rec = fmt.record_bytes();
  const std::size_t px = d.image_size();
  std::vector<std::uint8_t> out(d.size() * rec, 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::uint8_t* r = out.data() + i * rec;
    r[fmt.label_index] = static_cast<std::uint8_t>(d.labels[i]);
    for (std::size_t p = 0; p < px; ++p) {
      const float v = std::clamp(d.pixels[i * px + p], 0.0f, 1.0f);
      r[fmt.label_bytes + p] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  }
  return out;
}

void write_records(const fs::path& file, const Dataset& d, const RecordFormat& fmt) {
  const auto bytes = encode_records(d, fmt);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw FormatError("cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

NormStats compute_norm_stats(const Dataset& train) {
  NormStats s;
  if (train.channels != 3) throw DimensionError("normalization expects 3-channel images");
  const std::size_t plane = train.height * train.width;
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const float* p = train.image(i) + c * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        sum += p[k];
        sq += static_cast<double>(p[k]) * p[k];
      }
    }
    const double n = static_cast<double>(train.size() * plane);
    const double mean = n > 0 ? sum / n : 0.0;
    const double var = n > 0 ? std::max(sq / n - mean * mean, 0.0) : 1.0;
    s.mean[c] = static_cast<float>(mean);
    s.std[c] = static_cast<float>(var > 1e-12 ? std::sqrt(var) : 1.0);
  }
  return s;
}

NormStats cached_norm_stats(const fs::path& dir, const Dataset& train) {
  const fs::path file = dir / "axh_norm_stats.txt";
  {
    std::ifstream in(file);
    NormStats s;
    if (in && in >> s.mean[0] >> s.mean[1] >> s.mean[2] >> s.std[0] >> s.std[1] >> s.std[2]) return s;
  }
  const NormStats s = compute_norm_stats(train);
  std::ofstream out(file);
  if (out) {
    out.precision(9);
    out << s.mean[0] << ' ' << s.mean[1] << ' ' << s.mean[2] << '\n'
        << s.std[0] << ' ' << s.std[1] << ' ' << s.std[2] << '\n';
  }
  return s;
}

namespace {

void append(Dataset& into, const Dataset& more) {
  if (into.labels.empty()) {
    into = more;
    return;
  }
  into.pixels.insert(into.pixels.end(), more.pixels.begin(), more.pixels.end());
  into.labels.insert(into.labels.end(), more.labels.begin(), more.labels.end());
}

fs::path locate(const fs::path& dir, const std::string& first_file, const char* subdir) {
  if (fs::exists(dir / first_file)) return dir;
  if (fs::exists(dir / subdir / first_file)) return dir / subdir;
  throw FormatError("no " + first_file + " under " + dir.string());
}

}  // namespace

DataSplit load_cifar(const fs::path& dir, DatasetKind variant) {
  DataSplit s;
  if (variant == DatasetKind::cifar10) {
    const fs::path root = locate(dir, "data_batch_1.bin", "cifar-10-batches-bin");
    for (int i = 1; i <= 5; ++i)
      append(s.train, read_records(root / ("data_batch_" + std::to_string(i) + ".bin"), cifar10_format()));
    s.test = read_records(root / "test_batch.bin", cifar10_format());
    s.stats = cached_norm_stats(root, s.train);
  } else if (variant == DatasetKind::cifar100) {
    const fs::path root = locate(dir, "train.bin", "cifar-100-binary");
    s.train = read_records(root / "train.bin", cifar100_format());
    s.test = read_records(root / "test.bin", cifar100_format());
    s.stats = cached_norm_stats(root, s.train);
  } else {
    throw ConfigError("load_cifar needs cifar10 or cifar100");
  }
  return s;
}

DataSplit load_generic_dir(const fs::path& dir, std::size_t side, std::size_t num_classes) {
  RecordFormat f;
  f.side = side;
  f.num_classes = num_classes;
  DataSplit s;
  s.train = read_records(dir / "train.bin", f);
  s.test = read_records(dir / "test.bin", f);
  s.stats = cached_norm_stats(dir, s.train);
  return s;
}

DataSplit load_dataset(const TrainConfig& cfg, const fs::path& dir) {
  DataSplit s = cfg.dataset == DatasetKind::generic_dir
                    ? load_generic_dir(dir, cfg.image_side, cfg.arch.num_classes)
                    : load_cifar(dir, cfg.dataset);
  if (cfg.train_limit) s.train = take_first(s.train, cfg.train_limit);
  if (cfg.val_limit) s.test = take_first(s.test, cfg.val_limit);
  return s;
}

Dataset subset(const Dataset& d, std::span<const std::size_t> indices) {
  Dataset out;
  out.channels = d.channels;
  out.height = d.height;
  out.width = d.width;
  out.num_classes = d.num_classes;
  const std::size_t px = d.image_size();
  out.pixels.resize(indices.size() * px);
  out.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= d.size()) throw DimensionError("subset index " + std::to_string(src) + " out of range");
    std::copy_n(d.image(src), px, out.pixels.data() + i * px);
    out.labels[i] = d.labels[src];
  }
  return out;
}

Dataset take_first(const Dataset& d, std::size_t n) {
  std::vector<std::size_t> idx(std::min(n, d.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return subset(d, idx);
}

void augment_image(const float* src, float* dst, std::size_t c, std::size_t h, std::size_t w, bool flip,
                   std::size_t dy, std::size_t dx, std::size_t pad) {
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y) {
      const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(pad);
      for (std::size_t x = 0; x < w; ++x) {
        const std::ptrdiff_t px = static_cast<std::ptrdiff_t>(x + dx) - static_cast<std::ptrdiff_t>(pad);
        float v = 0;
        if (sy >= 0 && sy < static_cast<std::ptrdiff_t>(h) && px >= 0 && px < static_cast<std::ptrdiff_t>(w)) {
          const std::size_t sx = flip ? w - 1 - static_cast<std::size_t>(px) : static_cast<std::size_t>(px);
          v = src[(ch * h + static_cast<std::size_t>(sy)) * w + sx];
        }
        dst[(ch * h + y) * w + x] = v;
      }
    }
}

Dataset augment(const Dataset& batch, std::mt19937_64& rng) {
  constexpr std::size_t pad = 4;
  Dataset out = batch;
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<std::size_t> offset(0, 2 * pad);
  const std::size_t px = batch.image_size();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const bool flip = coin(rng);
    const std::size_t dy = offset(rng);
    const std::size_t dx = offset(rng);
    augment_image(batch.image(i), out.pixels.data() + i * px, batch.channels, batch.height, batch.width, flip, dy,
                  dx, pad);
  }
  return out;
}

template <class T>
Batch<T> to_batch(const Dataset& d, const NormStats& stats) {
  const std::size_t plane = d.height * d.width;
  std::vector<T> v(d.pixels.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t c = 0; c < d.channels; ++c) {
      const float m = c < 3 ? stats.mean[c] : 0.0f;
      const float s = c < 3 ? stats.std[c] : 1.0f;
      const std::size_t base = (i * d.channels + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) v[base + k] = static_cast<T>((d.pixels[base + k] - m) / s);
    }
  return {Tensor<T>::from({d.size(), d.channels, d.height, d.width}, std::move(v)), d.labels};
}

Dataset make_synthetic_dataset(std::size_t n, std::size_t num_classes, std::size_t side, std::uint64_t seed,
                               float noise) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::normal_distribution<float> g(0.0f, noise);
  Dataset d;
  d.height = d.width = side;
  d.num_classes = num_classes;
  const std::size_t px = d.image_size();
  // each class: per channel a sum of two random plane waves
  std::vector<float> templates(num_classes * px);
  for (std::size_t k = 0; k < num_classes; ++k)
    for (std::size_t c = 0; c < 3; ++c) {
      float fy[2], fx[2], ph[2];
      for (int t = 0; t < 2; ++t) {
        fy[t] = 6.2831853f * (0.5f + 2.5f * u(rng)) / static_cast<float>(side);
        fx[t] = 6.2831853f * (0.5f + 2.5f * u(rng)) / static_cast<float>(side);
        ph[t] = 6.2831853f * u(rng);
      }
      for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < side; ++x) {
          float v = 0.5f;
          for (int t = 0; t < 2; ++t)
            v += 0.2f * std::sin(fy[t] * static_cast<float>(y) + fx[t] * static_cast<float>(x) + ph[t]);
          templates[k * px + (c * side + y) * side + x] = v;
        }
    }
  d.labels.resize(n);
  d.pixels.resize(n * px);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % num_classes;
    d.labels[i] = static_cast<std::int32_t>(k);
    for (std::size_t p = 0; p < px; ++p) d.pixels[i * px + p] = std::clamp(templates[k * px + p] + g(rng), 0.0f, 1.0f);
  }
  return d;
}

template Batch<float> to_batch<float>(const Dataset&, const NormStats&);
template Batch<double> to_batch<double>(const Dataset&, const NormStats&);

}  // namespace axh

#include "axh/pipeline/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "axh/errors.hpp"

namespace axh {

namespace {

constexpr char kMagic[8] = {'A', 'X', 'H', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void str(const std::string& s) {
    u64(s.size());
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() { return need(1)[0]; }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::string str() {
    const std::uint64_t n = u64();
    const auto* p = need(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  std::vector<std::uint8_t> bytes(std::uint64_t n) {
    const auto* p = need(n);
    return {p, p + n};
  }
  std::size_t offset() const { return pos_; }

 private:
  const std::uint8_t* need(std::uint64_t n) {
    if (n > b_.size() - pos_)
      throw FormatError("checkpoint truncated at byte offset " + std::to_string(pos_) + " (needed " +
                        std::to_string(n) + " more bytes)");
    const auto* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t get(int n) {
    const auto* p = need(static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

template <class T>
constexpr DType dtype_of() {
  return sizeof(T) == 4 ? DType::f32 : DType::f64;
}

std::size_t dtype_size(DType d) { return d == DType::f32 ? 4 : 8; }

}  // namespace

template <class T>
CheckpointEntry make_entry(std::string name, const Shape& shape, std::span<const T> values) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  CheckpointEntry e{std::move(name), dtype_of<T>(), shape, {}};
  e.payload.resize(values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<Bits>(values[i]);
    for (std::size_t b = 0; b < sizeof(T); ++b)
      e.payload[i * sizeof(T) + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return e;
}

template <class T>
std::vector<T> CheckpointEntry::values() const {
  const std::size_t sz = dtype_size(dtype);
  const std::size_t n = payload.size() / sz;
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < sz; ++b) bits |= static_cast<std::uint64_t>(payload[i * sz + b]) << (8 * b);
    if (dtype == DType::f32) out[i] = static_cast<T>(std::bit_cast<float>(static_cast<std::uint32_t>(bits)));
    else out[i] = static_cast<T>(std::bit_cast<double>(bits));
  }
  return out;
}

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  Writer w;
  for (char ch : kMagic) w.u8(static_cast<std::uint8_t>(ch));
  w.u32(c.version);
  w.u64(c.epoch);
  w.str(c.config_text);
  w.str(c.rng_state);
  w.u32(static_cast<std::uint32_t>(c.entries.size()));
  for (const auto& e : c.entries) {
    w.str(e.name);
    w.u8(static_cast<std::uint8_t>(e.dtype));
    w.u32(static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) w.u64(d);
    w.u64(e.payload.size());
    w.bytes(e.payload);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char ch : kMagic)
    if (r.u8() != static_cast<std::uint8_t>(ch)) throw FormatError("not a checkpoint (bad magic)");
  Checkpoint c;
  c.version = r.u32();
  if (c.version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(c.version));
  c.epoch = r.u64();
  c.config_text = r.str();
  c.rng_state = r.str();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    CheckpointEntry e;
    const std::size_t at = r.offset();
    e.name = r.str();
    const std::uint8_t dt = r.u8();
    if (dt > 1) throw FormatError("entry '" + e.name + "' at byte offset " + std::to_string(at) + ": bad dtype");
    e.dtype = static_cast<DType>(dt);
    const std::uint32_t nd = r.u32();
    e.shape.resize(nd);
    for (auto& d : e.shape) d = r.u64();
    const std::uint64_t len = r.u64();
    if (len != shape_numel(e.shape) * dtype_size(e.dtype))
      throw FormatError("entry '" + e.name + "' at byte offset " + std::to_string(at) +
                        ": payload size does not match its shape");
    e.payload = r.bytes(len);
    c.entries.push_back(std::move(e));
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& c) {
  const auto bytes = encode_checkpoint(c);
  auto tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open " + file.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

template <class T>
Checkpoint snapshot(Network<T>& net, const NormStats& stats) {
  Checkpoint c;
  auto reg = net.registry();
  for (const auto& p : reg.params) c.entries.push_back(make_entry<T>(p.name, p.tensor.shape(), p.tensor.data()));
  for (const auto& b : reg.buffers)
    c.entries.push_back(make_entry<T>(b.name, {b.values->size()}, std::span<const T>(*b.values)));
  c.entries.push_back(make_entry<float>("norm.mean", {3}, std::span<const float>(stats.mean)));
  c.entries.push_back(make_entry<float>("norm.std", {3}, std::span<const float>(stats.std)));
  return c;
}

template <class T>
void restore(Network<T>& net, const Checkpoint& c) {
  auto reg = net.registry();
  for (auto& p : reg.params) {
    const auto* e = c.find(p.name);
    if (!e) throw ConfigError("checkpoint has no entry '" + p.name + "'");
    if (e->shape != p.tensor.shape())
      throw ConfigError("checkpoint entry '" + p.name + "' has shape " + shape_str(e->shape) + ", network expects " +
                        shape_str(p.tensor.shape()));
    const auto v = e->template values<T>();
    auto dst = p.tensor.mutable_data();
    std::copy(v.begin(), v.end(), dst.begin());
  }
  for (auto& b : reg.buffers) {
    const auto* e = c.find(b.name);
    if (!e) throw ConfigError("checkpoint has no entry '" + b.name + "'");
    if (e->shape != Shape{b.values->size()})
      throw ConfigError("checkpoint entry '" + b.name + "' has shape " + shape_str(e->shape));
    *b.values = e->template values<T>();
  }
}

NormStats checkpoint_norm_stats(const Checkpoint& c) {
  NormStats s;
  const auto* m = c.find("norm.mean");
  const auto* d = c.find("norm.std");
  if (!m || !d) throw FormatError("checkpoint carries no normalization statistics");
  const auto mv = m->values<float>();
  const auto dv = d->values<float>();
  if (mv.size() != 3 || dv.size() != 3) throw FormatError("normalization statistics must have 3 channels");
  std::copy(mv.begin(), mv.end(), s.mean.begin());
  std::copy(dv.begin(), dv.end(), s.std.begin());
  return s;
}

template CheckpointEntry make_entry<float>(std::string, const Shape&, std::span<const float>);
template CheckpointEntry make_entry<double>(std::string, const Shape&, std::span<const double>);
template std::vector<float> CheckpointEntry::values<float>() const;
template std::vector<double> CheckpointEntry::values<double>() const;
template Checkpoint snapshot<float>(Network<float>&, const NormStats&);
template Checkpoint snapshot<double>(Network<double>&, const NormStats&);
template void restore<float>(Network<float>&, const Checkpoint&);
template void restore<double>(Network<double>&, const Checkpoint&);

}  // namespace axh

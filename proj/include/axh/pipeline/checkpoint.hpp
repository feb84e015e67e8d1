#pragma once

// Versioned binary checkpoint container.
//
//   magic "AXHCKPT\0", u32 version, u64 epoch,
//   str config_text, str rng_state, u32 entry count,
//   entries: str name, u8 dtype, u32 ndim, u64 dims[ndim], u64 payload bytes, payload
//
// Integers and payloads are little-endian; str is u64 length + bytes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "axh/blocks.hpp"
#include "axh/pipeline/data.hpp"

namespace axh {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

struct CheckpointEntry {
  std::string name;
  DType dtype = DType::f32;
  Shape shape;
  std::vector<std::uint8_t> payload;

  /// Payload converted to T.
  template <class T>
  std::vector<T> values() const;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t epoch = 0;
  std::string config_text;
  std::string rng_state;
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* find(const std::string& name) const;
};

template <class T>
CheckpointEntry make_entry(std::string name, const Shape& shape, std::span<const T> values);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c);
/// Throws FormatError on a bad magic, unknown version or truncated content.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes to a temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& file, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& file);

/// Every parameter and buffer of the network plus norm.mean / norm.std.
template <class T>
Checkpoint snapshot(Network<T>& net, const NormStats& stats);

/// Copies matching entries into the network. Throws ConfigError when a
/// parameter or buffer is missing or its shape differs.
template <class T>
void restore(Network<T>& net, const Checkpoint& c);

NormStats checkpoint_norm_stats(const Checkpoint& c);

}  // namespace axh

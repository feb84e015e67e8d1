#pragma once

// Bottleneck blocks for the four network families and the ResNet assembler.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "axh/layers.hpp"

namespace axh {

enum class Family { quaternion, vectormap, qphm, axial };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

struct ArchConfig {
  Family family = Family::axial;
  std::array<std::size_t, 4> multipliers{3, 4, 6, 3};
  std::array<std::size_t, 4> widths{120, 240, 480, 960};
  std::size_t stem_channels = 120;
  std::size_t num_classes = 10;
  Hw input_size{32, 32};
  std::size_t phm_n = 5;

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

inline constexpr std::size_t kExpansion = 4;
inline constexpr std::array<std::size_t, 4> kGroupStrides{1, 2, 2, 2};

/// "axial-26", "quaternion-50", ... Depths 26, 35, 50 map to multipliers
/// [1,2,4,1], [2,3,4,2], [3,4,6,3]. Throws ConfigError for unknown names.
ArchConfig named_arch(std::string_view name, std::size_t num_classes = 10);

/// True if `name` has the form family-depth with a known family and depth.
bool is_named_arch(std::string_view name);

/// key=value lines: family, multipliers, widths, stem_channels, classes, input, phm_n.
std::string arch_to_text(const ArchConfig& cfg);

/// Sets one arch field from its text form. Returns false for keys that are
/// not arch keys; throws ConfigError for malformed values.
bool apply_arch_key(ArchConfig& cfg, std::string_view key, std::string_view value);

/// Parses arch_to_text output (blank lines and # comments allowed).
ArchConfig arch_from_text(std::string_view text);

struct ConfigViolation {
  std::string stage;       // "stem", "group2", "head", ...
  std::string constraint;  // e.g. "width divisible by 12"
  std::string actual;      // offending value
  std::string message() const { return stage + ": " + constraint + " (got " + actual + ")"; }
};

/// Empty iff `build_network(cfg)` succeeds.
std::vector<ConfigViolation> validate_config(const ArchConfig& cfg);

/// One layer of a network as seen by the cost analysis: its LayerSpec plus the
/// N=1 activation shapes [C,H,W] (or [F] for pooled features) around it.
struct TraceRow {
  std::string name;
  LayerSpec spec;
  Shape in;
  Shape out;
};

template <class T>
using Probe = std::function<void(const std::string& layer, const Tensor<T>& out)>;

/// conv -> bn (-> relu) stage of a bottleneck.
template <class T>
struct ConvUnit {
  ConvLayer<T> conv;
  BatchNormLayer<T> bn;
  bool relu = true;
};

template <class T>
class Bottleneck {
 public:
  Bottleneck() = default;
  Bottleneck(std::vector<ConvUnit<T>> units, bool has_projection, ConvUnit<T> projection);

  Tensor<T> forward(const Tensor<T>& x, bool training, const std::string& name = {}, const Probe<T>& probe = {});
  void collect(ParamRegistry<T>& reg, const std::string& prefix);
  /// Appends rows for the block and returns its output shape.
  Shape trace(std::vector<TraceRow>& rows, const std::string& prefix, const Shape& in) const;

  /// Sets gamma of the last main-path batchnorm to zero.
  void zero_final_bn_gamma();

  const std::vector<ConvUnit<T>>& units() const { return units_; }
  bool has_projection() const { return has_projection_; }
  const ConvUnit<T>& projection() const { return projection_; }
  std::size_t in_channels() const { return units_.front().conv.spec().in_channels; }
  std::size_t out_channels() const { return units_.back().conv.spec().out_channels; }

 private:
  std::vector<ConvUnit<T>> units_;
  bool has_projection_ = false;
  ConvUnit<T> projection_;
};

/// 1x1 Q (c_in->width), 3x1 AV stride (s,1), 1x3 AV stride (1,s), 1x1 Q (width->4 width).
template <class T>
Bottleneck<T> build_axial_bottleneck(std::size_t c_in, std::size_t width, std::size_t stride, std::mt19937_64& rng);
/// 1x1, 3x3 (stride s), 1x1 with quaternion convolutions.
template <class T>
Bottleneck<T> build_quaternion_bottleneck(std::size_t c_in, std::size_t width, std::size_t stride,
                                          std::mt19937_64& rng);
/// Same block as the quaternion family; the families differ in the head.
template <class T>
Bottleneck<T> build_qphm_bottleneck(std::size_t c_in, std::size_t width, std::size_t stride, std::mt19937_64& rng);
/// 1x1, 3x3 (stride s), 1x1 with vectormap convolutions.
template <class T>
Bottleneck<T> build_vectormap_bottleneck(std::size_t c_in, std::size_t width, std::size_t stride,
                                         std::mt19937_64& rng);
template <class T>
Bottleneck<T> build_bottleneck(Family f, std::size_t c_in, std::size_t width, std::size_t stride,
                               std::mt19937_64& rng);

/// Stem, four groups of bottlenecks, global average pool and a dense or PHM head.
/// Parameter tensors are shared handles; buffers registered by registry()
/// point into this object, so it is move-only and registries must be
/// re-created after a move.
template <class T>
class Network {
 public:
  Network(const ArchConfig& cfg, std::uint64_t seed);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  /// images [N,C,H,W] -> logits [N,num_classes]
  Tensor<T> forward(const Tensor<T>& images, bool training, const Probe<T>& probe = {});

  ParamRegistry<T> registry();
  /// Layer rows for one image of shape [C,H,W] (default: 3 x config input size).
  std::vector<TraceRow> trace(const Shape& image) const;
  std::vector<TraceRow> trace() const { return trace({3, cfg_.input_size.h, cfg_.input_size.w}); }
  std::size_t param_count();

  const ArchConfig& config() const { return cfg_; }
  std::vector<Bottleneck<T>>& group(std::size_t g) { return groups_.at(g); }
  const ConvLayer<T>& stem() const { return stem_.conv; }
  bool phm_head() const { return phm_head_; }
  const PHMDenseLayer<T>& phm_head_layer() const { return phm_; }

 private:
  ArchConfig cfg_;
  ConvUnit<T> stem_;
  std::array<std::vector<Bottleneck<T>>, 4> groups_;
  bool phm_head_ = false;
  DenseLayer<T> dense_;
  PHMDenseLayer<T> phm_;
};

/// Throws ConfigError listing every violation when the config is not buildable.
template <class T>
Network<T> build_network(const ArchConfig& cfg, std::uint64_t seed = 0);

/// Channels the stem sees after padding the image to its algebra's grouping.
std::size_t stem_input_channels(Family f, std::size_t image_channels);

}  // namespace axh

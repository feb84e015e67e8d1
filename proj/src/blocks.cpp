#include "axh/blocks.hpp"

#include <charconv>
#include <sstream>

#include "axh/errors.hpp"

namespace axh {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::quaternion: return "quaternion";
    case Family::vectormap: return "vectormap";
    case Family::qphm: return "qphm";
    case Family::axial: return "axial";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::quaternion, Family::vectormap, Family::qphm, Family::axial})
    if (family_name(f) == name) return f;
  throw ConfigError("unknown family '" + std::string(name) + "' (expected quaternion, vectormap, qphm or axial)");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(std::string_view key, std::string_view v) {
  v = trim(v);
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

std::array<std::size_t, 4> parse_quad(std::string_view key, std::string_view v) {
  std::array<std::size_t, 4> out{};
  std::size_t i = 0;
  while (true) {
    const auto comma = v.find(',');
    if (i == 4) throw ConfigError(std::string(key) + ": expected 4 comma-separated values");
    out[i++] = parse_size(key, v.substr(0, comma));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (i != 4) throw ConfigError(std::string(key) + ": expected 4 comma-separated values");
  return out;
}

std::string quad_str(const std::array<std::size_t, 4>& a) {
  return std::to_string(a[0]) + "," + std::to_string(a[1]) + "," + std::to_string(a[2]) + "," + std::to_string(a[3]);
}

std::array<std::size_t, 4> depth_multipliers(std::string_view depth) {
  if (depth == "26") return {1, 2, 4, 1};
  if (depth == "35") return {2, 3, 4, 2};
  if (depth == "50") return {3, 4, 6, 3};
  throw ConfigError("unknown depth '" + std::string(depth) + "' (expected 26, 35 or 50)");
}

bool uses_phm_head(Family f) { return f == Family::qphm || f == Family::axial; }

std::size_t stem_group(Family f) { return f == Family::vectormap ? 3 : 4; }

}  // namespace

ArchConfig named_arch(std::string_view name, std::size_t num_classes) {
  const auto dash = name.rfind('-');
  if (dash == std::string_view::npos) throw ConfigError("arch name '" + std::string(name) + "' is not family-depth");
  ArchConfig cfg;
  cfg.family = parse_family(name.substr(0, dash));
  cfg.multipliers = depth_multipliers(name.substr(dash + 1));
  cfg.num_classes = num_classes;
  return cfg;
}

bool is_named_arch(std::string_view name) {
  try {
    named_arch(name);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

std::string arch_to_text(const ArchConfig& c) {
  std::ostringstream os;
  os << "family=" << family_name(c.family) << '\n'
     << "multipliers=" << quad_str(c.multipliers) << '\n'
     << "widths=" << quad_str(c.widths) << '\n'
     << "stem_channels=" << c.stem_channels << '\n'
     << "classes=" << c.num_classes << '\n'
     << "input=" << c.input_size.h << 'x' << c.input_size.w << '\n'
     << "phm_n=" << c.phm_n << '\n';
  return os.str();
}

bool apply_arch_key(ArchConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "family") {
    c.family = parse_family(value);
  } else if (key == "arch") {
    const auto keep_classes = c.num_classes;
    const auto keep_phm = c.phm_n;
    c = named_arch(value, keep_classes);
    c.phm_n = keep_phm;
  } else if (key == "multipliers") {
    c.multipliers = parse_quad(key, value);
  } else if (key == "widths") {
    c.widths = parse_quad(key, value);
  } else if (key == "stem_channels") {
    c.stem_channels = parse_size(key, value);
  } else if (key == "classes" || key == "num_classes") {
    c.num_classes = parse_size(key, value);
  } else if (key == "input" || key == "input_size") {
    const auto x = value.find('x');
    if (x == std::string_view::npos) {
      const auto s = parse_size(key, value);
      c.input_size = {s, s};
    } else {
      c.input_size = {parse_size(key, value.substr(0, x)), parse_size(key, value.substr(x + 1))};
    }
  } else if (key == "phm_n") {
    c.phm_n = parse_size(key, value);
  } else {
    return false;
  }
  return true;
}

ArchConfig arch_from_text(std::string_view text) {
  ArchConfig cfg;
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
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    if (!apply_arch_key(cfg, key, line.substr(eq + 1)))
      throw ConfigError("line " + std::to_string(line_no) + ": unknown arch key '" + std::string(key) + "'");
  }
  return cfg;
}

std::vector<ConfigViolation> validate_config(const ArchConfig& c) {
  std::vector<ConfigViolation> v;
  const auto add = [&](std::string stage, std::string constraint, std::size_t actual) {
    v.push_back({std::move(stage), std::move(constraint), std::to_string(actual)});
  };
  const std::size_t sg = stem_group(c.family);
  if (c.stem_channels == 0 || c.stem_channels % sg != 0)
    add("stem", "channels positive and divisible by " + std::to_string(sg), c.stem_channels);
  if (c.input_size.h < 3 || c.input_size.w < 3)
    add("stem", "input at least 3x3", std::min(c.input_size.h, c.input_size.w));

  std::size_t width_div = 4;
  if (c.family == Family::axial) width_div = 12;
  if (c.family == Family::vectormap) width_div = 3;
  for (std::size_t g = 0; g < 4; ++g) {
    const std::string stage = "group" + std::to_string(g + 1);
    if (c.multipliers[g] == 0) add(stage, "block count positive", 0);
    if (c.widths[g] == 0 || c.widths[g] % width_div != 0)
      add(stage, "width divisible by " + std::to_string(width_div), c.widths[g]);
  }

  const std::size_t features = kExpansion * c.widths[3];
  if (c.num_classes == 0) add("head", "classes positive", 0);
  if (uses_phm_head(c.family)) {
    if (c.phm_n != 1 && c.phm_n != 4 && c.phm_n != 5) add("head", "phm_n in {1, 4, 5}", c.phm_n);
    else {
      if (c.num_classes % c.phm_n != 0)
        add("head", "classes divisible by phm_n=" + std::to_string(c.phm_n), c.num_classes);
      if (features % c.phm_n != 0)
        add("head", "pooled features divisible by phm_n=" + std::to_string(c.phm_n), features);
    }
  }
  return v;
}

std::size_t stem_input_channels(Family f, std::size_t image_channels) {
  const std::size_t g = stem_group(f);
  return (image_channels + g - 1) / g * g;
}

// Bottleneck

template <class T>
Bottleneck<T>::Bottleneck(std::vector<ConvUnit<T>> units, bool has_projection, ConvUnit<T> projection)
    : units_(std::move(units)), has_projection_(has_projection), projection_(std::move(projection)) {
  if (units_.empty()) throw ConfigError("bottleneck needs at least one conv unit");
}

template <class T>
Tensor<T> Bottleneck<T>::forward(const Tensor<T>& x, bool training, const std::string& name, const Probe<T>& probe) {
  Tensor<T> h = x;
  for (std::size_t i = 0; i < units_.size(); ++i) {
    auto& u = units_[i];
    h = u.conv.forward(h);
    if (probe) probe(name + ".conv" + std::to_string(i + 1), h);
    h = u.bn.forward(h, training);
    if (probe) probe(name + ".bn" + std::to_string(i + 1), h);
    if (u.relu) h = relu(h);
  }
  Tensor<T> skip = x;
  if (has_projection_) {
    skip = projection_.conv.forward(x);
    if (probe) probe(name + ".proj.conv", skip);
    skip = projection_.bn.forward(skip, training);
    if (probe) probe(name + ".proj.bn", skip);
  }
  auto out = relu(add(h, skip));
  if (probe) probe(name + ".out", out);
  return out;
}

template <class T>
void Bottleneck<T>::collect(ParamRegistry<T>& reg, const std::string& prefix) {
  for (std::size_t i = 0; i < units_.size(); ++i) {
    units_[i].conv.collect(reg, prefix + ".conv" + std::to_string(i + 1));
    units_[i].bn.collect(reg, prefix + ".bn" + std::to_string(i + 1));
  }
  if (has_projection_) {
    projection_.conv.collect(reg, prefix + ".proj.conv");
    projection_.bn.collect(reg, prefix + ".proj.bn");
  }
}

namespace {

Shape conv_out_shape(const LayerSpec& s, const Shape& in) {
  return {s.out_channels, conv_out_extent(in[1], s.kernel.h, s.stride.h, s.padding.h),
          conv_out_extent(in[2], s.kernel.w, s.stride.w, s.padding.w)};
}

LayerSpec elementwise_spec(LayerKind kind, std::size_t channels) {
  LayerSpec s;
  s.kind = kind;
  s.in_channels = channels;
  s.out_channels = channels;
  return s;
}

template <class T>
Shape trace_unit(std::vector<TraceRow>& rows, const ConvUnit<T>& u, const std::string& conv_name,
                 const std::string& bn_name, const std::string& relu_name, const Shape& in, bool relu) {
  const auto& cs = u.conv.spec();
  const Shape out = conv_out_shape(cs, in);
  rows.push_back({conv_name, cs, in, out});
  rows.push_back({bn_name, elementwise_spec(LayerKind::batchnorm, cs.out_channels), out, out});
  if (relu) rows.push_back({relu_name, elementwise_spec(LayerKind::relu, cs.out_channels), out, out});
  return out;
}

}  // namespace

template <class T>
Shape Bottleneck<T>::trace(std::vector<TraceRow>& rows, const std::string& prefix, const Shape& in) const {
  Shape h = in;
  for (std::size_t i = 0; i < units_.size(); ++i) {
    const auto idx = std::to_string(i + 1);
    h = trace_unit(rows, units_[i], prefix + ".conv" + idx, prefix + ".bn" + idx, prefix + ".relu" + idx, h,
                   units_[i].relu);
  }
  if (has_projection_) trace_unit(rows, projection_, prefix + ".proj.conv", prefix + ".proj.bn", "", in, false);
  rows.push_back({prefix + ".relu_out", elementwise_spec(LayerKind::relu, h[0]), h, h});
  return h;
}

template <class T>
void Bottleneck<T>::zero_final_bn_gamma() {
  auto g = units_.back().bn.gamma().mutable_data();
  std::fill(g.begin(), g.end(), T(0));
}

namespace {

LayerSpec conv_spec(LayerKind kind, std::size_t c_in, std::size_t c_out, Hw kernel, Hw stride, Hw padding) {
  LayerSpec s;
  s.kind = kind;
  s.in_channels = c_in;
  s.out_channels = c_out;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

template <class T>
ConvUnit<T> make_unit(const LayerSpec& s, std::mt19937_64& rng, bool relu) {
  return {ConvLayer<T>(s, rng), BatchNormLayer<T>(s.out_channels), relu};
}

template <class T>
Bottleneck<T> assemble(std::vector<ConvUnit<T>> units, LayerKind proj_kind, std::size_t c_in, std::size_t c_out,
                       std::size_t stride, std::mt19937_64& rng) {
  const bool project = stride != 1 || c_in != c_out;
  ConvUnit<T> proj;
  if (project) proj = make_unit<T>(conv_spec(proj_kind, c_in, c_out, {1, 1}, {stride, stride}, {0, 0}), rng, false);
  return Bottleneck<T>(std::move(units), project, std::move(proj));
}

void check_stride(std::size_t stride) {
  if (stride == 0) throw ConfigError("bottleneck stride must be >= 1");
}

template <class T>
Bottleneck<T> three_conv(LayerKind kind, std::size_t c_in, std::size_t width, std::size_t stride,
                         std::mt19937_64& rng) {
  check_stride(stride);
  const std::size_t c_out = kExpansion * width;
  std::vector<ConvUnit<T>> units;
  units.push_back(make_unit<T>(conv_spec(kind, c_in, width, {1, 1}, {1, 1}, {0, 0}), rng, true));
  units.push_back(make_unit<T>(conv_spec(kind, width, width, {3, 3}, {stride, stride}, {1, 1}), rng, true));
  units.push_back(make_unit<T>(conv_spec(kind, width, c_out, {1, 1}, {1, 1}, {0, 0}), rng, false));
  return assemble(std::move(units), kind, c_in, c_out, stride, rng);
}

}  // namespace

template <class T>
Bottleneck<T> build_axial_bottleneck(std::size_t c_in, std::size_t width, std::size_t stride, std::mt19937_64& rng) {
  check_stride(stride);
  if (width % 12 != 0)
    throw ConfigError("axial bottleneck: width " + std::to_string(width) + " not divisible by 12");
  const std::size_t c_out = kExpansion * width;
  std::vector<ConvUnit<T>> units;
  units.push_back(make_unit<T>(conv_spec(LayerKind::qconv, c_in, width, {1, 1}, {1, 1}, {0, 0}), rng, true));
  units.push_back(
      make_unit<T>(conv_spec(LayerKind::axial_v_h, width, width, {3, 1}, {stride, 1}, {1, 0}), rng, true));
  units.push_back(
      make_unit<T>(conv_spec(LayerKind::axial_v_w, width, width, {1, 3}, {1, stride}, {0, 1}), rng, true));
  units.push_back(make_unit<T>(conv_spec(LayerKind::qconv, width, c_out, {1, 1}, {1, 1}, {0, 0}), rng, false));
  return assemble(std::move(units), LayerKind::qconv, c_in, c_out, stride, rng);
}

template <class T>
Bottleneck<T> build_quaternion_bottleneck(std::size_t c_in, std::size_t width, std::size_t stride,
                                          std::mt19937_64& rng) {
  return three_conv<T>(LayerKind::qconv, c_in, width, stride, rng);
}

template <class T>
Bottleneck<T> build_qphm_bottleneck(std::size_t c_in, std::size_t width, std::size_t stride, std::mt19937_64& rng) {
  return three_conv<T>(LayerKind::qconv, c_in, width, stride, rng);
}

template <class T>
Bottleneck<T> build_vectormap_bottleneck(std::size_t c_in, std::size_t width, std::size_t stride,
                                         std::mt19937_64& rng) {
  return three_conv<T>(LayerKind::vconv, c_in, width, stride, rng);
}

template <class T>
Bottleneck<T> build_bottleneck(Family f, std::size_t c_in, std::size_t width, std::size_t stride,
                               std::mt19937_64& rng) {
  switch (f) {
    case Family::axial: return build_axial_bottleneck<T>(c_in, width, stride, rng);
    case Family::quaternion: return build_quaternion_bottleneck<T>(c_in, width, stride, rng);
    case Family::qphm: return build_qphm_bottleneck<T>(c_in, width, stride, rng);
    case Family::vectormap: return build_vectormap_bottleneck<T>(c_in, width, stride, rng);
  }
  throw ConfigError("unknown family");
}

// Network

template <class T>
Network<T>::Network(const ArchConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  const auto violations = validate_config(cfg);
  if (!violations.empty()) {
    std::string msg = "architecture is not buildable:";
    for (const auto& v : violations) msg += "\n  " + v.message();
    throw ConfigError(msg);
  }
  std::mt19937_64 rng(seed);
  const LayerKind stem_kind = cfg.family == Family::vectormap ? LayerKind::vconv : LayerKind::qconv;
  stem_ = make_unit<T>(
      conv_spec(stem_kind, stem_input_channels(cfg.family, 3), cfg.stem_channels, {3, 3}, {1, 1}, {1, 1}), rng, true);
  std::size_t c = cfg.stem_channels;
  for (std::size_t g = 0; g < 4; ++g) {
    for (std::size_t b = 0; b < cfg.multipliers[g]; ++b) {
      const std::size_t stride = b == 0 ? kGroupStrides[g] : 1;
      groups_[g].push_back(build_bottleneck<T>(cfg.family, c, cfg.widths[g], stride, rng));
      c = kExpansion * cfg.widths[g];
    }
  }
  phm_head_ = uses_phm_head(cfg.family);
  if (phm_head_) phm_ = PHMDenseLayer<T>(cfg.phm_n, c, cfg.num_classes, rng);
  else dense_ = DenseLayer<T>(c, cfg.num_classes, rng);
}

template <class T>
Tensor<T> Network<T>::forward(const Tensor<T>& images, bool training, const Probe<T>& probe) {
  if (images.ndim() != 4) throw DimensionError("network input must be N,C,H,W, got " + shape_str(images.shape()));
  const std::size_t want = stem_.conv.spec().in_channels;
  const std::size_t have = images.dim(1);
  if (have > want) throw DimensionError("network expects at most " + std::to_string(want) + " image channels");
  Tensor<T> h = have < want ? pad_channels(images, want - have, 0) : images;
  h = stem_.conv.forward(h);
  if (probe) probe("stem.conv", h);
  h = stem_.bn.forward(h, training);
  if (probe) probe("stem.bn", h);
  h = relu(h);
  for (std::size_t g = 0; g < 4; ++g)
    for (std::size_t b = 0; b < groups_[g].size(); ++b)
      h = groups_[g][b].forward(h, training, "group" + std::to_string(g + 1) + ".block" + std::to_string(b), probe);
  h = global_avg_pool(h);
  if (probe) probe("pool", h);
  h = phm_head_ ? phm_.forward(h) : dense_.forward(h);
  if (probe) probe("head", h);
  return h;
}

template <class T>
ParamRegistry<T> Network<T>::registry() {
  ParamRegistry<T> reg;
  stem_.conv.collect(reg, "stem.conv");
  stem_.bn.collect(reg, "stem.bn");
  for (std::size_t g = 0; g < 4; ++g)
    for (std::size_t b = 0; b < groups_[g].size(); ++b)
      groups_[g][b].collect(reg, "group" + std::to_string(g + 1) + ".block" + std::to_string(b));
  if (phm_head_) phm_.collect(reg, "head");
  else dense_.collect(reg, "head");
  return reg;
}

template <class T>
std::vector<TraceRow> Network<T>::trace(const Shape& image) const {
  if (image.size() != 3) throw DimensionError("trace needs an image shape C,H,W, got " + shape_str(image));
  std::vector<TraceRow> rows;
  const Shape padded{stem_input_channels(cfg_.family, image[0]), image[1], image[2]};
  Shape h = trace_unit(rows, stem_, "stem.conv", "stem.bn", "stem.relu", padded, true);
  for (std::size_t g = 0; g < 4; ++g)
    for (std::size_t b = 0; b < groups_[g].size(); ++b)
      h = groups_[g][b].trace(rows, "group" + std::to_string(g + 1) + ".block" + std::to_string(b), h);
  const Shape pooled{h[0]};
  rows.push_back({"pool", elementwise_spec(LayerKind::pool, h[0]), h, pooled});
  const LayerSpec head = phm_head_ ? phm_.spec() : dense_.spec();
  rows.push_back({"head", head, pooled, Shape{head.out_channels}});
  return rows;
}

template <class T>
std::size_t Network<T>::param_count() {
  return registry().scalar_count();
}

template <class T>
Network<T> build_network(const ArchConfig& cfg, std::uint64_t seed) {
  return Network<T>(cfg, seed);
}

#define AXH_INSTANTIATE(T)                                                                                  \
  template class Bottleneck<T>;                                                                             \
  template class Network<T>;                                                                                \
  template Bottleneck<T> build_axial_bottleneck<T>(std::size_t, std::size_t, std::size_t, std::mt19937_64&); \
  template Bottleneck<T> build_quaternion_bottleneck<T>(std::size_t, std::size_t, std::size_t,              \
                                                        std::mt19937_64&);                                  \
  template Bottleneck<T> build_qphm_bottleneck<T>(std::size_t, std::size_t, std::size_t, std::mt19937_64&); \
  template Bottleneck<T> build_vectormap_bottleneck<T>(std::size_t, std::size_t, std::size_t,               \
                                                       std::mt19937_64&);                                   \
  template Bottleneck<T> build_bottleneck<T>(Family, std::size_t, std::size_t, std::size_t, std::mt19937_64&); \
  template Network<T> build_network<T>(const ArchConfig&, std::uint64_t);

AXH_INSTANTIATE(float)
AXH_INSTANTIATE(double)
#undef AXH_INSTANTIATE

}  // namespace axh

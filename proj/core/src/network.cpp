#include "fcaide/network.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fcaide/rng.hpp"

namespace fcaide {

namespace {

const Tensor& unit_mask() {
  static const Tensor mask(Shape{1, 1}, 1.0);
  return mask;
}

std::string layer_prefix(int block, int layer) {
  return "block" + std::to_string(block) + ".layer" + std::to_string(layer);
}

std::string head_prefix(int m) { return "block3.head" + std::to_string(m); }

void add_resnet_layout(std::map<std::string, Shape>& layout, const std::string& prefix,
                       std::size_t width, std::size_t hidden) {
  layout[prefix + ".conv1.kernel"] = {hidden, width, 1, 1};
  layout[prefix + ".conv1.bias"] = {hidden};
  layout[prefix + ".alpha"] = {hidden};
  layout[prefix + ".conv2.kernel"] = {width, hidden, 1, 1};
  layout[prefix + ".conv2.bias"] = {width};
}

const MaskSpec& mask_for(const QedMasks& masks, StreamClass kind) {
  for (const MaskSpec& m : masks) {
    if (m.kind == kind) return m;
  }
  throw std::invalid_argument("mask set lacks class " + to_string(kind));
}

constexpr StreamClass kClasses[] = {StreamClass::Q, StreamClass::E, StreamClass::D};

}  // namespace

void NetworkConfig::validate() const {
  if (depth < 1) throw std::invalid_argument("NetworkConfig: depth must be >= 1");
  if (width < 1) throw std::invalid_argument("NetworkConfig: width must be >= 1");
  if (degree != 1 && degree != 2) throw std::invalid_argument("NetworkConfig: degree must be 1 or 2");
  if (resnet_hidden < 1) throw std::invalid_argument("NetworkConfig: resnet_hidden must be >= 1");
}

std::string to_string(const NetworkConfig& config) {
  std::ostringstream out;
  out << "depth=" << config.depth << " width=" << config.width << " degree=" << config.degree
      << " resnet_hidden=" << config.resnet_hidden;
  return out.str();
}

const Tensor& NetworkParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw std::out_of_range("NetworkParams: no parameter '" + name + "'");
  return it->second;
}

Tensor& NetworkParams::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw std::out_of_range("NetworkParams: no parameter '" + name + "'");
  return it->second;
}

std::size_t NetworkParams::stored_scalars() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors) n += t.size();
  return n;
}

std::map<std::string, Shape> parameter_layout(const NetworkConfig& config) {
  config.validate();
  const auto w = static_cast<std::size_t>(config.width);
  const auto h = static_cast<std::size_t>(config.resnet_hidden);
  std::map<std::string, Shape> layout;
  for (int l = 1; l <= config.depth; ++l) {
    const std::size_t cin = l == 1 ? 1 : w;
    for (StreamClass kind : kClasses) {
      const std::string p = layer_prefix(1, l) + "." + to_string(kind);
      layout[p + ".kernel"] = {w, cin, 3, 3};
      layout[p + ".bias"] = {w};
      layout[p + ".alpha"] = {w};
    }
    layout[layer_prefix(2, l) + ".alpha"] = {w};
    add_resnet_layout(layout, layer_prefix(2, l) + ".res", w, h);
  }
  add_resnet_layout(layout, "block3.res", w, h);
  for (int m = 0; m <= config.degree; ++m) {
    layout[head_prefix(m) + ".kernel"] = {1, w, 1, 1};
    layout[head_prefix(m) + ".bias"] = {1};
  }
  return layout;
}

std::size_t trainable_parameter_count(const NetworkConfig& config, const QedMasks& masks) {
  std::size_t total = 0;
  for (const auto& [name, shape] : parameter_layout(config)) total += shape_size(shape);
  const auto w = static_cast<std::size_t>(config.width);
  for (int l = 1; l <= config.depth; ++l) {
    const std::size_t cin = l == 1 ? 1 : w;
    for (const MaskSpec& m : masks) {
      const std::size_t taps = l == 1 ? m.input_taps.size() : m.stream_taps.size();
      total -= w * cin * (9 - taps);
    }
  }
  return total;
}

NetworkParams build_network(const NetworkConfig& config, std::uint64_t seed, const QedMasks& masks) {
  NetworkParams params;
  params.config = config;
  Rng rng(seed);
  // std::map iteration order makes the draw sequence a function of the names.
  for (const auto& [name, shape] : parameter_layout(config)) {
    Tensor t(shape, 0.0);
    const bool is_kernel = name.size() > 7 && name.compare(name.size() - 7, 7, ".kernel") == 0;
    const bool is_alpha = name.size() > 6 && name.compare(name.size() - 6, 6, ".alpha") == 0;
    if (is_alpha) {
      t.fill(0.25);
    } else if (is_kernel) {
      Tensor mask = unit_mask();
      if (name.rfind("block1.", 0) == 0) {
        const bool first = name.rfind("block1.layer1.", 0) == 0;
        const char cls = name[name.size() - 8];
        const MaskSpec& spec = mask_for(masks, cls == 'Q' ? StreamClass::Q
                                                : cls == 'E' ? StreamClass::E
                                                             : StreamClass::D);
        mask = first ? spec.input_mask() : spec.stream_mask();
      }
      std::size_t taps = 0;
      for (double v : mask.data()) taps += v != 0.0;
      const std::size_t fan_in = shape[1] * taps;
      const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      const std::size_t window = shape[2] * shape[3];
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (mask[i % window] != 0.0) t[i] = stddev * rng.normal();
      }
    }
    params.tensors.emplace(name, std::move(t));
  }
  return params;
}

BoundParams bind_parameters(Tape& tape, const NetworkParams& params, bool trainable) {
  BoundParams bound;
  for (const auto& [name, t] : params.tensors) {
    bound.emplace(name, trainable ? tape.variable(t, name) : tape.constant(t));
  }
  return bound;
}

namespace {

Var param(const BoundParams& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw std::invalid_argument("forward: missing parameter '" + name + "'");
  return it->second;
}

Var conv1x1(Tape& tape, const BoundParams& params, const std::string& prefix, Var x) {
  return tape.conv2d_masked(x, param(params, prefix + ".kernel"), unit_mask(), 1,
                            param(params, prefix + ".bias"));
}

}  // namespace

Var resnet_module(Tape& tape, const BoundParams& params, const std::string& prefix, Var x) {
  Var hidden = conv1x1(tape, params, prefix + ".conv1", x);
  hidden = tape.prelu(hidden, param(params, prefix + ".alpha"));
  Var branch = conv1x1(tape, params, prefix + ".conv2", hidden);
  return tape.add(x, branch);
}

std::vector<Var> forward(Tape& tape, const BoundParams& params, const NetworkConfig& config,
                         Var image, const QedMasks& masks, ForwardTrace* trace) {
  config.validate();
  if (image.value().rank() != 2) {
    throw std::invalid_argument("forward: image must be [H,W], got " + shape_string(image.shape()));
  }
  const std::size_t h = image.shape()[0];
  const std::size_t w = image.shape()[1];
  for (int m = 0; m <= config.degree; ++m) {
    if (!params.count(head_prefix(m) + ".kernel")) {
      throw std::invalid_argument("forward: parameters lack head " + std::to_string(m) +
                                  " required by degree " + std::to_string(config.degree));
    }
  }
  if (params.count(head_prefix(config.degree + 1) + ".kernel")) {
    throw std::invalid_argument("forward: parameters carry more heads than degree " +
                                std::to_string(config.degree) + " uses");
  }

  Var input = tape.reshape(image, Shape{1, h, w});
  std::array<Var, 3> streams{input, input, input};
  std::vector<Var> block2_out;
  for (int l = 1; l <= config.depth; ++l) {
    const int dilation = MaskSpec::dilation(l);
    for (std::size_t s = 0; s < 3; ++s) {
      const MaskSpec& spec = mask_for(masks, kClasses[s]);
      const std::string p = layer_prefix(1, l) + "." + to_string(spec.kind);
      const Tensor mask = l == 1 ? spec.input_mask() : spec.stream_mask();
      Var conv = tape.conv2d_masked(streams[s], param(params, p + ".kernel"), mask, dilation,
                                    param(params, p + ".bias"));
      streams[s] = tape.prelu(conv, param(params, p + ".alpha"));
    }
    Var combined = tape.scalar_mul(tape.add(tape.add(streams[0], streams[1]), streams[2]), 1.0 / 3.0);
    Var activated = tape.prelu(combined, param(params, layer_prefix(2, l) + ".alpha"));
    Var b2 = resnet_module(tape, params, layer_prefix(2, l) + ".res", activated);
    block2_out.push_back(b2);
    if (trace) {
      trace->streams.push_back(streams);
      trace->combined.push_back(combined);
      trace->block2.push_back(b2);
    }
  }

  Var pooled = block2_out[0];
  for (std::size_t i = 1; i < block2_out.size(); ++i) pooled = tape.add(pooled, block2_out[i]);
  pooled = tape.scalar_mul(pooled, 1.0 / static_cast<double>(block2_out.size()));
  Var features = resnet_module(tape, params, "block3.res", pooled);
  if (trace) trace->block3 = features;

  std::vector<Var> coeffs;
  for (int m = 0; m <= config.degree; ++m) {
    Var head = conv1x1(tape, params, head_prefix(m), features);
    coeffs.push_back(tape.reshape(head, Shape{h, w}));
  }
  return coeffs;
}

CoefficientMaps forward(const NetworkParams& params, const Tensor& image, const QedMasks& masks) {
  Tape tape;
  BoundParams bound = bind_parameters(tape, params, false);
  Var z = tape.constant(image);
  std::vector<Var> coeffs = forward(tape, bound, params.config, z, masks);
  CoefficientMaps out;
  for (Var v : coeffs) out.a.push_back(v.value());
  return out;
}

}  // namespace fcaide

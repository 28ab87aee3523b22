#include "fcaide/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fcaide {

namespace {

constexpr std::string_view kMagic = "FCAIDE1\n";

static_assert(std::numeric_limits<float>::is_iec559, "f32 payloads need IEEE-754 floats");

void put_f32(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

double get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= std::uint32_t{static_cast<unsigned char>(p[b])} << (8 * b);
  return static_cast<double>(std::bit_cast<float>(bits));
}

std::string shape_field(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out;
}

Shape parse_shape(const std::string& field, const std::string& name) {
  Shape s;
  std::stringstream ss(field);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw CheckpointError("checkpoint: bad shape '" + field + "' for " + name);
    }
    s.push_back(std::stoull(part));
  }
  if (s.empty()) throw CheckpointError("checkpoint: empty shape for " + name);
  return s;
}

const Shape& shape_of(const std::map<std::string, Shape>& shapes, const std::string& name) {
  auto it = shapes.find(name);
  if (it == shapes.end()) throw CheckpointError("checkpoint: missing tensor " + name);
  return it->second;
}

NetworkConfig infer_config(const std::map<std::string, Shape>& shapes) {
  NetworkConfig cfg;
  cfg.depth = 0;
  while (shapes.count("block1.layer" + std::to_string(cfg.depth + 1) + ".Q.kernel")) ++cfg.depth;
  cfg.degree = -1;
  while (shapes.count("block3.head" + std::to_string(cfg.degree + 1) + ".kernel")) ++cfg.degree;
  if (cfg.depth == 0) throw CheckpointError("checkpoint: no Block-1 layers found");
  if (cfg.degree < 0) throw CheckpointError("checkpoint: no output heads found");
  cfg.width = static_cast<int>(shape_of(shapes, "block1.layer1.Q.kernel").at(0));
  cfg.resnet_hidden = static_cast<int>(shape_of(shapes, "block3.res.conv1.kernel").at(0));
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint: inconsistent structure: ") + e.what());
  }
  return cfg;
}

void check_layout(const std::map<std::string, Shape>& shapes, const NetworkConfig& cfg) {
  const auto layout = parameter_layout(cfg);
  for (const auto& [name, shape] : shapes) {
    auto it = layout.find(name);
    if (it == layout.end()) {
      throw CheckpointError("checkpoint: unknown parameter " + name + " for network " + to_string(cfg));
    }
    if (it->second != shape) {
      throw CheckpointError("checkpoint: " + name + " has shape " + shape_string(shape) + ", expected " +
                            shape_string(it->second));
    }
  }
  for (const auto& [name, shape] : layout) {
    if (!shapes.count(name)) throw CheckpointError("checkpoint: missing tensor " + name);
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

std::string encode_checkpoint(const NetworkParams& params) {
  std::string out(kMagic);
  for (const auto& [name, t] : params.tensors) {
    if (name.empty() || name.find_first_of(" \n\t") != std::string::npos) {
      throw CheckpointError("checkpoint: parameter name '" + name + "' cannot be stored");
    }
    out += name + " f32 " + shape_field(t.shape()) + "\n";
  }
  out += "\n";
  for (const auto& [name, t] : params.tensors) {
    for (double v : t.values()) put_f32(out, v);
  }
  return out;
}

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(params);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError("checkpoint: write failed for " + path.string());
}

NetworkParams decode_checkpoint(const std::string& bytes) {
  if (bytes.compare(0, kMagic.size(), kMagic) != 0) throw CheckpointError("checkpoint: bad magic");
  std::size_t pos = kMagic.size();

  std::vector<std::pair<std::string, Shape>> header;
  std::map<std::string, Shape> shapes;
  for (;;) {
    const std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string::npos) throw CheckpointError("checkpoint: unterminated header");
    const std::string line = bytes.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) break;
    std::istringstream ls(line);
    std::string name, dtype, shape, extra;
    if (!(ls >> name >> dtype >> shape) || (ls >> extra)) {
      throw CheckpointError("checkpoint: malformed header line '" + line + "'");
    }
    if (dtype != "f32") throw CheckpointError("checkpoint: unsupported dtype " + dtype + " for " + name);
    Shape s = parse_shape(shape, name);
    if (!shapes.emplace(name, s).second) throw CheckpointError("checkpoint: duplicate tensor " + name);
    header.emplace_back(name, std::move(s));
  }

  const NetworkConfig cfg = infer_config(shapes);
  check_layout(shapes, cfg);

  NetworkParams params;
  params.config = cfg;
  for (const auto& [name, shape] : header) {
    const std::size_t n = shape_size(shape);
    if (bytes.size() - pos < 4 * n) {
      throw CheckpointError("checkpoint: truncated payload for tensor " + name + " (" +
                            std::to_string((bytes.size() - pos) / 4) + " of " + std::to_string(n) +
                            " values)");
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i, pos += 4) values[i] = get_f32(bytes.data() + pos);
    params.tensors.emplace(name, Tensor(shape, std::move(values)));
  }
  if (pos != bytes.size()) {
    throw CheckpointError("checkpoint: " + std::to_string(bytes.size() - pos) + " trailing bytes after payload");
  }
  return params;
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(slurp(path));
  } catch (const CheckpointError& e) {
    throw CheckpointError(std::string(e.what()) + " in " + path.string());
  }
}

NetworkParams load_checkpoint(const std::filesystem::path& path, const NetworkConfig& expected) {
  NetworkParams params = load_checkpoint(path);
  if (!(params.config == expected)) {
    throw CheckpointError("checkpoint: structural mismatch: file holds " + to_string(params.config) +
                          ", expected " + to_string(expected));
  }
  return params;
}

NetworkParams round_to_f32(const NetworkParams& params) {
  NetworkParams out = params;
  for (auto& [name, t] : out.tensors) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(static_cast<float>(t[i]));
  }
  return out;
}

}  // namespace fcaide

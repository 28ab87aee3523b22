#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fcaide/masks.hpp"
#include "fcaide/tape.hpp"
#include "fcaide/tensor.hpp"

namespace fcaide {

struct NetworkConfig {
  int depth = 4;          // Block-1 layers
  int width = 16;         // channels per convolution
  int degree = 2;         // polynomial order of the pixelwise map, 1 or 2
  int resnet_hidden = 16; // channels inside each ResNet module

  void validate() const;
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

std::string to_string(const NetworkConfig& config);

using ParamMap = std::map<std::string, Tensor>;

/// Learnable weights addressed by path, e.g. "block1.layer3.Q.kernel".
struct NetworkParams {
  NetworkConfig config;
  ParamMap tensors;

  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  /// Number of stored scalars, masked kernel entries included.
  std::size_t stored_scalars() const;
};

/// Names and shapes every NetworkParams for `config` must carry.
std::map<std::string, Shape> parameter_layout(const NetworkConfig& config);

/// Scalars that can actually change during training: stored scalars minus
/// kernel entries removed by the masks.
std::size_t trainable_parameter_count(const NetworkConfig& config,
                                      const QedMasks& masks = canonical_masks());

/// He-style fan-in initialization counting only unmasked taps; zero biases;
/// PReLU slopes 0.25. Deterministic in (config, seed).
NetworkParams build_network(const NetworkConfig& config, std::uint64_t seed,
                            const QedMasks& masks = canonical_masks());

/// Per-pixel polynomial coefficients a[0..degree], each [H,W].
struct CoefficientMaps {
  std::vector<Tensor> a;
  int degree() const { return static_cast<int>(a.size()) - 1; }
};

using BoundParams = std::map<std::string, Var>;

/// Records every parameter on the tape, as named variables when `trainable`.
BoundParams bind_parameters(Tape& tape, const NetworkParams& params, bool trainable);

/// Intermediate maps kept for structural probes.
struct ForwardTrace {
  std::vector<std::array<Var, 3>> streams;  // per layer: q, e, d  [W,H,W]
  std::vector<Var> combined;                // A_l, mean of the three streams
  std::vector<Var> block2;                  // ResNet(PReLU(A_l))
  Var block3;                               // ResNet(mean of block2)
};

/// x + conv2(PReLU(conv1(x))) with 1x1 convolutions; parameters under `prefix`.
Var resnet_module(Tape& tape, const BoundParams& params, const std::string& prefix, Var x);

/// Records the network on `tape`. `image` is [H,W]; returns one [H,W] variable
/// per coefficient a_0..a_degree.
std::vector<Var> forward(Tape& tape, const BoundParams& params, const NetworkConfig& config,
                         Var image, const QedMasks& masks = canonical_masks(),
                         ForwardTrace* trace = nullptr);

/// Value-only forward pass.
CoefficientMaps forward(const NetworkParams& params, const Tensor& image,
                        const QedMasks& masks = canonical_masks());

}  // namespace fcaide

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "fcaide/network.hpp"

namespace fcaide {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Layout: "FCAIDE1\n", one "name f32 d0,d1,..." line per tensor, an empty
/// line, then little-endian f32 payloads in header order. Weights are held in
/// double and narrowed to f32 on save.
std::string encode_checkpoint(const NetworkParams& params);
void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path);

/// The network configuration is recovered from tensor names and shapes and
/// the tensor set must match its layout exactly.
NetworkParams decode_checkpoint(const std::string& bytes);
NetworkParams load_checkpoint(const std::filesystem::path& path);

/// Same, but also rejects a checkpoint whose structure differs from `expected`.
NetworkParams load_checkpoint(const std::filesystem::path& path, const NetworkConfig& expected);

/// Every weight rounded to the nearest f32, i.e. what a save/load cycle keeps.
NetworkParams round_to_f32(const NetworkParams& params);

}  // namespace fcaide

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "fcaide/image.hpp"

namespace fcaide {

class PgmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary P5 with maxval 255. Comments (#...) are allowed in the header.
/// Returns a Raw255 image.
GrayImage read_pgm(const std::filesystem::path& path);
GrayImage decode_pgm(const std::string& bytes);

/// Converts to raw scale, rounds half away from zero, clips to [0,255].
void write_pgm(const GrayImage& img, const std::filesystem::path& path);
std::string encode_pgm(const GrayImage& img);

}  // namespace fcaide

#include "fcaide/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fcaide {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  unsigned long number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (v > 1'000'000'000UL) throw PgmError(std::string("pgm: ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) throw PgmError(std::string("pgm: malformed header (expected ") + what + ")");
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw PgmError("pgm: malformed header (no whitespace after maxval)");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage decode_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw PgmError("pgm: malformed header (magic is not P5)");
  }
  HeaderReader in(bytes);
  in.advance(2);
  const unsigned long width = in.number("width");
  const unsigned long height = in.number("height");
  const unsigned long maxval = in.number("maxval");
  if (width == 0 || height == 0) throw PgmError("pgm: malformed header (zero dimension)");
  if (maxval != 255) throw PgmError("pgm: unsupported maxval " + std::to_string(maxval) + " (only 255)");
  in.single_whitespace();

  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (bytes.size() - in.pos() < n) {
    throw PgmError("pgm: truncated payload (" + std::to_string(bytes.size() - in.pos()) + " of " +
                   std::to_string(n) + " bytes)");
  }
  std::vector<double> pixels(n);
  for (std::size_t i = 0; i < n; ++i) pixels[i] = static_cast<unsigned char>(bytes[in.pos() + i]);
  return GrayImage(height, width, std::move(pixels), PixelScale::Raw255);
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw PgmError("pgm: cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return decode_pgm(ss.str());
  } catch (const PgmError& e) {
    throw PgmError(std::string(e.what()) + " in " + path.string());
  }
}

std::string encode_pgm(const GrayImage& img) {
  if (img.size() == 0) throw std::invalid_argument("pgm: cannot write an empty image");
  const GrayImage raw = img.to_raw();
  std::string out = "P5\n" + std::to_string(raw.width()) + " " + std::to_string(raw.height()) + "\n255\n";
  out.reserve(out.size() + raw.size());
  for (double v : raw.pixels()) {
    if (std::isnan(v)) throw std::invalid_argument("pgm: cannot write NaN pixel");
    // std::round rounds halves away from zero.
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(std::round(v), 0.0, 255.0))));
  }
  return out;
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  const std::string bytes = encode_pgm(img);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw PgmError("pgm: cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw PgmError("pgm: write failed for " + path.string());
}

}  // namespace fcaide

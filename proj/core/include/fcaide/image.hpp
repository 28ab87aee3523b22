#pragma once

#include <cstddef>
#include <vector>

#include "fcaide/tensor.hpp"

namespace fcaide {

enum class PixelScale { Raw255, Unit };

inline constexpr double kPixelPeak = 255.0;

/// Grayscale image, row-major. Raw255 images hold 8-bit-style intensities;
/// Unit images hold the same values divided by 255.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t height, std::size_t width, double fill = 0.0,
            PixelScale scale = PixelScale::Raw255);
  GrayImage(std::size_t height, std::size_t width, std::vector<double> pixels,
            PixelScale scale = PixelScale::Raw255);

  static GrayImage from_tensor(const Tensor& t, PixelScale scale);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }
  PixelScale scale() const { return scale_; }

  double& at(std::size_t r, std::size_t c) { return pixels_[r * width_ + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels_[r * width_ + c]; }
  std::vector<double>& pixels() { return pixels_; }
  const std::vector<double>& pixels() const { return pixels_; }

  GrayImage to_unit() const;
  GrayImage to_raw() const;
  GrayImage to_scale(PixelScale scale) const;
  Tensor to_tensor() const;

  GrayImage crop(std::size_t top, std::size_t left, std::size_t height, std::size_t width) const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> pixels_;
  PixelScale scale_ = PixelScale::Raw255;
};

}  // namespace fcaide

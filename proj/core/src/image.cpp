#include "fcaide/image.hpp"

#include <stdexcept>

namespace fcaide {

GrayImage::GrayImage(std::size_t height, std::size_t width, double fill, PixelScale scale)
    : height_(height), width_(width), pixels_(height * width, fill), scale_(scale) {
  if (height == 0 || width == 0) throw std::invalid_argument("GrayImage: dimensions must be >= 1");
}

GrayImage::GrayImage(std::size_t height, std::size_t width, std::vector<double> pixels,
                     PixelScale scale)
    : height_(height), width_(width), pixels_(std::move(pixels)), scale_(scale) {
  if (height == 0 || width == 0) throw std::invalid_argument("GrayImage: dimensions must be >= 1");
  if (pixels_.size() != height * width) throw std::invalid_argument("GrayImage: pixel count mismatch");
}

GrayImage GrayImage::from_tensor(const Tensor& t, PixelScale scale) {
  if (t.rank() != 2) throw std::invalid_argument("GrayImage::from_tensor: expected [H,W]");
  return GrayImage(t.extent(0), t.extent(1), t.values(), scale);
}

GrayImage GrayImage::to_unit() const {
  if (scale_ == PixelScale::Unit) return *this;
  GrayImage out(height_, width_, pixels_, PixelScale::Unit);
  for (double& v : out.pixels_) v /= kPixelPeak;
  return out;
}

GrayImage GrayImage::to_raw() const {
  if (scale_ == PixelScale::Raw255) return *this;
  GrayImage out(height_, width_, pixels_, PixelScale::Raw255);
  for (double& v : out.pixels_) v *= kPixelPeak;
  return out;
}

GrayImage GrayImage::to_scale(PixelScale scale) const {
  return scale == PixelScale::Unit ? to_unit() : to_raw();
}

Tensor GrayImage::to_tensor() const { return Tensor(Shape{height_, width_}, pixels_); }

GrayImage GrayImage::crop(std::size_t top, std::size_t left, std::size_t height,
                          std::size_t width) const {
  if (top + height > height_ || left + width > width_) {
    throw std::out_of_range("GrayImage::crop: window exceeds image");
  }
  GrayImage out(height, width, 0.0, scale_);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) out.at(r, c) = at(top + r, left + c);
  }
  return out;
}

}  // namespace fcaide

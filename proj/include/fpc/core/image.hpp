#pragma once

#include <cstddef>

#include "fpc/core/tensor.hpp"

namespace fpc {

/// Single-channel image with pixels in [0, 1], stored as a [height, width]
/// tensor.
class ImageGray {
 public:
  ImageGray(std::size_t height, std::size_t width, float fill = 0.0f);
  explicit ImageGray(Tensor pixels);

  std::size_t height() const { return pixels_.dim(0); }
  std::size_t width() const { return pixels_.dim(1); }

  float& at(std::size_t row, std::size_t col) { return pixels_.at(row, col); }
  float at(std::size_t row, std::size_t col) const {
    return pixels_.at(row, col);
  }

  const Tensor& pixels() const { return pixels_; }
  Tensor& pixels() { return pixels_; }

  friend bool operator==(const ImageGray& a, const ImageGray& b) {
    return a.pixels_ == b.pixels_;
  }

 private:
  Tensor pixels_;
};

}  // namespace fpc

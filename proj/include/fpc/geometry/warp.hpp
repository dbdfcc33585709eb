#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fpc/core/image.hpp"
#include "fpc/core/rng.hpp"
#include "fpc/geometry/homography.hpp"

namespace fpc {

enum class Interp { kBilinear, kBicubic };

class ValidityMask {
 public:
  ValidityMask(std::size_t height, std::size_t width, bool fill = false)
      : height_(height), width_(width), bits_(height * width, fill ? 1 : 0) {}

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  bool at(std::size_t r, std::size_t c) const { return bits_[r * width_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { bits_[r * width_ + c] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
  std::size_t count() const;
  std::size_t size() const { return bits_.size(); }
  std::span<const std::uint8_t> bits() const { return bits_; }

  ValidityMask operator&(const ValidityMask& other) const;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<std::uint8_t> bits_;
};

/// Inverse-mapping resampler for a fixed homography, stored as a sparse
/// linear operator. Output pixel (x, y) reads the input at h^-1 (x, y).
/// A pixel is valid iff every tap with non-zero weight lies inside the
/// input; invalid pixels read as 0.
class WarpSampler {
 public:
  WarpSampler(const Homography& h, std::size_t in_height, std::size_t in_width,
              std::size_t out_height, std::size_t out_width,
              Interp interp = Interp::kBilinear);

  const ValidityMask& validity() const { return valid_; }
  std::size_t in_size() const { return in_height_ * in_width_; }
  std::size_t out_size() const { return valid_.size(); }

  template <typename T>
  void apply(std::span<const T> in, std::span<T> out) const {
    for (std::size_t o = 0; o < out.size(); ++o) {
      T acc = T{0};
      for (std::uint32_t k = offsets_[o]; k < offsets_[o + 1]; ++k) {
        acc += static_cast<T>(weights_[k]) * in[index_[k]];
      }
      out[o] = acc;
    }
  }

  // Accumulates the adjoint: grad_in += A^T grad_out.
  template <typename T>
  void apply_transpose(std::span<const T> grad_out, std::span<T> grad_in) const {
    for (std::size_t o = 0; o < grad_out.size(); ++o) {
      const T g = grad_out[o];
      if (g == T{0}) continue;
      for (std::uint32_t k = offsets_[o]; k < offsets_[o + 1]; ++k) {
        grad_in[index_[k]] += static_cast<T>(weights_[k]) * g;
      }
    }
  }

 private:
  std::size_t in_height_;
  std::size_t in_width_;
  ValidityMask valid_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> index_;
  std::vector<double> weights_;
};

// Keys cubic convolution kernel with a = -0.5.
double keys_cubic(double x);

// Output has the input's size; pixels outside the validity mask are 0.
std::pair<ImageGray, ValidityMask> warp_image(const ImageGray& img,
                                              const Homography& h,
                                              Interp interp = Interp::kBilinear);

struct PhotometricConfig {
  double gain_min = 0.7;
  double gain_max = 1.3;
  double bias = 0.1;        // symmetric range
  double noise_sigma = 0.02;
  void validate() const;
};

// v -> clamp(gain * v + bias + noise) with gain and bias drawn once per
// image, then one normal draw per pixel.
void apply_photometric(ImageGray& img, const PhotometricConfig& cfg, Rng& rng);

}  // namespace fpc

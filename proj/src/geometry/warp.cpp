#include "fpc/geometry/warp.hpp"

#include <algorithm>
#include <cmath>

#include "fpc/core/error.hpp"

namespace fpc {

std::size_t ValidityMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

ValidityMask ValidityMask::operator&(const ValidityMask& other) const {
  if (height_ != other.height_ || width_ != other.width_) {
    throw Error(ErrorCode::kShapeMismatch, "validity mask shapes differ");
  }
  ValidityMask out(height_, width_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & other.bits_[i];
  return out;
}

double keys_cubic(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

WarpSampler::WarpSampler(const Homography& h, std::size_t in_height,
                         std::size_t in_width, std::size_t out_height,
                         std::size_t out_width, Interp interp)
    : in_height_(in_height), in_width_(in_width), valid_(out_height, out_width) {
  const Eigen::Matrix3d inv = hom_invert(h).matrix();
  const int support = interp == Interp::kBilinear ? 2 : 4;
  const int first = interp == Interp::kBilinear ? 0 : -1;
  const long iw = static_cast<long>(in_width);
  const long ih = static_cast<long>(in_height);

  offsets_.reserve(out_height * out_width + 1);
  offsets_.push_back(0);
  double wx[4], wy[4];
  for (std::size_t r = 0; r < out_height; ++r) {
    for (std::size_t c = 0; c < out_width; ++c) {
      const double x = static_cast<double>(c), y = static_cast<double>(r);
      const double w = inv(2, 0) * x + inv(2, 1) * y + inv(2, 2);
      bool ok = std::abs(w) > 1e-12;
      double sx = 0.0, sy = 0.0;
      if (ok) {
        sx = (inv(0, 0) * x + inv(0, 1) * y + inv(0, 2)) / w;
        sy = (inv(1, 0) * x + inv(1, 1) * y + inv(1, 2)) / w;
        ok = std::isfinite(sx) && std::isfinite(sy) && sx > -3.0 && sy > -3.0 &&
             sx < static_cast<double>(in_width) + 2.0 &&
             sy < static_cast<double>(in_height) + 2.0;
      }
      long x0 = 0, y0 = 0;
      if (ok) {
        x0 = static_cast<long>(std::floor(sx));
        y0 = static_cast<long>(std::floor(sy));
        const double fx = sx - static_cast<double>(x0);
        const double fy = sy - static_cast<double>(y0);
        for (int k = 0; k < support; ++k) {
          if (interp == Interp::kBilinear) {
            wx[k] = k == 0 ? 1.0 - fx : fx;
            wy[k] = k == 0 ? 1.0 - fy : fy;
          } else {
            wx[k] = keys_cubic(fx - (first + k));
            wy[k] = keys_cubic(fy - (first + k));
          }
        }
        for (int k = 0; k < support && ok; ++k) {
          const long xi = x0 + first + k, yi = y0 + first + k;
          if (wx[k] != 0.0 && (xi < 0 || xi >= iw)) ok = false;
          if (wy[k] != 0.0 && (yi < 0 || yi >= ih)) ok = false;
        }
      }
      if (ok) {
        for (int j = 0; j < support; ++j) {
          if (wy[j] == 0.0) continue;
          for (int i = 0; i < support; ++i) {
            if (wx[i] == 0.0) continue;
            const long xi = x0 + first + i, yi = y0 + first + j;
            index_.push_back(static_cast<std::uint32_t>(yi * iw + xi));
            weights_.push_back(wy[j] * wx[i]);
          }
        }
      }
      valid_.set(r, c, ok);
      offsets_.push_back(static_cast<std::uint32_t>(index_.size()));
    }
  }
}

std::pair<ImageGray, ValidityMask> warp_image(const ImageGray& img, const Homography& h,
                                              Interp interp) {
  WarpSampler sampler(h, img.height(), img.width(), img.height(), img.width(), interp);
  Tensor out({img.height(), img.width()});
  sampler.apply<float>(img.pixels().data(), out.data());
  if (interp == Interp::kBicubic) {
    for (float& v : out.data()) v = std::clamp(v, 0.0f, 1.0f);
  }
  return {ImageGray(std::move(out)), sampler.validity()};
}

void PhotometricConfig::validate() const {
  if (!(gain_min > 0.0 && gain_min <= gain_max) || !(bias >= 0.0) || !(noise_sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid photometric config");
  }
}

void apply_photometric(ImageGray& img, const PhotometricConfig& cfg, Rng& rng) {
  cfg.validate();
  const double gain = rng.uniform(cfg.gain_min, cfg.gain_max);
  const double bias = rng.uniform(-cfg.bias, cfg.bias);
  for (float& v : img.pixels().data()) {
    double x = gain * static_cast<double>(v) + bias;
    if (cfg.noise_sigma > 0.0) x += rng.normal(0.0, cfg.noise_sigma);
    v = static_cast<float>(std::clamp(x, 0.0, 1.0));
  }
}

}  // namespace fpc

#include "fpc/core/image.hpp"

#include <string>

namespace fpc {

ImageGray::ImageGray(std::size_t height, std::size_t width, float fill)
    : pixels_({height, width}, fill) {
  if (fill < 0.0f || fill > 1.0f) {
    throw Error(ErrorCode::kInvalidArgument, "image fill outside [0, 1]");
  }
}

ImageGray::ImageGray(Tensor pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rank() != 2) {
    throw Error(ErrorCode::kShapeMismatch,
                "image tensor must be rank 2, got " +
                    shape_to_string(pixels_.shape()));
  }
  for (float v : pixels_.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error(ErrorCode::kInvalidArgument, "image pixel outside [0, 1]");
    }
  }
}

}  // namespace fpc

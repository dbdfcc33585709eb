#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fpc {

/// A detected point. Coordinates and a confidence are all there is: matching
/// in this library never reads anything else.
struct Keypoint {
  float x = 0.0f;  // column, pixels
  float y = 0.0f;  // row, pixels
  float score = 0.0f;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

static_assert(sizeof(Keypoint) == 3 * sizeof(float));

std::string keypoints_csv(const std::vector<Keypoint>& kps);
std::vector<Keypoint> parse_keypoints_csv(std::string_view text);

std::vector<Keypoint> load_keypoints_csv(const std::string& path);
void save_keypoints_csv(const std::vector<Keypoint>& kps,
                        const std::string& path);

}  // namespace fpc

#include "fpc/core/keypoint.hpp"

#include <charconv>

#include "fpc/core/error.hpp"
#include "fpc/core/io.hpp"

namespace fpc {
namespace {

constexpr std::string_view kHeader = "x,y,score";

float parse_field(std::string_view field, std::size_t line) {
  float v = 0.0f;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kFormat, "keypoint CSV line " + std::to_string(line) +
                                        ": non-numeric field '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::string keypoints_csv(const std::vector<Keypoint>& kps) {
  std::string out(kHeader);
  out += "\n";
  for (const Keypoint& kp : kps) {
    out += format_float(kp.x) + "," + format_float(kp.y) + "," + format_float(kp.score) + "\n";
  }
  return out;
}

std::vector<Keypoint> parse_keypoints_csv(std::string_view text) {
  std::vector<Keypoint> kps;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!seen_header) {
      if (line != kHeader) {
        throw Error(ErrorCode::kFormat, "keypoint CSV must start with header 'x,y,score'");
      }
      seen_header = true;
      continue;
    }
    if (line.empty()) continue;
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos) {
      throw Error(ErrorCode::kFormat,
                  "keypoint CSV line " + std::to_string(line_no) + ": expected 3 fields");
    }
    Keypoint kp;
    kp.x = parse_field(line.substr(0, c1), line_no);
    kp.y = parse_field(line.substr(c1 + 1, c2 - c1 - 1), line_no);
    kp.score = parse_field(line.substr(c2 + 1), line_no);
    if (!(kp.score >= 0.0f && kp.score <= 1.0f)) {
      throw Error(ErrorCode::kFormat,
                  "keypoint CSV line " + std::to_string(line_no) + ": score outside [0, 1]");
    }
    kps.push_back(kp);
  }
  if (!seen_header) {
    throw Error(ErrorCode::kFormat, "keypoint CSV must start with header 'x,y,score'");
  }
  return kps;
}

std::vector<Keypoint> load_keypoints_csv(const std::string& path) {
  return parse_keypoints_csv(read_file(path));
}

void save_keypoints_csv(const std::vector<Keypoint>& kps, const std::string& path) {
  write_file(path, keypoints_csv(kps));
}

}  // namespace fpc

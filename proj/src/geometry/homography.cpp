#include "fpc/geometry/homography.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "fpc/core/error.hpp"
#include "fpc/core/io.hpp"

namespace fpc {

Homography::Homography(const Eigen::Matrix3d& m) : m_(m) {
  if (!m_.allFinite()) {
    throw Error(ErrorCode::kSingular, "homography has non-finite entries");
  }
  if (std::abs(m_(2, 2)) > 1e-12) m_ /= m_(2, 2);
  if (!(std::abs(m_.determinant()) > 1e-12)) {
    throw Error(ErrorCode::kSingular, "homography is singular");
  }
}

Homography Homography::translation(double tx, double ty) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return Homography(m);
}

Eigen::Vector2d hom_apply(const Homography& h, const Eigen::Vector2d& pt) {
  const Eigen::Matrix3d& m = h.matrix();
  const double w = m(2, 0) * pt.x() + m(2, 1) * pt.y() + m(2, 2);
  if (!(std::abs(w) > 1e-12)) {
    throw Error(ErrorCode::kPointAtInfinity, "point maps to infinity");
  }
  return {(m(0, 0) * pt.x() + m(0, 1) * pt.y() + m(0, 2)) / w,
          (m(1, 0) * pt.x() + m(1, 1) * pt.y() + m(1, 2)) / w};
}

Homography hom_invert(const Homography& h) {
  Eigen::FullPivLU<Eigen::Matrix3d> lu(h.matrix());
  if (!lu.isInvertible()) throw Error(ErrorCode::kSingular, "homography is singular");
  return Homography(lu.inverse());
}

Homography hom_compose(const Homography& a, const Homography& b) {
  return Homography(a.matrix() * b.matrix());
}

Homography homography_from_corners(const std::array<Eigen::Vector2d, 4>& src,
                                   const std::array<Eigen::Vector2d, 4>& dst) {
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x(), y = src[i].y();
    const double u = dst[i].x(), v = dst[i].y();
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kDegenerate, "corner configuration is degenerate");
  }
  const Eigen::Matrix<double, 8, 1> s = lu.solve(b);
  Eigen::Matrix3d m;
  m << s(0), s(1), s(2), s(3), s(4), s(5), s(6), s(7), 1.0;
  return Homography(m);
}

std::array<Eigen::Vector2d, 4> image_corners(std::size_t width, std::size_t height) {
  const double x1 = static_cast<double>(width) - 1.0;
  const double y1 = static_cast<double>(height) - 1.0;
  return {Eigen::Vector2d(0, 0), Eigen::Vector2d(x1, 0), Eigen::Vector2d(0, y1),
          Eigen::Vector2d(x1, y1)};
}

double corner_error(const Homography& h_gt, const Homography& h_est,
                    std::size_t width, std::size_t height) {
  double sum = 0.0;
  for (const Eigen::Vector2d& c : image_corners(width, height)) {
    sum += (hom_apply(h_gt, c) - hom_apply(h_est, c)).norm();
  }
  return sum / 4.0;
}

std::string format_hom(const Homography& h) {
  std::string out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out += format_double(h(r, c));
      out += c == 2 ? "\n" : " ";
    }
  }
  return out;
}

Homography parse_hom(const std::string& text) {
  std::istringstream in(text);
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) {
    std::string tok;
    if (!(in >> tok)) throw Error(ErrorCode::kFormat, ".hom needs 9 values");
    try {
      std::size_t used = 0;
      m(i / 3, i % 3) = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormat, ".hom value '" + tok + "' is not a number");
    }
  }
  std::string extra;
  if (in >> extra) throw Error(ErrorCode::kFormat, ".hom has more than 9 values");
  return Homography(m);
}

Homography load_hom(const std::string& path) { return parse_hom(read_file(path)); }

void save_hom(const Homography& h, const std::string& path) {
  write_file(path, format_hom(h));
}

}  // namespace fpc

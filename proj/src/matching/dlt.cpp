#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "fpc/core/error.hpp"
#include "fpc/matching/matching.hpp"

namespace fpc {
namespace {

// Similarity taking the points to zero mean and mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(std::span<const PointPair> pairs, bool use_a) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const PointPair& p : pairs) mean += use_a ? p.a : p.b;
  mean /= static_cast<double>(pairs.size());
  double dist = 0.0;
  for (const PointPair& p : pairs) dist += ((use_a ? p.a : p.b) - mean).norm();
  dist /= static_cast<double>(pairs.size());
  if (!(dist > 1e-12)) throw Error(ErrorCode::kDegenerate, "DLT points coincide");
  const double s = std::sqrt(2.0) / dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
  return t;
}

bool has_collinear_triple(const std::vector<Eigen::Vector2d>& pts) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      for (std::size_t k = j + 1; k < pts.size(); ++k) {
        const Eigen::Vector2d u = pts[j] - pts[i], v = pts[k] - pts[i];
        if (std::abs(u.x() * v.y() - u.y() * v.x()) < 1e-9) return true;
      }
    }
  }
  return false;
}

}  // namespace

Homography dlt_homography(std::span<const PointPair> pairs) {
  const std::size_t n = pairs.size();
  if (n < 4) {
    throw Error(ErrorCode::kInsufficientData, "DLT needs at least 4 correspondences");
  }
  const Eigen::Matrix3d ta = normalizing_transform(pairs, true);
  const Eigen::Matrix3d tb = normalizing_transform(pairs, false);

  std::vector<Eigen::Vector2d> na(n), nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    na[i] = (ta * pairs[i].a.homogeneous()).hnormalized();
    nb[i] = (tb * pairs[i].b.homogeneous()).hnormalized();
  }
  if (n == 4 && (has_collinear_triple(na) || has_collinear_triple(nb))) {
    throw Error(ErrorCode::kDegenerate, "DLT sample has three collinear points");
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<long>(2 * n), 9);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = na[i].x(), y = na[i].y();
    const double u = nb[i].x(), v = nb[i].y();
    const long r = static_cast<long>(2 * i);
    a.row(r) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    a.row(r + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  // Rank 8 is required; sv(7) is the smallest kept direction.
  if (sv.size() < 8 || !(sv(7) > 1e-10 * sv(0))) {
    throw Error(ErrorCode::kDegenerate, "DLT system has rank < 8");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d m = tb.inverse() * hn * ta;
  try {
    return Homography(m);
  } catch (const Error&) {
    throw Error(ErrorCode::kDegenerate, "DLT produced a singular homography");
  }
}

}  // namespace fpc

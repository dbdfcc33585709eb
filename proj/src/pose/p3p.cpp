#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "fpc/core/error.hpp"
#include "fpc/pose/pose.hpp"

namespace fpc {
namespace {

// Polynomials in x, coefficients ascending, degree <= 4.
using Poly = std::array<double, 5>;

Poly mul(const Poly& f, const Poly& g) {
  Poly h{};
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; i + j < 5; ++j) h[i + j] += f[i] * g[j];
  }
  return h;
}

Poly sub(const Poly& f, const Poly& g) {
  Poly h{};
  for (int i = 0; i < 5; ++i) h[i] = f[i] - g[i];
  return h;
}

double eval(const Poly& f, double x) {
  double v = 0.0;
  for (int i = 4; i >= 0; --i) v = v * x + f[i];
  return v;
}

// Roots of c2 y^2 + c1 y + c0, real only.
std::vector<double> quadratic_roots(double c2, double c1, double c0) {
  const double scale = std::max({std::abs(c2), std::abs(c1), std::abs(c0)});
  if (scale == 0.0) return {};
  if (std::abs(c2) <= 1e-12 * scale) {
    if (std::abs(c1) <= 1e-12 * scale) return {};
    return {-c0 / c1};
  }
  double disc = c1 * c1 - 4.0 * c2 * c0;
  if (disc < 0.0) {
    if (disc > -1e-10 * c1 * c1 - 1e-14 * scale * scale) {
      disc = 0.0;
    } else {
      return {};
    }
  }
  const double s = std::sqrt(disc);
  const double t = -0.5 * (c1 + (c1 >= 0.0 ? s : -s));
  if (t == 0.0) return {0.0};
  return {t / c2, c0 / t};
}

// Rigid transform (no scale) taking src[i] to dst[i] in the least-squares sense.
Pose kabsch(const std::array<Eigen::Vector3d, 3>& src, const std::array<Eigen::Vector3d, 3>& dst) {
  Eigen::Vector3d cs = Eigen::Vector3d::Zero(), cd = Eigen::Vector3d::Zero();
  for (int i = 0; i < 3; ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= 3.0;
  cd /= 3.0;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i) cov += (src[i] - cs) * (dst[i] - cd).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
  Pose pose;
  pose.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  pose.translation = cd - pose.rotation * cs;
  return pose;
}

double bearing_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace

std::vector<double> real_polynomial_roots(const std::vector<double>& coeffs) {
  std::size_t deg = coeffs.size();
  if (deg == 0) return {};
  --deg;
  double scale = 0.0;
  for (double c : coeffs) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return {};
  while (deg > 0 && std::abs(coeffs[deg]) <= 1e-14 * scale) --deg;
  if (deg == 0) return {};

  const long n = static_cast<long>(deg);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (long i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (long i = 0; i < n; ++i) {
    companion(i, n - 1) = -coeffs[static_cast<std::size_t>(i)] / coeffs[deg];
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  std::vector<double> roots;
  for (long i = 0; i < n; ++i) {
    const std::complex<double> z = es.eigenvalues()(i);
    // Double roots come back as a conjugate pair split by ~sqrt(machine eps),
    // so the realness test has to be loose; callers verify candidates anyway.
    if (std::abs(z.imag()) > 1e-6 * std::max(1.0, std::abs(z.real()))) continue;
    double x = z.real();
    double f = 0.0, df = 0.0;
    for (std::size_t k = deg + 1; k-- > 0;) {
      df = df * x + f;
      f = f * x + coeffs[k];
    }
    if (df != 0.0 && std::isfinite(f / df)) x -= f / df;
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());

  // A double root of f is a simple root of f'; eigenvalues only place it to
  // ~1e-8, so merge close pairs and polish on the derivative instead.
  std::vector<double> merged;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (i + 1 < roots.size() && roots[i + 1] - roots[i] <= 1e-5 * (1.0 + std::abs(roots[i]))) {
      double x = 0.5 * (roots[i] + roots[i + 1]);
      for (int it = 0; it < 3; ++it) {
        double f = 0.0, df = 0.0, ddf = 0.0;
        for (std::size_t k = deg + 1; k-- > 0;) {
          ddf = ddf * x + 2.0 * df;
          df = df * x + f;
          f = f * x + coeffs[k];
        }
        if (ddf == 0.0 || !std::isfinite(df / ddf)) break;
        x -= df / ddf;
      }
      merged.push_back(x);
      ++i;
    } else {
      merged.push_back(roots[i]);
    }
  }
  return merged;
}

std::vector<Pose> p3p_solve(const std::array<Eigen::Vector3d, 3>& world,
                            const std::array<Eigen::Vector3d, 3>& bearings) {
  for (const Eigen::Vector3d& b : bearings) {
    if (std::abs(b.norm() - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument, "P3P bearings must be unit vectors");
    }
  }
  const Eigen::Vector3d& pa = world[0];
  const Eigen::Vector3d& pb = world[1];
  const Eigen::Vector3d& pc = world[2];
  const double ab2 = (pa - pb).squaredNorm();
  const double ac2 = (pa - pc).squaredNorm();
  const double bc2 = (pb - pc).squaredNorm();
  if ((pb - pa).cross(pc - pa).norm() <= 1e-9 * std::sqrt(ab2 * ac2)) {
    throw Error(ErrorCode::kDegenerate, "P3P world points are collinear");
  }

  // Unknowns: x = |PA|/|PC|, y = |PB|/|PC|. With p, q, r twice the cosines
  // of the bearing angles (BC, AC, AB) the law of cosines gives
  //   (1 - a) y^2 + (a r x - p) y + (1 - a x^2) = 0
  //   -b y^2 + (b r x) y + ((1 - b) x^2 - q x + 1) = 0
  // with a = |BC|^2/|AB|^2, b = |AC|^2/|AB|^2.
  const double p = 2.0 * bearings[1].dot(bearings[2]);
  const double q = 2.0 * bearings[0].dot(bearings[2]);
  const double r = 2.0 * bearings[0].dot(bearings[1]);
  const double a = bc2 / ab2;
  const double b = ac2 / ab2;

  const Poly a1{1.0 - a, 0, 0, 0, 0};
  const Poly b1{-p, a * r, 0, 0, 0};
  const Poly c1{1.0, 0, -a, 0, 0};
  const Poly a2{-b, 0, 0, 0, 0};
  const Poly b2{0, b * r, 0, 0, 0};
  const Poly c2{1.0, -q, 1.0 - b, 0, 0};

  // Sylvester resultant in y: a quartic in x.
  const Poly ac = sub(mul(a1, c2), mul(a2, c1));
  const Poly ab = sub(mul(a1, b2), mul(a2, b1));
  const Poly bc = sub(mul(b1, c2), mul(b2, c1));
  const Poly quartic = sub(mul(ac, ac), mul(ab, bc));

  const std::vector<double> xs =
      real_polynomial_roots(std::vector<double>(quartic.begin(), quartic.end()));

  std::vector<Pose> poses;
  for (double x : xs) {
    if (!(x > 0.0)) continue;
    const double e1_2 = eval(a1, x), e1_1 = eval(b1, x), e1_0 = eval(c1, x);
    const double e2_2 = eval(a2, x), e2_1 = eval(b2, x), e2_0 = eval(c2, x);
    std::vector<double> ys = quadratic_roots(e1_2, e1_1, e1_0);
    for (double y : quadratic_roots(e2_2, e2_1, e2_0)) ys.push_back(y);
    std::sort(ys.begin(), ys.end());

    double last_y = -1.0;
    for (double y : ys) {
      if (!(y > 0.0)) continue;
      if (last_y >= 0.0 && std::abs(y - last_y) <= 1e-9 * (1.0 + y)) continue;
      last_y = y;
      // No algebraic residual filter here: near symmetric configurations one
      // equation degenerates and its residual says nothing. The bearing check
      // below rejects y values that only solve one of the two.

      const double v = x * x + y * y - x * y * r;
      if (!(v > 0.0)) continue;
      const double dc = std::sqrt(ab2 / v);
      const std::array<Eigen::Vector3d, 3> cam_pts = {bearings[0] * (x * dc),
                                                      bearings[1] * (y * dc), bearings[2] * dc};
      const Pose pose = kabsch(world, cam_pts);

      bool consistent = true;
      for (int i = 0; i < 3 && consistent; ++i) {
        const Eigen::Vector3d pc_i = pose.rotation * world[i] + pose.translation;
        consistent = bearing_angle(pc_i, bearings[i]) <= 1e-6;
      }
      if (!consistent) continue;
      const bool duplicate = std::any_of(poses.begin(), poses.end(), [&](const Pose& o) {
        return rotation_error(o.rotation, pose.rotation) < 1e-9 &&
               (o.translation - pose.translation).norm() < 1e-9 * (1.0 + pose.translation.norm());
      });
      if (!duplicate) poses.push_back(pose);
    }
  }
  return poses;
}

}  // namespace fpc

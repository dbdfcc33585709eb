#include "fpc/evalharness/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "fpc/core/error.hpp"
#include "fpc/core/io.hpp"
#include "fpc/geometry/warp.hpp"

namespace fpc {
namespace {

using Vec2 = Eigen::Vector2d;
constexpr int kSuper = 4;

// Coverage of a shape over one pixel; `inside` returns the shape value at
// a point or a negative number for "not covered".
template <typename Inside>
void paint(std::vector<double>& canvas, std::size_t width, std::size_t height, double x0,
           double y0, double x1, double y1, Inside inside) {
  const long c0 = std::max(0L, static_cast<long>(std::floor(x0)) - 1);
  const long r0 = std::max(0L, static_cast<long>(std::floor(y0)) - 1);
  const long c1 = std::min(static_cast<long>(width) - 1, static_cast<long>(std::ceil(x1)) + 1);
  const long r1 = std::min(static_cast<long>(height) - 1, static_cast<long>(std::ceil(y1)) + 1);
  for (long r = r0; r <= r1; ++r) {
    for (long c = c0; c <= c1; ++c) {
      double covered = 0.0, value = 0.0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double px = static_cast<double>(c) - 0.5 + (sx + 0.5) / kSuper;
          const double py = static_cast<double>(r) - 0.5 + (sy + 0.5) / kSuper;
          const double v = inside(px, py);
          if (v >= 0.0) {
            covered += 1.0;
            value += v;
          }
        }
      }
      if (covered == 0.0) continue;
      const double frac = covered / (kSuper * kSuper);
      double& dst = canvas[static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)];
      dst = (1.0 - frac) * dst + value / (kSuper * kSuper);
    }
  }
}

double cross(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
}

// Convex polygon in either winding.
bool in_convex(const std::vector<Vec2>& poly, double x, double y) {
  const Vec2 p(x, y);
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const double s = cross(poly[i], poly[(i + 1) % poly.size()], p);
    pos = pos || s > 0;
    neg = neg || s < 0;
  }
  return !(pos && neg);
}

void paint_polygon(std::vector<double>& canvas, std::size_t w, std::size_t h,
                   const std::vector<Vec2>& poly, double value) {
  double x0 = poly[0].x(), x1 = x0, y0 = poly[0].y(), y1 = y0;
  for (const Vec2& v : poly) {
    x0 = std::min(x0, v.x());
    x1 = std::max(x1, v.x());
    y0 = std::min(y0, v.y());
    y1 = std::max(y1, v.y());
  }
  paint(canvas, w, h, x0, y0, x1, y1,
        [&](double x, double y) { return in_convex(poly, x, y) ? value : -1.0; });
}

double min_interior_angle(const std::vector<Vec2>& poly) {
  double best = M_PI;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[(i + poly.size() - 1) % poly.size()] - poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()] - poly[i];
    best = std::min(best, std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)));
  }
  return best;
}

bool convex_ok(const std::vector<Vec2>& poly) {
  double sign = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const double s = cross(poly[i], poly[(i + 1) % poly.size()], poly[(i + 2) % poly.size()]);
    if (std::abs(s) < 1e-9) return false;
    if (sign == 0.0) sign = s;
    if (s * sign < 0) return false;
  }
  return true;
}

double shape_value(Rng& rng, double background) {
  // Keep a clear contrast with the local background.
  return background < 0.5 ? rng.uniform(0.7, 0.95) : rng.uniform(0.02, 0.2);
}

struct Cell {
  double x0, y0, x1, y1;
};

}  // namespace

SynthScene synth_scene(Rng& rng, std::size_t width, std::size_t height, std::size_t n_shapes) {
  if (n_shapes == 0) throw Error(ErrorCode::kInvalidArgument, "synth_scene needs n_shapes >= 1");
  if (width < 16 || height < 16) throw Error(ErrorCode::kInvalidArgument, "scene too small");
  const double w = static_cast<double>(width), h = static_cast<double>(height);

  // Shaded background: a gentle linear ramp.
  const double base = rng.uniform(0.25, 0.45);
  const double gx = rng.uniform(-0.1, 0.1), gy = rng.uniform(-0.1, 0.1);
  std::vector<double> canvas(width * height);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      canvas[r * width + c] = base + gx * (static_cast<double>(c) / w - 0.5) +
                              gy * (static_cast<double>(r) / h - 0.5);
    }
  }

  const std::size_t cols =
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_shapes) * w / h)));
  const std::size_t rows = (n_shapes + cols - 1) / cols;
  std::vector<std::size_t> order(rows * cols);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

  const double margin = 4.0;
  const double cw = (w - 2 * margin) / static_cast<double>(cols);
  const double ch = (h - 2 * margin) / static_cast<double>(rows);
  SynthScene scene{ImageGray(height, width), {}, {}};
  for (std::size_t s = 0; s < n_shapes; ++s) {
    const std::size_t cell = order[s];
    const double pad = 0.12 * std::min(cw, ch);
    const Cell box{margin + static_cast<double>(cell % cols) * cw + pad,
                   margin + static_cast<double>(cell / cols) * ch + pad,
                   margin + static_cast<double>(cell % cols + 1) * cw - pad,
                   margin + static_cast<double>(cell / cols + 1) * ch - pad};
    const double bx = box.x1 - box.x0, by = box.y1 - box.y0;
    const double bg = canvas[static_cast<std::size_t>((box.y0 + box.y1) / 2) * width +
                             static_cast<std::size_t>((box.x0 + box.x1) / 2)];
    const std::uint64_t kind = rng.uniform_index(3);
    if (kind == 2 && std::min(bx, by) >= 8.0) {
      // Checkerboard, possibly rotated.
      const std::size_t k = 2 + rng.uniform_index(2);
      const double side = std::min(bx, by) * rng.uniform(0.75, 0.95) / std::sqrt(2.0);
      const double angle = rng.uniform(-0.6, 0.6);
      const Vec2 center((box.x0 + box.x1) / 2, (box.y0 + box.y1) / 2);
      const Vec2 u(std::cos(angle), std::sin(angle)), v(-std::sin(angle), std::cos(angle));
      const double sq = side / static_cast<double>(k);
      const Vec2 origin = center - 0.5 * side * (u + v);
      const double dark = rng.uniform(0.02, 0.15), light = rng.uniform(0.75, 0.95);
      std::vector<Vec2> outline{origin, origin + side * u, origin + side * (u + v),
                                origin + side * v};
      double x0 = w, x1 = 0, y0 = h, y1 = 0;
      for (const Vec2& p : outline) {
        x0 = std::min(x0, p.x());
        x1 = std::max(x1, p.x());
        y0 = std::min(y0, p.y());
        y1 = std::max(y1, p.y());
      }
      paint(canvas, width, height, x0, y0, x1, y1, [&](double x, double y) {
        const Vec2 d = Vec2(x, y) - origin;
        const double a = d.dot(u), b = d.dot(v);
        if (a < 0 || b < 0 || a >= side || b >= side) return -1.0;
        const long ia = static_cast<long>(a / sq), ib = static_cast<long>(b / sq);
        return ((ia + ib) % 2 == 0) ? dark : light;
      });
      for (std::size_t i = 0; i <= k; ++i) {
        for (std::size_t j = 0; j <= k; ++j) {
          scene.corners.push_back(origin + static_cast<double>(i) * sq * u +
                                  static_cast<double>(j) * sq * v);
        }
      }
      scene.shape_corners.push_back((k + 1) * (k + 1));
      continue;
    }
    const std::size_t nv = kind == 0 ? 3 : 4;
    std::vector<Vec2> poly;
    for (int attempt = 0; attempt < 50; ++attempt) {
      poly.clear();
      if (nv == 3) {
        for (int i = 0; i < 3; ++i) {
          poly.emplace_back(rng.uniform(box.x0, box.x1), rng.uniform(box.y0, box.y1));
        }
      } else {
        // Jittered rectangle corners, kept in their own quadrant so the
        // quad stays convex.
        const double jx = 0.3 * bx, jy = 0.3 * by;
        poly.emplace_back(box.x0 + rng.uniform(0, jx), box.y0 + rng.uniform(0, jy));
        poly.emplace_back(box.x1 - rng.uniform(0, jx), box.y0 + rng.uniform(0, jy));
        poly.emplace_back(box.x1 - rng.uniform(0, jx), box.y1 - rng.uniform(0, jy));
        poly.emplace_back(box.x0 + rng.uniform(0, jx), box.y1 - rng.uniform(0, jy));
      }
      double area = 0.0;
      for (std::size_t i = 0; i < poly.size(); ++i) {
        area += 0.5 * (poly[i].x() * poly[(i + 1) % nv].y() - poly[(i + 1) % nv].x() * poly[i].y());
      }
      if (convex_ok(poly) && std::abs(area) > 0.2 * bx * by && min_interior_angle(poly) > 0.5) {
        break;
      }
      if (attempt == 49) {
        poly = {Vec2(box.x0, box.y0), Vec2(box.x1, box.y0), Vec2(box.x0, box.y1)};
        if (nv == 4) poly.insert(poly.begin() + 2, Vec2(box.x1, box.y1));
      }
    }
    paint_polygon(canvas, width, height, poly, shape_value(rng, bg));
    scene.corners.insert(scene.corners.end(), poly.begin(), poly.end());
    scene.shape_corners.push_back(poly.size());
  }
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    scene.image.pixels()[i] = static_cast<float>(std::clamp(canvas[i], 0.0, 1.0));
  }
  return scene;
}

SynthScene synth_square(std::size_t width, std::size_t height, double x0, double y0,
                        double side) {
  std::vector<double> canvas(width * height, 0.0);
  const std::vector<Vec2> poly{Vec2(x0, y0), Vec2(x0 + side, y0), Vec2(x0 + side, y0 + side),
                               Vec2(x0, y0 + side)};
  paint_polygon(canvas, width, height, poly, 1.0);
  SynthScene scene{ImageGray(height, width), poly, {4}};
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    scene.image.pixels()[i] = static_cast<float>(canvas[i]);
  }
  return scene;
}

PairSample make_pair(const ImageGray& img, const HomographySamplerConfig& warp,
                     const PhotometricConfig& photo, Rng& rng) {
  photo.validate();
  const Homography h = sample_homography(warp, img.width(), img.height(), rng);
  auto [warped, valid] = warp_image(img, h, Interp::kBilinear);
  apply_photometric(warped, photo, rng);
  PairSample p{"", "all", img, std::move(warped), h, {}};
  return p;
}

std::vector<PairSample> synthetic_pairs(std::size_t count, std::uint64_t seed, std::size_t width,
                                        std::size_t height, std::size_t n_shapes,
                                        const HomographySamplerConfig& warp,
                                        const PhotometricConfig& photo) {
  std::vector<PairSample> out;
  const Rng root(seed);
  for (std::size_t i = 0; i < count; ++i) {
    Rng scene_rng = root.child(2 * i);
    Rng pair_rng = root.child(2 * i + 1);
    SynthScene scene = synth_scene(scene_rng, width, height, n_shapes);
    PairSample p = make_pair(scene.image, warp, photo, pair_rng);
    char id[32];
    std::snprintf(id, sizeof id, "synth_%04zu", i);
    p.id = id;
    p.corners_a = std::move(scene.corners);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PairSample> load_pairs(const std::string& dir) {
  const std::filesystem::path root(dir);
  std::istringstream in(read_file((root / "pairs.txt").string()));
  std::vector<PairSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string id, a, b, hom, split;
    if (!(ls >> id)) continue;
    if (!(ls >> a >> b >> hom)) {
      throw Error(ErrorCode::kFormat,
                  "pairs.txt line " + std::to_string(lineno) + ": expected id, two images, .hom");
    }
    if (!(ls >> split)) split = "all";
    PairSample p{id, split, load_image_pgm((root / a).string()),
                 load_image_pgm((root / b).string()), load_hom((root / hom).string()), {}};
    if (p.image_a.height() != p.image_b.height() || p.image_a.width() != p.image_b.width()) {
      throw Error(ErrorCode::kShapeMismatch, "pair " + id + ": images differ in size");
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) throw Error(ErrorCode::kFormat, "pairs.txt lists no pairs");
  return out;
}

}  // namespace fpc

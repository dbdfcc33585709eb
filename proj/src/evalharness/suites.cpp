#include "fpc/evalharness/suites.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "fpc/core/error.hpp"
#include "fpc/core/io.hpp"

namespace fpc {
namespace {

std::string eps_list(const std::vector<double>& eps) {
  std::string s;
  for (double e : eps) s += (s.empty() ? "" : " ") + format_double(e);
  return s;
}

bool inside(const Eigen::Vector2d& p, std::size_t w, std::size_t h) {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= static_cast<double>(w) - 1.0 &&
         p.y() <= static_cast<double>(h) - 1.0;
}

}  // namespace

PairDetector per_image(ImageDetector det) {
  return [det = std::move(det)](const PairSample& p) {
    return KeypointPair{det(p.image_a), det(p.image_b)};
  };
}

ImageDetector harris_detector(const HarrisConfig& cfg) {
  return [cfg](const ImageGray& img) { return harris_keypoints(img, cfg); };
}

ImageDetector learned_detector(const DetectorParams& params, double q, double nms_radius,
                               std::size_t max_k) {
  return [params, q, nms_radius, max_k](const ImageGray& img) {
    return extract_keypoints(detector_forward(params, img), q, nms_radius, max_k);
  };
}

KeypointPair oracle_keypoints(const PairSample& pair) {
  KeypointPair out;
  const std::size_t w = pair.image_b.width(), h = pair.image_b.height();
  for (const Eigen::Vector2d& c : pair.corners_a) {
    if (!inside(c, pair.image_a.width(), pair.image_a.height())) continue;
    out.first.push_back({static_cast<float>(c.x()), static_cast<float>(c.y()), 1.0f});
    Eigen::Vector2d m;
    try {
      m = hom_apply(pair.h_gt, c);
    } catch (const Error&) {
      continue;
    }
    if (inside(m, w, h)) {
      out.second.push_back({static_cast<float>(m.x()), static_cast<float>(m.y()), 1.0f});
    }
  }
  return out;
}

std::vector<Keypoint> apply_budget(std::vector<Keypoint> kps, std::size_t budget) {
  if (kps.size() <= budget) return kps;
  std::stable_sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  kps.resize(budget);
  return kps;
}

EvalReport eval_repeatability_suite(const PairDetector& det, const std::vector<PairSample>& pairs,
                                    const RepeatabilitySuiteConfig& cfg) {
  EvalReport rep;
  rep.notes = {{"suite", "repeatability"},
               {"eps", eps_list(cfg.eps)},
               {"budget", std::to_string(cfg.budget)}};
  for (const PairSample& p : pairs) {
    auto [ka, kb] = det(p);
    ka = apply_budget(std::move(ka), cfg.budget);
    kb = apply_budget(std::move(kb), cfg.budget);
    for (double eps : cfg.eps) {
      ReportRow row{p.id, p.split, "repeatability", eps, 0.0, true};
      if (ka.empty() || kb.empty()) {
        row.defined = false;
      } else {
        try {
          row.value = repeatability(ka, kb, p.h_gt, eps, p.image_b.width(), p.image_b.height());
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kUndefinedMetric) throw;
          row.defined = false;
        }
      }
      rep.add(row);
    }
  }
  rep.finalize();
  return rep;
}

std::size_t match_payload_bytes(std::size_t n_matches) {
  return n_matches * 2 * sizeof(Keypoint);
}

EvalReport eval_homography_suite(const PairDetector& det, const std::vector<PairSample>& pairs,
                                 const HomographySuiteConfig& cfg) {
  EvalReport rep;
  rep.notes = {{"suite", "homography"},
               {"eps", eps_list(cfg.eps)},
               {"budget", std::to_string(cfg.budget)},
               {"match_distance", format_double(cfg.match_distance)},
               {"mutual", cfg.mutual ? "true" : "false"},
               {"prewarp", cfg.prewarp == Prewarp::kGroundTruth ? "gt" : "none"},
               {"ransac_failure", "counted as incorrect"}};
  for (const PairSample& p : pairs) {
    auto [ka, kb] = det(p);
    ka = apply_budget(std::move(ka), cfg.budget);
    kb = apply_budget(std::move(kb), cfg.budget);
    const std::optional<Homography> pre =
        cfg.prewarp == Prewarp::kGroundTruth ? std::optional<Homography>(p.h_gt) : std::nullopt;
    const std::vector<Match> matches = spatial_match(ka, kb, cfg.match_distance, cfg.mutual, pre);
    const std::vector<PointPair> pts = matched_points(ka, kb, matches);
    std::optional<Homography> est;
    try {
      est = ransac_homography(pts, cfg.ransac).h;
    } catch (const Error&) {
      est.reset();
    }
    const std::size_t w = p.image_b.width(), h = p.image_b.height();
    for (double eps : cfg.eps) {
      bool ok = false;
      if (est) {
        try {
          ok = homography_correct(p.h_gt, *est, eps, w, h);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kPointAtInfinity) throw;
        }
      }
      rep.add({p.id, p.split, "homography_correct", eps, ok ? 1.0 : 0.0, true});
    }
    rep.add({p.id, p.split, "matches", 0.0, static_cast<double>(matches.size()), true});
    rep.add({p.id, p.split, "payload_bytes", 0.0,
             static_cast<double>(match_payload_bytes(matches.size())), true});
  }
  rep.finalize();
  return rep;
}

StereoScene synth_stereo_scene(const PoseSuiteConfig& cfg, Rng& rng) {
  cfg.cam.validate();
  StereoScene s;
  Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
  if (axis.norm() < 1e-9) axis = Eigen::Vector3d::UnitY();
  const double angle = rng.uniform(0.0, 0.15);
  s.relative.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  s.relative.translation =
      Eigen::Vector3d(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
  const double w = 2 * cfg.cam.cx, h = 2 * cfg.cam.cy;
  auto in_view = [&](const Eigen::Vector2d& p) {
    return p.x() >= 0 && p.y() >= 0 && p.x() < w && p.y() < h;
  };
  const Eigen::Vector3d shift(cfg.cam.baseline, 0, 0);
  std::size_t tries = 0;
  while (s.left.size() < cfg.points) {
    if (++tries > 200 * cfg.points) {
      throw Error(ErrorCode::kDegenerate, "could not place enough visible stereo points");
    }
    const Eigen::Vector3d x(rng.uniform(-6, 6), rng.uniform(-4, 4), rng.uniform(4, 25));
    const Eigen::Vector3d xn = s.relative.rotation * x + s.relative.translation;
    if (xn.z() < 1.0) continue;
    const Eigen::Vector2d l = project(x, cfg.cam), r = project(x - shift, cfg.cam),
                          n = project(xn, cfg.cam);
    if (!in_view(l) || !in_view(r) || !in_view(n)) continue;
    s.left.push_back(l);
    s.right.push_back(r);
    s.next.push_back(n);
  }
  for (std::size_t i = 0; i < s.left.size(); ++i) {
    if (cfg.noise_px > 0.0) {
      for (auto* v : {&s.left[i], &s.right[i], &s.next[i]}) {
        v->x() += rng.normal(0.0, cfg.noise_px);
        v->y() += rng.normal(0.0, cfg.noise_px);
      }
    }
    if (cfg.outlier_fraction > 0.0 && rng.uniform() < cfg.outlier_fraction) {
      s.next[i] = Eigen::Vector2d(rng.uniform(0, w), rng.uniform(0, h));
    }
  }
  return s;
}

std::vector<StereoScene> synth_stereo_scenes(const PoseSuiteConfig& cfg) {
  std::vector<StereoScene> out;
  const Rng root(cfg.seed);
  for (std::size_t i = 0; i < cfg.scenes; ++i) {
    Rng r = root.child(i);
    out.push_back(synth_stereo_scene(cfg, r));
  }
  return out;
}

PoseReport eval_pose_suite(const std::vector<StereoScene>& scenes, const PoseSuiteConfig& cfg) {
  PoseReport rep;
  std::string budgets;
  for (std::size_t k : cfg.budgets) budgets += (budgets.empty() ? "" : " ") + std::to_string(k);
  rep.notes = {{"suite", "pose"},
               {"budgets", budgets},
               {"subsampling", "uniform without replacement, per scene and budget"},
               {"noise_px", format_double(cfg.noise_px)},
               {"threshold_px", format_double(cfg.ransac.threshold)}};
  std::size_t skipped = 0;
  const Rng root(cfg.seed ^ 0x5eedULL);
  for (std::size_t si = 0; si < scenes.size(); ++si) {
    const StereoScene& s = scenes[si];
    for (std::size_t bi = 0; bi < cfg.budgets.size(); ++bi) {
      const std::size_t k = cfg.budgets[bi];
      if (k < 4) {
        ++skipped;
        continue;
      }
      Rng pick = root.child(si * 1024 + bi);
      std::vector<std::size_t> idx(s.left.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      const std::size_t take = std::min(k, idx.size());
      for (std::size_t i = 0; i < take; ++i) {
        std::swap(idx[i], idx[i + pick.uniform_index(idx.size() - i)]);
      }
      std::vector<Eigen::Vector3d> world;
      std::vector<Eigen::Vector2d> image;
      for (std::size_t i = 0; i < take; ++i) {
        try {
          world.push_back(triangulate_stereo(s.left[idx[i]], s.right[idx[i]], cfg.cam));
          image.push_back(s.next[idx[i]]);
        } catch (const Error&) {
          // Dropped: disparity or row check failed.
        }
      }
      PoseRow row;
      row.scene = "scene_" + std::to_string(si);
      row.k = k;
      try {
        RansacConfig rc = cfg.ransac;
        rc.seed = cfg.ransac.seed + si * 1024 + bi;
        const PoseEstimate est = ransac_p3p(world, image, cfg.cam, rc);
        row.rot_err = rotation_error(est.pose.rotation, s.relative.rotation);
        row.trans_err = translation_error(est.pose.translation, s.relative.translation);
        row.inliers = est.inliers.size();
      } catch (const Error&) {
        row.ok = false;
        row.rot_err = row.trans_err = std::nan("");
      }
      rep.rows.push_back(row);
    }
  }
  if (skipped) rep.notes.emplace_back("skipped_budgets_below_4", std::to_string(skipped));
  rep.finalize();
  return rep;
}

}  // namespace fpc

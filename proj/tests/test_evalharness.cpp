#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <tuple>

#include "fpc/core/io.hpp"
#include "fpc/evalharness/plot.hpp"
#include "fpc/evalharness/suites.hpp"
#include "fpc/evalharness/synth.hpp"
#include "oracles.hpp"

namespace fpc {
namespace {

HarrisConfig eval_harris() {
  HarrisConfig c;
  c.top_n = 300;
  return c;
}

// Recomputes every (split, metric, eps) mean from the rows.
void expect_aggregates_are_means(const EvalReport& rep) {
  std::map<std::tuple<std::string, std::string, double>, std::pair<double, std::size_t>> acc;
  for (const ReportRow& r : rep.rows) {
    if (!r.defined) continue;
    for (const std::string& split : {std::string("all"), r.split}) {
      auto& a = acc[{split, r.metric, r.eps}];
      a.first += r.value;
      a.second += 1;
      if (split == r.split) break;  // "all" rows count once
    }
  }
  for (const AggregateRow& a : rep.aggregates) {
    const auto it = acc.find({a.split, a.metric, a.eps});
    ASSERT_NE(it, acc.end()) << a.split << " " << a.metric;
    EXPECT_EQ(a.count, it->second.second);
    EXPECT_NEAR(a.value, it->second.first / it->second.second, 1e-9);
  }
}

TEST(Synth, SquareCornersOnTheSquare) {
  const SynthScene s = synth_square(64, 48, 10, 12, 20);
  ASSERT_EQ(s.corners.size(), 4u);
  EXPECT_EQ(s.shape_corners, std::vector<std::size_t>{4});
  EXPECT_EQ(s.corners[0], Eigen::Vector2d(10, 12));
  EXPECT_EQ(s.corners[2], Eigen::Vector2d(30, 32));
  EXPECT_GT(s.image.at(13, 11), 0.9f);  // just inside the first corner
  EXPECT_EQ(s.image.at(10, 8), 0.0f);   // just outside
}

TEST(Synth, SceneDeterministicAndBookkept) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng a(seed), b(seed);
    const SynthScene s = synth_scene(a, 160, 120, 6);
    const SynthScene t = synth_scene(b, 160, 120, 6);
    EXPECT_EQ(s.image, t.image);
    ASSERT_EQ(s.shape_corners.size(), 6u);
    std::size_t sum = 0;
    for (std::size_t c : s.shape_corners) {
      EXPECT_TRUE(c == 3 || c == 4 || c == 9 || c == 16) << c;
      sum += c;
    }
    EXPECT_EQ(s.corners.size(), sum);
    for (const auto& c : s.corners) {
      EXPECT_GE(c.x(), 0);
      EXPECT_GE(c.y(), 0);
      EXPECT_LE(c.x(), 159);
      EXPECT_LE(c.y(), 119);
    }
    for (float v : s.image.pixels().data()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(MakePair, IdentitySettingsCopyImage) {
  Rng r(1);
  const SynthScene s = synth_scene(r, 160, 120, 4);
  HomographySamplerConfig none;
  none.perturbation = none.rotation = none.translation = 0;
  none.scale_min = none.scale_max = 1;
  const PairSample p = make_pair(s.image, none, {1.0, 1.0, 0.0, 0.0}, r);
  EXPECT_EQ(p.image_b, s.image);
  EXPECT_EQ(parse_hom(format_hom(p.h_gt)).matrix(), p.h_gt.matrix());
}

TEST(MakePair, PrefixStable) {
  const auto small = synthetic_pairs(3, 5);
  const auto big = synthetic_pairs(6, 5);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(small[i].id, big[i].id);
    EXPECT_EQ(small[i].image_b, big[i].image_b);
    EXPECT_EQ(small[i].h_gt.matrix(), big[i].h_gt.matrix());
  }
}

TEST(MakePair, NoiseOnlyHarrisRepeatable) {
  HomographySamplerConfig none;
  none.perturbation = none.rotation = none.translation = 0;
  none.scale_min = none.scale_max = 1;
  const auto pairs = synthetic_pairs(10, 2, 160, 120, 6, none, {1.0, 1.0, 0.0, 0.02});
  const auto det = harris_detector(eval_harris());
  for (const PairSample& p : pairs) {
    const double rep = repeatability(det(p.image_a), det(p.image_b), p.h_gt, 3.0, 160, 120);
    EXPECT_GT(rep, 0.8) << p.id;
  }
}

TEST(RepeatabilitySuite, PerfectDetector) {
  const auto pairs = synthetic_pairs(20, 3);
  const EvalReport rep = eval_repeatability_suite(oracle_keypoints, pairs);
  ASSERT_EQ(rep.rows.size(), 60u);
  for (const ReportRow& r : rep.rows) {
    EXPECT_TRUE(r.defined);
    EXPECT_EQ(r.value, 1.0) << r.pair << " " << r.eps;
  }
}

TEST(RepeatabilitySuite, HarrisMatchesOracleAndIsMonotone) {
  const auto pairs = synthetic_pairs(100, 0);
  const PairDetector det = per_image(harris_detector(eval_harris()));
  const EvalReport rep = eval_repeatability_suite(det, pairs);
  ASSERT_EQ(rep.rows.size(), 300u);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [ka, kb] = det(pairs[i]);
    double prev = -1;
    for (std::size_t e = 0; e < 3; ++e) {
      const ReportRow& row = rep.rows[3 * i + e];
      ASSERT_TRUE(row.defined);
      EXPECT_NEAR(row.value,
                  oracle::repeatability(apply_budget(ka, 300), apply_budget(kb, 300),
                                        pairs[i].h_gt.matrix(), row.eps, 160, 120),
                  1e-12);
      EXPECT_GE(row.value, prev);
      prev = row.value;
    }
  }
  expect_aggregates_are_means(rep);
  EXPECT_EQ(rep.csv(), eval_repeatability_suite(det, pairs).csv());
}

TEST(RepeatabilitySuite, IdenticalImagesGiveOne) {
  const auto base = synthetic_pairs(5, 4);
  std::vector<PairSample> same;
  for (const PairSample& p : base) same.push_back({p.id, "all", p.image_a, p.image_a, Homography(), {}});
  const EvalReport rep = eval_repeatability_suite(per_image(harris_detector(eval_harris())), same);
  for (const ReportRow& r : rep.rows) EXPECT_EQ(r.value, 1.0);
}

TEST(RepeatabilitySuite, EmptyDetectionsUndefined) {
  const auto pairs = synthetic_pairs(4, 6);
  const PairDetector nothing = [](const PairSample&) { return KeypointPair{}; };
  const EvalReport rep = eval_repeatability_suite(nothing, pairs);
  EXPECT_EQ(rep.undefined_count(), 12u);
  EXPECT_NE(rep.csv().find("undefined"), std::string::npos);
}

TEST(HomographySuite, OracleCorrespondencesAreExact) {
  const auto pairs = synthetic_pairs(30, 7);
  const EvalReport rep = eval_homography_suite(oracle_keypoints, pairs);
  EXPECT_EQ(rep.aggregate("homography_correct", 1.0), 1.0);
  expect_aggregates_are_means(rep);
}

TEST(HomographySuite, TooFewPointsCountAsWrong) {
  const auto pairs = synthetic_pairs(5, 8);
  const PairDetector three = [](const PairSample&) {
    const std::vector<Keypoint> k{{10, 10, 0.9f}, {50, 20, 0.8f}, {30, 70, 0.7f}};
    return KeypointPair{k, k};
  };
  const EvalReport rep = eval_homography_suite(three, pairs);
  for (double eps : {1.0, 3.0, 8.0}) EXPECT_EQ(rep.aggregate("homography_correct", eps), 0.0);
}

TEST(HomographySuite, HarrisMonotoneAndMatchesOracle) {
  const auto pairs = synthetic_pairs(40, 9);
  const PairDetector det = per_image(harris_detector(eval_harris()));
  HomographySuiteConfig cfg;
  const EvalReport rep = eval_homography_suite(det, pairs, cfg);
  EXPECT_LE(rep.aggregate("homography_correct", 1.0), rep.aggregate("homography_correct", 3.0));
  EXPECT_LE(rep.aggregate("homography_correct", 3.0), rep.aggregate("homography_correct", 8.0));
  expect_aggregates_are_means(rep);

  // recompose the pipeline by hand for the oracle
  std::vector<Eigen::Matrix3d> gt;
  std::vector<std::optional<Eigen::Matrix3d>> est;
  for (const PairSample& p : pairs) {
    auto [ka, kb] = det(p);
    ka = apply_budget(ka, cfg.budget);
    kb = apply_budget(kb, cfg.budget);
    const auto m = spatial_match(ka, kb, cfg.match_distance, cfg.mutual, p.h_gt);
    gt.push_back(p.h_gt.matrix());
    try {
      est.push_back(ransac_homography(matched_points(ka, kb, m), cfg.ransac).h.matrix());
    } catch (const Error&) {
      est.push_back(std::nullopt);
    }
  }
  for (double eps : {1.0, 3.0, 8.0}) {
    EXPECT_NEAR(rep.aggregate("homography_correct", eps),
                oracle::homography_accuracy(gt, est, eps, 160, 120), 1e-12);
  }
}

TEST(HomographySuite, PayloadIsCoordinatesAndScores) {
  EXPECT_EQ(match_payload_bytes(0), 0u);
  EXPECT_EQ(match_payload_bytes(10), 10u * 2 * 3 * sizeof(float));
  const auto pairs = synthetic_pairs(3, 10);
  const EvalReport rep = eval_homography_suite(oracle_keypoints, pairs);
  std::map<std::string, double> matches;
  for (const ReportRow& r : rep.rows) {
    if (r.metric == "matches") matches[r.pair] = r.value;
  }
  for (const ReportRow& r : rep.rows) {
    if (r.metric == "payload_bytes") EXPECT_EQ(r.value, matches[r.pair] * 24);
  }
}

TEST(ApplyBudget, KeepsHighestScores) {
  const std::vector<Keypoint> k{{1, 1, 0.2f}, {2, 2, 0.9f}, {3, 3, 0.5f}, {0, 0, 0.9f}};
  const auto b = apply_budget(k, 2);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0], (Keypoint{0, 0, 0.9f}));
  EXPECT_EQ(b[1], (Keypoint{2, 2, 0.9f}));
  EXPECT_EQ(apply_budget(k, 10).size(), 4u);
}

TEST(PoseSuite, NoiseFreeIsExact) {
  PoseSuiteConfig cfg;
  cfg.noise_px = 0;
  cfg.scenes = 10;
  cfg.budgets = {100};
  const PoseReport rep = eval_pose_suite(synth_stereo_scenes(cfg), cfg);
  ASSERT_EQ(rep.rows.size(), 10u);
  for (const PoseRow& r : rep.rows) {
    EXPECT_TRUE(r.ok);
    EXPECT_LT(r.rot_err, 1e-5);
  }
}

TEST(PoseSuite, MoreKeypointsLowerMedian) {
  PoseSuiteConfig cfg;
  cfg.noise_px = 0.5;
  cfg.scenes = 50;
  cfg.budgets = {5, 100};
  const PoseReport rep = eval_pose_suite(synth_stereo_scenes(cfg), cfg);
  EXPECT_LE(rep.at_k(100).median_rot, rep.at_k(5).median_rot);
  EXPECT_LE(rep.at_k(100).median_trans, rep.at_k(5).median_trans);
}

TEST(PoseSuite, RowBookkeepingAndAggregates) {
  PoseSuiteConfig cfg;
  cfg.scenes = 7;
  cfg.budgets = {3, 5, 30};
  const PoseReport rep = eval_pose_suite(synth_stereo_scenes(cfg), cfg);
  EXPECT_EQ(rep.rows.size(), 7u * 2);
  for (const PoseAggregate& a : rep.aggregates) {
    double s = 0;
    std::vector<double> v;
    for (const PoseRow& r : rep.rows) {
      if (r.k == a.k && r.ok) {
        s += r.rot_err;
        v.push_back(r.rot_err);
      }
    }
    EXPECT_EQ(a.count, v.size());
    EXPECT_NEAR(a.mean_rot, s / v.size(), 1e-9);
    EXPECT_NEAR(a.median_rot, median(v), 1e-12);
  }
  EXPECT_EQ(rep.csv(), eval_pose_suite(synth_stereo_scenes(cfg), cfg).csv());
}

TEST(Plot, SvgHasSeriesAndLabels) {
  const std::string svg = svg_line_plot({{"harris", {1, 3, 8}, {0.2, 0.5, 0.9}}},
                                        {"repeatability", "eps (px)", "value", false, false});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("harris"), std::string::npos);
  EXPECT_NE(svg.find("eps (px)"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Report, MedianHandValues) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
}

}  // namespace
}  // namespace fpc

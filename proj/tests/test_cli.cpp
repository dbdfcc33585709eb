#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fpc/cli/commands.hpp"
#include "fpc/core/io.hpp"
#include "fpc/core/keypoint.hpp"
#include "fpc/core/rng.hpp"
#include "fpc/detector/checkpoint.hpp"
#include "fpc/evalharness/synth.hpp"
#include "fpc/heatmap/heatmap.hpp"
#include "fpc/matching/matching.hpp"
#include "test_util.hpp"

namespace fpc::cli {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no fpc::Error thrown";
  return ErrorCode::kIo;
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome fpc(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

// Value printed after `key` on stdout.
double printed(const std::string& out, const std::string& key) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + " ", 0) == 0) return std::stod(line.substr(key.size() + 1));
  }
  ADD_FAILURE() << "no '" << key << "' in output:\n" << out;
  return NAN;
}

// Data lines of a CSV: no comments, no header.
std::vector<std::string> data_lines(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    out.push_back(line);
  }
  return out;
}

// synthetic image plus a freshly initialized checkpoint
struct DetectFixture {
  TempDir dir{"cli_detect"};
  std::string image = dir.file("scene.pgm");
  std::string ckpt = dir.file("ckpt");

  DetectFixture() {
    Rng r(3);
    save_image_pgm(synth_scene(r, 160, 120, 6).image, image);
    Rng init(0);
    save_checkpoint(build_detector(DetectorConfig{}, init), ckpt);
  }

  Outcome detect(const std::string& out, std::vector<std::string> extra = {}) const {
    std::vector<std::string> args{"detect", "--image", image, "--checkpoint", ckpt, "--out", out};
    args.insert(args.end(), extra.begin(), extra.end());
    return fpc(args);
  }
};

TEST(RunConfig, MergeTextAndTypedGetters) {
  RunConfig c({{"a", "1", ""}, {"b", "x", ""}, {"list", "1,2", ""}, {"on", "true", ""}});
  c.merge_text("# comment\n\n a = 2.5  # trailing\nlist = 5, 10,30\non=false\n", "t");
  EXPECT_EQ(c.real("a"), 2.5);
  EXPECT_EQ(c.str("b"), "x");
  EXPECT_EQ(c.counts("list"), (std::vector<std::size_t>{5, 10, 30}));
  EXPECT_FALSE(c.flag("on"));
  EXPECT_TRUE(c.has("a"));
  EXPECT_FALSE(c.has("zzz"));
}

TEST(RunConfig, RejectsUnknownKeysAndBadLines) {
  RunConfig c(detect_keys());
  EXPECT_EQ(code_of([&] { c.merge_text("nope = 1\n", "t"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { c.set("nope", "1"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { c.merge_text("q 0.5\n", "t"); }), ErrorCode::kFormat);
  c.set("max_k", "abc");
  EXPECT_NE(code_of([&] { c.count("max_k"); }), ErrorCode::kIo);
}

TEST(RunConfig, ResolvedRoundTripsEveryKey) {
  for (auto keys : {detect_keys(), match_keys(), train_keys(), eval_keys(), inspect_keys()}) {
    RunConfig c(keys);
    c.set(keys.front().name, "changed");
    RunConfig back(keys);
    back.merge_text(c.resolved(), "resolved");
    EXPECT_EQ(back.resolved(), c.resolved());
    for (const KeySpec& k : keys) {
      EXPECT_NE(c.resolved().find(k.name + " ="), std::string::npos) << k.name;
    }
  }
}

TEST(RunConfig, FlagName) {
  EXPECT_EQ(flag_name("match_distance"), "--match-distance");
  EXPECT_EQ(flag_name("q"), "--q");
}

TEST(Cli, ExitCodeMap) {
  EXPECT_EQ(exit_code(ErrorCode::kInvalidArgument), 2);
  EXPECT_EQ(exit_code(ErrorCode::kFormat), 2);
  EXPECT_EQ(exit_code(ErrorCode::kIo), 2);
  EXPECT_EQ(exit_code(ErrorCode::kCheckpointMismatch), 3);
  EXPECT_EQ(exit_code(ErrorCode::kEstimationFailed), 4);
  EXPECT_EQ(exit_code(ErrorCode::kInsufficientData), 4);
  EXPECT_EQ(exit_code(ErrorCode::kDivergence), 5);
}

TEST(Cli, UnknownFlagOrCommand) {
  EXPECT_EQ(fpc({"detect", "--bogus", "1"}).code, 2);
  EXPECT_EQ(fpc({"frobnicate"}).code, 2);
  EXPECT_EQ(fpc({}).code, 2);
  const Outcome help = fpc({"eval", "--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("--match-distance"), std::string::npos);
}

TEST(Cli, ConfigFilePrecedence) {
  TempDir dir("cli_cfg");
  // inspect reads a constant map; the histogram edges tell which layer won
  save_tensor(Tensor({4, 4}, -3.0f), dir.file("h.fpct"));
  std::ofstream(dir.file("run.cfg")) << "bins = 7\nlo = -4\n";
  const Outcome r = fpc({"inspect", "--config", dir.file("run.cfg"), "--heatmap", dir.file("h.fpct"),
                         "--lo", "-5", "--out", dir.file("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  RunConfig resolved(inspect_keys());
  resolved.merge_text(read_file(dir.file("o/config.resolved")), "resolved");
  EXPECT_EQ(resolved.count("bins"), 7u);  // file over default
  EXPECT_EQ(resolved.real("lo"), -5.0);   // flag over file
  EXPECT_EQ(resolved.real("hi"), 5.0);    // default
  EXPECT_EQ(data_lines(read_file(dir.file("o/histogram.csv"))).size(), 7u);
}

TEST(CliDetect, WritesParsableOutputs) {
  const DetectFixture f;
  const std::string out = f.dir.file("o");
  const Outcome r = f.detect(out, {"--max-k", "40"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* name : {"keypoints.csv", "heatmap.fpct", "config.resolved"}) {
    EXPECT_TRUE(fs::exists(fs::path(out) / name)) << name;
  }
  const auto kps = load_keypoints_csv(out + "/keypoints.csv");
  EXPECT_LE(kps.size(), 40u);
  EXPECT_EQ(static_cast<double>(kps.size()), printed(r.out, "keypoints"));
  const Tensor hm = load_tensor(out + "/heatmap.fpct");
  EXPECT_EQ(hm.shape(), (Shape{120, 160}));
}

TEST(CliDetect, ByteIdenticalReruns) {
  const DetectFixture f;
  ASSERT_EQ(f.detect(f.dir.file("o1")).code, 0);
  ASSERT_EQ(f.detect(f.dir.file("o2")).code, 0);
  for (const char* name : {"keypoints.csv", "heatmap.fpct", "config.resolved"}) {
    const std::string a = read_file(f.dir.file(std::string("o1/") + name));
    const std::string b = read_file(f.dir.file(std::string("o2/") + name));
    // config.resolved names its own output directory
    if (std::string(name) == "config.resolved") {
      EXPECT_EQ(a.size(), b.size());
    } else {
      EXPECT_EQ(a, b) << name;
    }
  }
}

TEST(CliDetect, LowerQuantileKeepsMoreCandidates) {
  const DetectFixture f;
  // radius 0 and a cap above the pixel count: every candidate survives
  const std::vector<std::string> open{"--nms-radius", "0", "--max-k", "100000"};
  auto with_q = [&](const std::string& q, const std::string& out) {
    auto args = open;
    args.insert(args.end(), {"--q", q});
    const Outcome r = f.detect(f.dir.file(out), args);
    EXPECT_EQ(r.code, 0) << r.err;
    return printed(r.out, "keypoints");
  };
  const double lo = with_q("0.5", "lo"), hi = with_q("0.999", "hi");
  EXPECT_GE(lo, hi);
  const Heatmap hm(load_tensor(f.dir.file("lo/heatmap.fpct")));
  std::size_t above = 0;
  for (float v : quantile_threshold(hm, 0.5).values.data()) above += v > 0.5f;
  EXPECT_EQ(lo, static_cast<double>(above));
}

TEST(CliDetect, CheckpointAndInputErrors) {
  const DetectFixture f;
  // manifest claims a different architecture than the tensors on disk
  std::string man = read_file(f.ckpt + "/manifest.txt");
  man.replace(man.find("widths 8 "), 9, "widths 16 ");
  write_file(f.ckpt + "/manifest.txt", man);
  EXPECT_EQ(f.detect(f.dir.file("o")).code, 3);
  EXPECT_EQ(fpc({"detect", "--image", f.image, "--checkpoint", f.dir.file("missing"), "--out",
                 f.dir.file("o")})
                .code,
            3);

  DetectFixture g;
  write_file(g.image, "P5\n7 7\n255\n");
  EXPECT_EQ(g.detect(g.dir.file("o")).code, 2);
  DetectFixture h;
  EXPECT_EQ(h.detect(h.dir.file("o"), {"--q", "1.5"}).code, 2);
}

std::vector<Keypoint> scattered_keypoints(std::uint64_t seed, std::size_t n) {
  Rng r(seed);
  std::vector<Keypoint> kps;
  for (std::size_t i = 0; i < n; ++i) {
    kps.push_back({static_cast<float>(r.uniform(5, 155)), static_cast<float>(r.uniform(5, 115)),
                   static_cast<float>(r.uniform())});
  }
  return kps;
}

TEST(CliMatch, IdenticalFilesGiveIdentity) {
  TempDir dir("cli_match");
  save_keypoints_csv(scattered_keypoints(1, 40), dir.file("a.csv"));
  const Outcome r = fpc({"match", "--kps-a", dir.file("a.csv"), "--kps-b", dir.file("a.csv"), "--out",
                         dir.file("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Homography h = load_hom(dir.file("o/estimate.hom"));
  EXPECT_LT((h.matrix() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(printed(r.out, "matches"), 40);
  EXPECT_EQ(printed(r.out, "inliers"), 40);
}

TEST(CliMatch, TooFewKeypointsExits4) {
  TempDir dir("cli_match");
  save_keypoints_csv(scattered_keypoints(2, 3), dir.file("a.csv"));
  const Outcome r = fpc({"match", "--kps-a", dir.file("a.csv"), "--kps-b", dir.file("a.csv"), "--out",
                         dir.file("o")});
  EXPECT_EQ(r.code, 4);
  EXPECT_FALSE(r.err.empty());
}

TEST(CliMatch, EqualsComposedLibraryCalls) {
  TempDir dir("cli_match");
  const auto a = scattered_keypoints(3, 60);
  const Homography shift = Homography::translation(2.0, -1.5);
  std::vector<Keypoint> b;
  Rng r(4);
  for (const Keypoint& k : a) {
    const Eigen::Vector2d p = hom_apply(shift, Eigen::Vector2d(k.x, k.y));
    b.push_back({static_cast<float>(p.x() + 0.3 * r.normal()),
                 static_cast<float>(p.y() + 0.3 * r.normal()), k.score});
  }
  for (const Keypoint& k : scattered_keypoints(5, 20)) b.push_back(k);
  save_keypoints_csv(a, dir.file("a.csv"));
  save_keypoints_csv(b, dir.file("b.csv"));
  const Outcome run = fpc({"match", "--kps-a", dir.file("a.csv"), "--kps-b", dir.file("b.csv"),
                           "--seed", "8", "--out", dir.file("o")});
  ASSERT_EQ(run.code, 0) << run.err;

  // the library on what the CLI actually read back from disk
  const auto la = load_keypoints_csv(dir.file("a.csv"));
  const auto lb = load_keypoints_csv(dir.file("b.csv"));
  const auto matches = spatial_match(la, lb, 4.0, true);
  const auto pairs = matched_points(la, lb, matches);
  RansacConfig rc;
  rc.seed = 8;
  const auto est = ransac_homography(pairs, rc);
  EXPECT_EQ(read_file(dir.file("o/matches.csv")), matches_csv(matches));
  EXPECT_EQ(read_file(dir.file("o/estimate.hom")), format_hom(est.h));
  EXPECT_EQ(printed(run.out, "inliers"), static_cast<double>(est.inliers.size()));
}

std::vector<std::string> train_args(const std::string& out, std::vector<std::string> extra) {
  std::vector<std::string> args{"train", "--synthetic", "16", "--out", out};
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

TEST(CliTrain, SmokeBothStages) {
  TempDir dir("cli_train");
  const Outcome r = fpc(train_args(dir.file("o"), {"--stage", "both", "--epochs1", "2", "--epochs2", "1"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::isfinite(printed(r.out, "final_loss")));
  const auto rows = data_lines(read_file(dir.file("o/loss.csv")));
  // 16 samples at batch 8: 2 steps per epoch
  EXPECT_EQ(rows.size(), (2u + 1u) * 2u);
  EXPECT_EQ(printed(r.out, "steps"), static_cast<double>(rows.size()));
  for (const std::string& row : rows) {
    EXPECT_TRUE(std::isfinite(std::stod(row.substr(row.rfind(',') + 1)))) << row;
  }
  EXPECT_TRUE(fs::exists(dir.file("o/checkpoint/manifest.txt")));
  EXPECT_TRUE(fs::exists(dir.file("o/checkpoint_stage1/manifest.txt")));
  EXPECT_TRUE(fs::exists(dir.file("o/config.resolved")));
}

TEST(CliTrain, LossRowsAreEpochsTimesBatches) {
  TempDir dir("cli_train");
  // 16 samples at batch 5: 3 steps per epoch (the trailing 1 joins the last batch)
  const Outcome r = fpc(train_args(dir.file("o"), {"--stage", "1", "--epochs1", "3", "--batch", "5"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(data_lines(read_file(dir.file("o/loss.csv"))).size(), 3u * 3u);
}

TEST(CliTrain, ResumedStage2EqualsBoth) {
  TempDir dir("cli_train");
  const Outcome both = fpc(train_args(dir.file("both"), {"--epochs1", "2", "--epochs2", "1"}));
  ASSERT_EQ(both.code, 0) << both.err;
  const Outcome s1 = fpc(train_args(dir.file("s1"), {"--stage", "1", "--epochs1", "2"}));
  ASSERT_EQ(s1.code, 0) << s1.err;
  const Outcome s2 = fpc(train_args(dir.file("s2"), {"--stage", "2", "--epochs2", "1", "--init",
                                                  dir.file("s1/checkpoint")}));
  ASSERT_EQ(s2.code, 0) << s2.err;
  EXPECT_NEAR(printed(s2.out, "final_loss"), printed(both.out, "final_loss"), 1e-7);
  EXPECT_EQ(read_file(dir.file("s1/checkpoint/manifest.txt")),
            read_file(dir.file("both/checkpoint_stage1/manifest.txt")));
}

TEST(CliTrain, InputErrors) {
  TempDir dir("cli_train");
  EXPECT_EQ(fpc(train_args(dir.file("o"), {"--stage", "2"})).code, 2);
  EXPECT_EQ(fpc(train_args(dir.file("o"), {"--stage", "3"})).code, 2);
  EXPECT_EQ(fpc({"train", "--out", dir.file("o")}).code, 2);
  EXPECT_EQ(fpc(train_args(dir.file("o"), {"--mode", "other"})).code, 2);
}

TEST(CliEval, RepeatabilityRowCount) {
  TempDir dir("cli_eval");
  const Outcome r = fpc({"eval", "--suite", "repeatability", "--detector", "harris", "--synthetic",
                         "10", "--out", dir.file("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = data_lines(read_file(dir.file("o/report.csv")));
  std::size_t per_pair = 0, agg = 0;
  for (const std::string& row : rows) (row.rfind("aggregate,", 0) == 0 ? agg : per_pair)++;
  EXPECT_EQ(per_pair, 10u * 3u);
  EXPECT_EQ(agg, 3u);
  EXPECT_TRUE(fs::exists(dir.file("o/report.svg")));
  // stdout: one line per eps, non-decreasing
  EXPECT_LE(printed(r.out, "repeatability eps 1"), printed(r.out, "repeatability eps 3"));
  EXPECT_LE(printed(r.out, "repeatability eps 3"), printed(r.out, "repeatability eps 8"));
}

TEST(CliEval, OracleHomographyIsExact) {
  TempDir dir("cli_eval");
  const Outcome r = fpc({"eval", "--suite", "homography", "--detector", "oracle", "--synthetic", "10",
                         "--out", dir.file("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(printed(r.out, "homography_correct eps 3"), 1.0);
}

TEST(CliEval, PoseRowsBounded) {
  TempDir dir("cli_eval");
  const Outcome r = fpc({"eval", "--suite", "pose", "--budgets", "5,30", "--scenes", "20", "--out",
                         dir.file("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t rows = 0;
  for (const std::string& row : data_lines(read_file(dir.file("o/report.csv")))) {
    if (row.rfind("mean,", 0) != 0 && row.rfind("median,", 0) != 0) ++rows;
  }
  EXPECT_GT(rows, 0u);
  EXPECT_LE(rows, 40u);
  EXPECT_NE(r.out.find("k 30 "), std::string::npos);
}

TEST(CliEval, BadSuiteOrDetector) {
  TempDir dir("cli_eval");
  EXPECT_EQ(fpc({"eval", "--suite", "nope", "--out", dir.file("o")}).code, 2);
  EXPECT_EQ(fpc({"eval", "--detector", "nope", "--synthetic", "2", "--out", dir.file("o")}).code, 2);
  EXPECT_EQ(fpc({"eval", "--detector", "learned", "--checkpoint", dir.file("none"), "--synthetic",
                 "2", "--out", dir.file("o")})
                .code,
            3);
}

std::vector<std::size_t> histogram_counts(const std::string& csv) {
  std::vector<std::size_t> out;
  for (const std::string& row : data_lines(csv)) out.push_back(std::stoul(row.substr(row.find(',') + 1)));
  return out;
}

TEST(CliInspect, ConstantMinusThree) {
  TempDir dir("cli_inspect");
  save_tensor(Tensor({24, 32}, -3.0f), dir.file("h.fpct"));
  const Outcome r = fpc({"inspect", "--heatmap", dir.file("h.fpct"), "--out", dir.file("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(printed(r.out, "fraction_above_zero"), 0.0);
  const auto counts = histogram_counts(read_file(dir.file("o/histogram.csv")));
  ASSERT_EQ(counts.size(), 60u);
  // [-3, -2.75) is bin 28 of 60 over [-10, 5]
  EXPECT_EQ(counts[28], 24u * 32u);
}

TEST(CliInspect, MatchesNaiveBinning) {
  TempDir dir("cli_inspect");
  Rng r(21);
  Tensor t({30, 40});
  std::size_t positive = 0;
  for (float& v : t.data()) {
    v = static_cast<float>(r.uniform(-12, 7));
    positive += v > 0;
  }
  save_tensor(t, dir.file("h.fpct"));
  const Outcome run = fpc({"inspect", "--heatmap", dir.file("h.fpct"), "--bins", "15", "--out",
                           dir.file("o")});
  ASSERT_EQ(run.code, 0) << run.err;
  const auto counts = histogram_counts(read_file(dir.file("o/histogram.csv")));
  ASSERT_EQ(counts.size(), 15u);
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  EXPECT_EQ(total, t.size());

  std::vector<std::size_t> expect(15, 0);
  for (float v : t.data()) {
    std::size_t bin = 0;
    while (bin + 1 < 15 && v >= -10.0 + (bin + 1) * 1.0) ++bin;
    ++expect[bin];
  }
  EXPECT_EQ(counts, expect);
  EXPECT_NEAR(printed(run.out, "fraction_above_zero"),
              static_cast<double>(positive) / static_cast<double>(t.size()), 1e-12);
}

TEST(CliInspect, MalformedTensorExits2) {
  TempDir dir("cli_inspect");
  write_file(dir.file("bad.fpct"), "not a tensor");
  EXPECT_EQ(fpc({"inspect", "--heatmap", dir.file("bad.fpct"), "--out", dir.file("o")}).code, 2);
  save_tensor(Tensor({2, 3, 4}), dir.file("rank3.fpct"));
  EXPECT_EQ(fpc({"inspect", "--heatmap", dir.file("rank3.fpct"), "--out", dir.file("o")}).code, 2);
  Tensor nan_map({4, 4});
  nan_map[5] = NAN;
  save_tensor(nan_map, dir.file("nan.fpct"));
  EXPECT_EQ(fpc({"inspect", "--heatmap", dir.file("nan.fpct"), "--out", dir.file("o")}).code, 2);
  EXPECT_EQ(fpc({"inspect", "--heatmap", dir.file("missing.fpct"), "--out", dir.file("o")}).code, 2);
}

}  // namespace
}  // namespace fpc::cli

#include "fpc/cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "fpc/core/io.hpp"
#include "fpc/detector/checkpoint.hpp"
#include "fpc/detector/harris.hpp"
#include "fpc/detector/train.hpp"
#include "fpc/evalharness/plot.hpp"
#include "fpc/evalharness/suites.hpp"
#include "fpc/evalharness/synth.hpp"
#include "fpc/heatmap/heatmap.hpp"
#include "fpc/matching/matching.hpp"

namespace fs = std::filesystem;

namespace fpc::cli {
namespace {

Error input_error(const std::string& msg) { return Error(ErrorCode::kInvalidArgument, msg); }

std::string required(const RunConfig& cfg, const std::string& key) {
  const std::string& v = cfg.str(key);
  if (v.empty()) throw input_error(flag_name(key) + " is required");
  return v;
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path dir(required(cfg, "out"));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  write_file((dir / "config.resolved").string(), cfg.resolved());
  return dir;
}

HarrisConfig harris_from(const RunConfig& cfg) {
  HarrisConfig h;
  h.k = cfg.real("harris_k");
  h.top_n = cfg.count("harris_top_n");
  h.nms_radius = cfg.real("harris_nms_radius");
  return h;
}

RansacConfig ransac_from(const RunConfig& cfg) {
  RansacConfig r;
  r.threshold = cfg.real("ransac_threshold");
  r.max_iterations = cfg.count("ransac_max_iterations");
  r.confidence = cfg.real("ransac_confidence");
  r.seed = cfg.u64("seed");
  r.validate();
  return r;
}

std::vector<KeySpec> harris_keys(const char* top_n) {
  return {{"harris_k", "0.05", "Harris k"},
          {"harris_top_n", top_n, "Harris corners kept per image"},
          {"harris_nms_radius", "4", "Harris NMS radius (px)"}};
}

std::vector<KeySpec> ransac_keys() {
  return {{"ransac_threshold", "3", "RANSAC inlier threshold (px)"},
          {"ransac_max_iterations", "2000", "RANSAC iteration cap"},
          {"ransac_confidence", "0.995", "RANSAC early-exit confidence"},
          {"seed", "0", "RNG seed"}};
}

void append(std::vector<KeySpec>& a, const std::vector<KeySpec>& b) {
  a.insert(a.end(), b.begin(), b.end());
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCheckpointMismatch:
      return kExitCheckpoint;
    case ErrorCode::kEstimationFailed:
    case ErrorCode::kInsufficientData:
    case ErrorCode::kDegenerate:
      return kExitEstimation;
    case ErrorCode::kDivergence:
      return kExitDivergence;
    default:
      return kExitInput;
  }
}

// --- detect ---------------------------------------------------------------

std::vector<KeySpec> detect_keys() {
  return {{"image", "", "input image (binary PGM)"},
          {"checkpoint", "", "checkpoint directory"},
          {"q", "0.99", "quantile threshold on the logits"},
          {"nms_radius", "4", "NMS radius (px)"},
          {"max_k", "300", "keypoint cap"},
          {"out", "", "output directory"}};
}

void cmd_detect(const RunConfig& cfg, std::ostream& out) {
  const double q = cfg.real("q");
  if (!(q >= 0.0 && q <= 1.0)) throw input_error("q must lie in [0, 1]");
  const ImageGray img = load_image_pgm(required(cfg, "image"));
  const DetectorParams params = load_checkpoint(required(cfg, "checkpoint"));
  const Heatmap hm = detector_forward(params, img);
  const auto kps = extract_keypoints(hm, q, cfg.real("nms_radius"), cfg.count("max_k"));
  const fs::path dir = prepare_out(cfg);
  save_keypoints_csv(kps, (dir / "keypoints.csv").string());
  save_tensor(hm.logits, (dir / "heatmap.fpct").string());
  out << "keypoints " << kps.size() << "\n";
}

// --- match ----------------------------------------------------------------

std::vector<KeySpec> match_keys() {
  std::vector<KeySpec> k{{"kps_a", "", "keypoint CSV of image a"},
                         {"kps_b", "", "keypoint CSV of image b"},
                         {"prewarp", "", "optional .hom mapping a into b before the search"},
                         {"match_distance", "4", "nearest-neighbour radius (px)"},
                         {"mutual", "true", "keep only mutual nearest neighbours"}};
  append(k, ransac_keys());
  k.push_back({"out", "", "output directory"});
  return k;
}

void cmd_match(const RunConfig& cfg, std::ostream& out) {
  const auto a = load_keypoints_csv(required(cfg, "kps_a"));
  const auto b = load_keypoints_csv(required(cfg, "kps_b"));
  std::optional<Homography> prewarp;
  if (!cfg.str("prewarp").empty()) prewarp = load_hom(cfg.str("prewarp"));
  const RansacConfig rc = ransac_from(cfg);
  const bool mutual = cfg.flag("mutual");
  const auto matches = spatial_match(a, b, cfg.real("match_distance"), mutual, prewarp);
  const auto pairs = matched_points(a, b, matches);
  if (pairs.size() < 4) {
    throw Error(ErrorCode::kInsufficientData,
                "need 4 matches for a homography, got " + std::to_string(pairs.size()));
  }
  const HomographyEstimate est = ransac_homography(pairs, rc);
  const fs::path dir = prepare_out(cfg);
  write_file((dir / "matches.csv").string(), matches_csv(matches));
  save_hom(est.h, (dir / "estimate.hom").string());
  out << "matches " << matches.size() << "\n";
  out << "inliers " << est.inliers.size() << "\n";
}

// --- train ----------------------------------------------------------------

std::vector<KeySpec> train_keys() {
  std::vector<KeySpec> k{
      {"data", "", "dataset directory with samples.txt"},
      {"synthetic", "0", "train on this many synthetic scenes instead"},
      {"synth_seed", "1", "seed of the synthetic scenes"},
      {"synth_shapes", "6", "shapes per synthetic scene"},
      {"stage", "both", "1, 2 or both"},
      {"init", "", "checkpoint to start from (required for stage 2)"},
      {"epochs1", "10", "stage-1 epochs"},
      {"epochs2", "6", "stage-2 epochs"},
      {"batch", "8", "mini-batch size"},
      {"lr", "0.001", "Adam learning rate"},
      {"beta1", "0.9", "Adam beta1"},
      {"beta2", "0.999", "Adam beta2"},
      {"adam_eps", "1e-08", "Adam epsilon"},
      {"mode", "regression", "consistency loss: regression or classification"},
      {"consistency_target", "stage2", "consistency masks: stage2, gaussian or binary"},
      {"huber_delta", "1", "Huber delta"},
      {"gaussian_sigma", "1", "stage-2 target blur sigma"},
      {"label_smoothing", "0.1", "stage-2 label smoothing"},
      {"lambda_c", "1", "consistency weight"},
      {"focal_alpha", "0.25", "focal alpha"},
      {"focal_gamma", "2", "focal gamma"},
      {"seed", "0", "init, shuffling and warp seed"},
      {"widths", "8,12,20,48", "backbone stage widths"},
      {"fpn_width", "32", "FPN embedding width"},
      {"height", "120", "input height"},
      {"width", "160", "input width"},
  };
  append(k, harris_keys("50"));
  append(k, {{"warp_perturbation", "0.15", "stage-2 warp corner jitter (fraction of side)"},
             {"warp_rotation", "0.26", "stage-2 warp rotation range (rad)"},
             {"warp_scale_min", "0.8", "stage-2 warp min scale"},
             {"warp_scale_max", "1.25", "stage-2 warp max scale"},
             {"warp_translation", "0.1", "stage-2 warp translation (fraction of side)"},
             {"photo_gain_min", "0.7", "stage-2 contrast gain, lower bound"},
             {"photo_gain_max", "1.3", "stage-2 contrast gain, upper bound"},
             {"photo_bias", "0.1", "stage-2 brightness offset range"},
             {"photo_noise", "0.02", "stage-2 Gaussian noise sigma"},
             {"out", "", "output directory"}});
  return k;
}

namespace {

TrainConfig train_config_from(const RunConfig& cfg) {
  TrainConfig t;
  t.adam.lr = cfg.real("lr");
  t.adam.beta1 = cfg.real("beta1");
  t.adam.beta2 = cfg.real("beta2");
  t.adam.eps = cfg.real("adam_eps");
  t.batch = cfg.count("batch");
  t.epochs1 = cfg.count("epochs1");
  t.epochs2 = cfg.count("epochs2");
  const std::string& mode = cfg.str("mode");
  if (mode == "regression") {
    t.mode = ConsistencyMode::kRegression;
  } else if (mode == "classification") {
    t.mode = ConsistencyMode::kClassification;
  } else {
    throw input_error("mode must be regression or classification");
  }
  const std::string& ct = cfg.str("consistency_target");
  if (ct == "stage2") {
    t.consistency_target = ConsistencyTarget::kStage2;
  } else if (ct == "gaussian") {
    t.consistency_target = ConsistencyTarget::kGaussian;
  } else if (ct == "binary") {
    t.consistency_target = ConsistencyTarget::kBinary;
  } else {
    throw input_error("consistency_target must be stage2, gaussian or binary");
  }
  t.huber_delta = cfg.real("huber_delta");
  t.gaussian_sigma = cfg.real("gaussian_sigma");
  t.label_smoothing = cfg.real("label_smoothing");
  t.lambda_c = cfg.real("lambda_c");
  t.focal.alpha = cfg.real("focal_alpha");
  t.focal.gamma = cfg.real("focal_gamma");
  t.seed = cfg.u64("seed");
  t.warp.perturbation = cfg.real("warp_perturbation");
  t.warp.rotation = cfg.real("warp_rotation");
  t.warp.scale_min = cfg.real("warp_scale_min");
  t.warp.scale_max = cfg.real("warp_scale_max");
  t.warp.translation = cfg.real("warp_translation");
  t.photometric.gain_min = cfg.real("photo_gain_min");
  t.photometric.gain_max = cfg.real("photo_gain_max");
  t.photometric.bias = cfg.real("photo_bias");
  t.photometric.noise_sigma = cfg.real("photo_noise");
  t.validate();
  t.warp.validate();
  return t;
}

DetectorConfig detector_config_from(const RunConfig& cfg) {
  DetectorConfig d;
  const auto w = cfg.counts("widths");
  if (w.size() != 4) throw input_error("widths needs exactly 4 entries");
  std::copy(w.begin(), w.end(), d.widths.begin());
  d.fpn_width = cfg.count("fpn_width");
  d.input_height = cfg.count("height");
  d.input_width = cfg.count("width");
  d.validate();
  return d;
}

// samples.txt: "<image.pgm> [mask.fpct]" per line; without a mask the
// Harris teacher labels the image.
std::vector<TrainSample> load_dataset(const fs::path& root, const HarrisConfig& teacher) {
  std::istringstream in(read_file((root / "samples.txt").string()));
  std::vector<TrainSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string image, mask;
    if (!(ls >> image)) continue;
    ImageGray img = load_image_pgm((root / image).string());
    if (ls >> mask) {
      Tensor m = load_tensor((root / mask).string());
      if (m.rank() != 2 || m.dim(0) != img.height() || m.dim(1) != img.width()) {
        throw Error(ErrorCode::kShapeMismatch,
                    "samples.txt line " + std::to_string(lineno) + ": mask does not fit image");
      }
      for (float v : m.data()) {
        if (v != 0.0f && v != 1.0f) {
          throw Error(ErrorCode::kFormat, "mask " + mask + " is not binary");
        }
      }
      out.push_back({std::move(img), TargetMask(std::move(m), MaskKind::kBinary)});
    } else {
      TargetMask m = harris_teacher(img, teacher);
      out.push_back({std::move(img), std::move(m)});
    }
  }
  return out;
}

}  // namespace

void cmd_train(const RunConfig& cfg, std::ostream& out) {
  const TrainConfig tcfg = train_config_from(cfg);
  const DetectorConfig dcfg = detector_config_from(cfg);
  const HarrisConfig teacher = harris_from(cfg);
  const std::string& stage = cfg.str("stage");
  if (stage != "1" && stage != "2" && stage != "both") {
    throw input_error("stage must be 1, 2 or both");
  }

  const std::size_t n_synth = cfg.count("synthetic");
  const std::string& data_dir = cfg.str("data");
  if ((n_synth > 0) == !data_dir.empty()) {
    throw input_error("give exactly one of --data and --synthetic");
  }
  std::vector<TrainSample> data;
  if (n_synth > 0) {
    Rng root(cfg.u64("synth_seed"));
    const std::size_t shapes = cfg.count("synth_shapes");
    for (std::size_t i = 0; i < n_synth; ++i) {
      Rng r = root.child(i);
      SynthScene s = synth_scene(r, dcfg.input_width, dcfg.input_height, shapes);
      TargetMask m = harris_teacher(s.image, teacher);
      data.push_back({std::move(s.image), std::move(m)});
    }
  } else {
    data = load_dataset(data_dir, teacher);
  }
  if (data.size() < 2) throw input_error("training needs at least 2 samples");
  for (const TrainSample& s : data) {
    if (s.image.height() != dcfg.input_height || s.image.width() != dcfg.input_width) {
      throw Error(ErrorCode::kShapeMismatch, "training images must be " +
                                                 std::to_string(dcfg.input_height) + "x" +
                                                 std::to_string(dcfg.input_width));
    }
  }

  DetectorParams params;
  if (!cfg.str("init").empty()) {
    params = load_checkpoint(cfg.str("init"));
    if (!(params.config == dcfg)) {
      throw Error(ErrorCode::kCheckpointMismatch,
                  "checkpoint architecture differs from widths/fpn_width/height/width");
    }
  } else if (stage == "2") {
    throw input_error("stage 2 needs --init with a stage-1 checkpoint");
  } else {
    Rng init_rng(tcfg.seed);
    params = build_detector(dcfg, init_rng);
  }

  const fs::path dir = prepare_out(cfg);
  std::vector<LossRecord> trace;
  if (stage == "1" || stage == "both") {
    TrainResult r = train_stage1(data, std::move(params), tcfg);
    params = std::move(r.params);
    trace = std::move(r.trace);
    if (stage == "both") save_checkpoint(params, (dir / "checkpoint_stage1").string());
  }
  if (stage == "2" || stage == "both") {
    TrainResult r = train_stage2(data, std::move(params), tcfg);
    params = std::move(r.params);
    trace.insert(trace.end(), r.trace.begin(), r.trace.end());
  }
  save_checkpoint(params, (dir / "checkpoint").string());
  write_file((dir / "loss.csv").string(), loss_trace_csv(trace));
  out << "steps " << trace.size() << "\n";
  if (!trace.empty()) out << "final_loss " << format_double(trace.back().loss) << "\n";
}

// --- eval -----------------------------------------------------------------

std::vector<KeySpec> eval_keys() {
  std::vector<KeySpec> k{
      {"suite", "repeatability", "repeatability, homography or pose"},
      {"detector", "harris", "harris, learned, oracle or files"},
      {"checkpoint", "", "checkpoint for the learned detector"},
      {"keypoints_dir", "", "directory of <id>_a.csv / <id>_b.csv for detector=files"},
      {"pairs", "", "pair directory with pairs.txt (default: synthetic pairs)"},
      {"synthetic", "100", "number of synthetic pairs"},
      {"synth_seed", "0", "seed of the synthetic pairs"},
      {"synth_shapes", "6", "shapes per synthetic scene"},
      {"height", "120", "synthetic image height"},
      {"width", "160", "synthetic image width"},
      {"eps", "1,3,8", "tolerances (px)"},
      {"budget", "300", "keypoints kept per image"},
      {"q", "0.99", "quantile threshold for the learned detector"},
      {"nms_radius", "4", "NMS radius for the learned detector"},
      {"max_k", "300", "keypoint cap for the learned detector"},
  };
  append(k, harris_keys("300"));
  append(k, {{"match_distance", "4", "nearest-neighbour radius (px)"},
             {"mutual", "true", "keep only mutual nearest neighbours"},
             {"prewarp", "gt", "frame for the neighbour search: gt or none"}});
  append(k, ransac_keys());
  append(k, {{"budgets", "5,10,30,100", "pose suite keypoint budgets"},
             {"scenes", "50", "pose suite scene count"},
             {"points", "200", "points per pose scene"},
             {"noise_px", "0.5", "pose suite pixel noise"},
             {"outlier_fraction", "0", "pose suite outlier fraction"},
             {"out", "", "output directory"}});
  return k;
}

namespace {

PairDetector pair_detector_from(const RunConfig& cfg) {
  const std::string& kind = cfg.str("detector");
  if (kind == "harris") return per_image(harris_detector(harris_from(cfg)));
  if (kind == "oracle") return oracle_keypoints;
  if (kind == "learned") {
    const DetectorParams params = load_checkpoint(required(cfg, "checkpoint"));
    return per_image(learned_detector(params, cfg.real("q"), cfg.real("nms_radius"),
                                      cfg.count("max_k")));
  }
  if (kind == "files") {
    const fs::path root(required(cfg, "keypoints_dir"));
    return [root](const PairSample& p) {
      return KeypointPair{load_keypoints_csv((root / (p.id + "_a.csv")).string()),
                          load_keypoints_csv((root / (p.id + "_b.csv")).string())};
    };
  }
  throw input_error("detector must be harris, learned, oracle or files");
}

std::vector<PairSample> pairs_from(const RunConfig& cfg) {
  if (!cfg.str("pairs").empty()) return load_pairs(cfg.str("pairs"));
  const std::size_t n = cfg.count("synthetic");
  if (n == 0) throw input_error("synthetic pair count must be positive");
  return synthetic_pairs(n, cfg.u64("synth_seed"), cfg.count("width"), cfg.count("height"),
                         cfg.count("synth_shapes"));
}

std::string eps_plot(const EvalReport& rep, const std::string& metric, const std::string& title,
                     const std::string& y_label) {
  std::map<std::string, PlotSeries> by_split;
  for (const AggregateRow& a : rep.aggregates) {
    if (a.metric != metric) continue;
    PlotSeries& s = by_split[a.split];
    s.label = a.split;
    s.x.push_back(a.eps);
    s.y.push_back(a.value);
  }
  std::vector<PlotSeries> series;
  for (auto& [split, s] : by_split) series.push_back(std::move(s));
  return svg_line_plot(series, {title, "eps (px)", y_label, false, false});
}

}  // namespace

void cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const std::string& suite = cfg.str("suite");
  if (suite == "pose") {
    PoseSuiteConfig pc;
    pc.budgets = cfg.counts("budgets");
    pc.scenes = cfg.count("scenes");
    pc.points = cfg.count("points");
    pc.noise_px = cfg.real("noise_px");
    pc.outlier_fraction = cfg.real("outlier_fraction");
    pc.ransac = ransac_from(cfg);
    pc.seed = cfg.u64("seed");
    const PoseReport rep = eval_pose_suite(synth_stereo_scenes(pc), pc);
    const fs::path dir = prepare_out(cfg);
    write_file((dir / "report.csv").string(), rep.csv());
    PlotSeries mean_rot{"mean", {}, {}}, median_rot{"median", {}, {}};
    for (const PoseAggregate& a : rep.aggregates) {
      if (a.count == 0) continue;
      mean_rot.x.push_back(static_cast<double>(a.k));
      mean_rot.y.push_back(a.mean_rot);
      median_rot.x.push_back(static_cast<double>(a.k));
      median_rot.y.push_back(a.median_rot);
      out << "k " << a.k << " mean_rot " << fixed(a.mean_rot) << " median_rot "
          << fixed(a.median_rot) << " mean_trans " << fixed(a.mean_trans) << "\n";
    }
    write_file((dir / "report.svg").string(),
               svg_line_plot({mean_rot, median_rot},
                             {"rotation error vs keypoints", "k", "rotation error (rad)", true,
                              false}));
    return;
  }
  if (suite != "repeatability" && suite != "homography") {
    throw input_error("suite must be repeatability, homography or pose");
  }
  const PairDetector det = pair_detector_from(cfg);
  const std::vector<PairSample> pairs = pairs_from(cfg);
  EvalReport rep;
  std::string metric, title;
  if (suite == "repeatability") {
    RepeatabilitySuiteConfig rc;
    rc.eps = cfg.reals("eps");
    rc.budget = cfg.count("budget");
    rep = eval_repeatability_suite(det, pairs, rc);
    metric = "repeatability";
    title = "repeatability vs eps";
  } else {
    HomographySuiteConfig hc;
    hc.eps = cfg.reals("eps");
    hc.budget = cfg.count("budget");
    hc.match_distance = cfg.real("match_distance");
    hc.mutual = cfg.flag("mutual");
    const std::string& pw = cfg.str("prewarp");
    if (pw == "gt") {
      hc.prewarp = Prewarp::kGroundTruth;
    } else if (pw == "none") {
      hc.prewarp = Prewarp::kNone;
    } else {
      throw input_error("prewarp must be gt or none");
    }
    hc.ransac = ransac_from(cfg);
    rep = eval_homography_suite(det, pairs, hc);
    metric = "homography_correct";
    title = "homography accuracy vs eps";
  }
  const fs::path dir = prepare_out(cfg);
  write_file((dir / "report.csv").string(), rep.csv());
  write_file((dir / "report.svg").string(), eps_plot(rep, metric, title, metric));
  for (const AggregateRow& a : rep.aggregates) {
    if (a.split != "all" || a.metric != metric) continue;
    out << metric << " eps " << format_double(a.eps) << " " << fixed(a.value) << "\n";
  }
}

// --- inspect --------------------------------------------------------------

std::vector<KeySpec> inspect_keys() {
  return {{"heatmap", "", "raw-logit heatmap tensor (FPCT, [H, W])"},
          {"bins", "60", "histogram bins"},
          {"lo", "-10", "lower histogram edge"},
          {"hi", "5", "upper histogram edge (values outside go to the end bins)"},
          {"out", "", "output directory"}};
}

void cmd_inspect(const RunConfig& cfg, std::ostream& out) {
  Tensor t = load_tensor(required(cfg, "heatmap"));
  if (t.rank() != 2) throw Error(ErrorCode::kFormat, "heatmap tensor must be [H, W]");
  std::size_t above = 0;
  for (float v : t.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kFormat, "heatmap holds non-finite values");
    if (v > 0.0f) ++above;
  }
  const double fraction = static_cast<double>(above) / static_cast<double>(t.size());
  const Heatmap hm(std::move(t));
  const auto hist = activation_histogram(hm, cfg.count("bins"), cfg.real("lo"), cfg.real("hi"));
  const fs::path dir = prepare_out(cfg);
  write_file((dir / "histogram.csv").string(), histogram_csv(hist));
  out << "fraction_above_zero " << format_double(fraction) << "\n";
}

}  // namespace fpc::cli

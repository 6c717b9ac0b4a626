#pragma once

// Command implementations behind the egospan tool: synth, train, eval and
// infer, plus model files and output fingerprints.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "egospan/dataset.hpp"
#include "egospan/desk.hpp"
#include "egospan/nn/serialize.hpp"
#include "egospan/training.hpp"

namespace egospan::app {

namespace fs = std::filesystem;

enum class TrainStage { kShape, kStage1, kStage2 };

inline TrainStage parse_stage(const std::string& s) {
  if (s == "shape") return TrainStage::kShape;
  if (s == "stage1") return TrainStage::kStage1;
  if (s == "stage2") return TrainStage::kStage2;
  throw ConfigError("unknown stage '" + s + "' (valid: shape, stage1, stage2)");
}

// ---------------------------------------------------------------------------
// Model files: one header line naming the model and its construction
// settings, then a weight file.
//
//   egospan-model stage1 variant=fused window=64 image=256
//   egospan-model stage2 resolution=41 side=1.2599210498948732
//   egospan-model shape coord_maps=1 image=256

namespace detail {

inline std::map<std::string, std::string> read_model_header(std::istream& in, const std::string& kind,
                                                            const std::string& path) {
  std::string line;
  std::getline(in, line);
  std::istringstream s(line);
  std::string magic, got;
  s >> magic >> got;
  if (magic != "egospan-model") throw DataError("'" + path + "' is not a model file");
  if (got != kind) throw DataError("'" + path + "' holds a " + got + " model, expected " + kind);
  std::map<std::string, std::string> kv;
  for (std::string tok; s >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw DataError("'" + path + "': bad header field '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

inline const std::string& field(const std::map<std::string, std::string>& kv, const std::string& key,
                                const std::string& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw DataError("'" + path + "': header lacks " + key);
  return it->second;
}

inline std::ofstream open_out(const std::string& path) {
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

inline void save_model(const std::string& path, Stage1Model& m) {
  auto out = detail::open_out(path);
  out << "egospan-model stage1 variant=" << variant_name(m.config().variant) << " window=" << m.config().window
      << " image=" << m.config().image_size << "\n";
  nn::save_weights(out, m.describe(), m.params());
}

inline void save_model(const std::string& path, Stage2Model& m, const VolumeOptions& vol) {
  auto out = detail::open_out(path);
  out << std::setprecision(17) << "egospan-model stage2 resolution=" << vol.resolution << " side=" << vol.side << "\n";
  nn::save_weights(out, m.describe(), m.params());
}

inline void save_model(const std::string& path, ShapeNet& m) {
  auto out = detail::open_out(path);
  out << "egospan-model shape coord_maps=" << (m.config().coord_maps ? 1 : 0) << " image=" << m.config().image_size
      << "\n";
  nn::save_weights(out, m.describe(), m.params());
}

inline Stage1Model load_stage1(const std::string& path) {
  auto in = detail::open_in(path);
  const auto kv = detail::read_model_header(in, "stage1", path);
  NetConfig cfg;
  cfg.variant = parse_variant(detail::field(kv, "variant", path));
  cfg.window = std::stoi(detail::field(kv, "window", path));
  cfg.image_size = std::stoi(detail::field(kv, "image", path));
  Stage1Model m(cfg);
  nn::load_weights(in, m.describe(), m.params());
  return m;
}

struct LoadedStage2 {
  Stage2Model model;
  VolumeOptions volume;
};

inline LoadedStage2 load_stage2(const std::string& path) {
  auto in = detail::open_in(path);
  const auto kv = detail::read_model_header(in, "stage2", path);
  VolumeOptions vol;
  vol.resolution = std::stoi(detail::field(kv, "resolution", path));
  vol.side = std::stod(detail::field(kv, "side", path));
  vol.validate();
  LoadedStage2 out{Stage2Model(NetConfig{}, vol.resolution), vol};
  nn::load_weights(in, out.model.describe(), out.model.params());
  return out;
}

inline ShapeNet load_shape(const std::string& path) {
  auto in = detail::open_in(path);
  const auto kv = detail::read_model_header(in, "shape", path);
  NetConfig cfg;
  cfg.coord_maps = detail::field(kv, "coord_maps", path) == "1";
  cfg.image_size = std::stoi(detail::field(kv, "image", path));
  ShapeNet m(cfg);
  nn::load_weights(in, m.describe(), m.params());
  return m;
}

// ---------------------------------------------------------------------------
// Fingerprints

// FNV-1a over every regular file below root, in sorted path order, mixing in
// the relative path.
inline std::uint64_t hash_tree(const fs::path& root) {
  std::vector<fs::path> files;
  if (fs::is_regular_file(root)) files.push_back(root);
  else
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = fnv1a("");
  for (const auto& f : files) {
    h = fnv1a(fs::relative(f, fs::is_regular_file(root) ? root.parent_path() : root).generic_string(), h);
    h = fnv1a(egospan::detail::read_file(f), h);
  }
  return h;
}

inline std::string hex(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  std::string out;
  std::vector<std::string> motions = {"stand"};
  std::size_t frames = 120;
  std::size_t sequences = 1;  // per motion, seeds seed .. seed + sequences - 1
  std::uint64_t seed = 0;
  bool images = true;
  bool noise = false;
  std::size_t window = 64;
  std::vector<std::string> bvh;
  std::string joint_map;  // empty: CMU names
  double bvh_scale = 0.056444;
};

inline DatasetManifest run_synth(const SynthOptions& opt, std::ostream& log) {
  if (opt.out.empty()) throw ConfigError("synth needs an output directory");
  if (opt.frames < 1) throw ConfigError("frames must be positive");
  if (opt.sequences < 1) throw ConfigError("sequences must be positive");
  if (opt.window < 2) throw ConfigError("window must be at least 2");
  if (opt.motions.empty() && opt.bvh.empty()) throw ConfigError("nothing to synthesize: give motions or BVH files");
  std::vector<ProceduralMotion> motions;
  for (const auto& m : opt.motions) motions.push_back(parse_motion(m));
  JointNameTable table = JointNameTable::cmu();
  if (!opt.joint_map.empty()) {
    auto in = detail::open_in(opt.joint_map);
    table = JointNameTable::parse(in);
  }
  std::error_code ec;
  fs::create_directories(opt.out, ec);
  if (ec || !fs::is_directory(opt.out)) throw DataError("cannot create output directory '" + opt.out + "'");

  const FisheyeIntrinsics k;
  SequenceConfig cfg;
  cfg.render_images = opt.images;
  cfg.noise.enabled = opt.noise;
  cfg.mhi.window = opt.window;
  cfg.seed = opt.seed;
  DatasetManifest manifest;
  manifest.intrinsics = k;
  manifest.window = opt.window;
  manifest.seed = opt.seed;
  manifest.images = opt.images;
  const auto add = [&](const std::string& name, const std::string& motion, std::uint64_t seed, const Sequence& seq) {
    write_sequence(opt.out, name, seq);
    manifest.sequences.push_back({name, motion, seed, seq.frames.size(), seq.calibration});
    log << "  " << name << ": " << seq.frames.size() << " frames\n";
  };
  for (auto m : motions)
    for (std::size_t i = 0; i < opt.sequences; ++i) {
      const SequenceRecipe r{m, opt.seed + i, opt.frames, true};
      add(recipe_name(r), std::string(motion_name(m)), r.seed, generate_recipe(r, k, cfg));
    }
  BvhOptions bvh_opt;
  bvh_opt.unit_scale = opt.bvh_scale;
  for (const auto& path : opt.bvh) {
    const std::string name = fs::path(path).stem().string();
    const MocapClip clip = load_bvh(path, bvh_opt);
    add(name, "bvh", opt.seed, generate_sequence(bvh_track(clip, table, name), CapsuleBody::standard(), k, cfg));
  }
  write_manifest(opt.out, manifest);
  log << "synth: " << manifest.sequences.size() << " sequences, " << manifest.frame_count() << " frames -> "
      << opt.out << "\n";
  return manifest;
}

// ---------------------------------------------------------------------------
// Loading

inline void check_window(const DatasetManifest& m, int window, const std::string& what) {
  if (static_cast<int>(m.window) != window)
    throw ConfigError(what + " expects a motion history window of " + std::to_string(window) +
                      ", the dataset has " + std::to_string(m.window));
}

inline std::vector<FrameSample> load_samples(const std::string& root, const DatasetManifest& m, bool distance,
                                             bool images) {
  if (images && !m.images) throw DataError("dataset '" + root + "' was written without input images");
  std::vector<FrameSample> out;
  for (const auto& e : m.sequences) {
    const Sequence seq = read_sequence(root, e, images);
    for (const auto& f : seq.frames) out.push_back(make_sample(e.name, f, distance));
  }
  if (out.empty()) throw DataError("dataset '" + root + "' has no frames");
  return out;
}

// Camera standing height of the canonical subject in normalized units; the
// ratio to a calibrated standing height converts normalized meters to world
// meters.
inline double normalized_camera_height() {
  const BodyPose p = standing_pose();
  const CameraPose cam = attach_rig(p.at(kHead), head_pose_from_skeleton(p));
  return cam.position.y() * kNormalizedHeight / vertical_extent(p);
}

inline double calibrated_body_scale(const HeightCalibration& cal) {
  return cal.standing_height / normalized_camera_height();
}

// ---------------------------------------------------------------------------
// Inference pipeline: optional shape net for masks, Stage 1, optional Stage 2.

struct Pipeline {
  FisheyeIntrinsics k;
  std::optional<ShapeNet> shape;
  std::optional<Stage1Model> stage1;
  std::optional<LoadedStage2> stage2;

  struct Output {
    std::vector<Stage1Prediction> stage1;
    std::vector<PosePrediction> final;
  };

  bool needs_images() const { return shape.has_value(); }

  // Replaces sample masks with shape-net masks when a shape net is loaded.
  Output run(std::vector<FrameSample>& samples) const {
    if (!stage1) throw ConfigError("inference needs Stage-1 weights");
    if (shape) {
      const auto masks = predict_masks(*shape, samples);
      for (std::size_t i = 0; i < samples.size(); ++i) samples[i].mask = masks[i];
    }
    Output out;
    out.stage1 = predict_stage1(*stage1, samples);
    out.final = poses_of(out.stage1);
    if (stage2) {
      const auto s2 = make_stage2_samples(samples, out.stage1, k, stage2->volume);
      const auto refined = predict_stage2(stage2->model, s2);
      for (std::size_t i = 0; i < refined.size(); ++i) out.final[i].body = refined[i];
    }
    return out;
  }
};

inline Pipeline make_pipeline(const DatasetManifest& m, const std::string& stage1, const std::string& stage2,
                              const std::string& shape) {
  Pipeline p;
  p.k = m.intrinsics;
  if (stage1.empty()) throw ConfigError("Stage-1 weights are required");
  p.stage1 = load_stage1(stage1);
  check_window(m, p.stage1->config().window, "the Stage-1 model");
  if (!stage2.empty()) p.stage2 = load_stage2(stage2);
  if (!shape.empty()) p.shape = load_shape(shape);
  return p;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string dataset;
  std::string out;
  std::string log;  // loss CSV; empty: <out>.loss.csv
  TrainStage stage = TrainStage::kStage1;
  Variant variant = Variant::kFused;
  TrainConfig train;
  bool coord_maps = true;
  std::string stage1_weights;  // Stage-2 input
  VolumeOptions volume;
  bool smoke = false;
  bool deterministic = false;
};

struct TrainSummary {
  TrainResult result;
  std::optional<SmokeResult> smoke;
  std::size_t frames = 0;
};

inline TrainSummary run_train(const TrainOptions& opt, std::ostream& log) {
  if (opt.dataset.empty()) throw ConfigError("train needs a dataset");
  if (opt.out.empty()) throw ConfigError("train needs an output weights path");
  if (opt.stage == TrainStage::kStage2 && opt.stage1_weights.empty())
    throw ConfigError("stage2 training needs Stage-1 weights (--stage1)");
  if (opt.smoke && opt.stage != TrainStage::kStage1) throw ConfigError("the overfit smoke test runs on stage1");
  opt.train.validate();
  opt.volume.validate();
  if (opt.deterministic) worker_limit() = 1;
  const DatasetManifest m = read_manifest(opt.dataset);
  const FisheyeIntrinsics& k = m.intrinsics;
  TrainConfig cfg = opt.train;
  if (cfg.dump_path.empty()) cfg.dump_path = opt.out + ".diverged";
  const std::string log_path = opt.log.empty() ? opt.out + ".loss.csv" : opt.log;
  TrainSummary summary;
  std::mt19937_64 rng(cfg.seed);

  if (opt.stage == TrainStage::kShape) {
    const auto samples = load_samples(opt.dataset, m, false, true);
    summary.frames = samples.size();
    NetConfig nc;
    nc.coord_maps = opt.coord_maps;
    nc.image_size = k.width;
    ShapeNet net(nc);
    net.init(rng);
    auto csv = detail::open_out(log_path);
    summary.result = train_shape(net, samples, cfg, &csv);
    save_model(opt.out, net);
    log << "shape: mean IoU on training frames " << mean_iou(predict_masks(net, samples), samples) << "\n";
  } else {
    NetConfig nc;
    nc.variant = opt.variant;
    nc.window = static_cast<int>(m.window);
    nc.image_size = k.width;
    const bool distance = cfg.consistency && cfg.loss.gamma > 0.0;
    auto samples = load_samples(opt.dataset, m, distance, false);
    summary.frames = samples.size();
    if (opt.stage == TrainStage::kStage1) {
      Stage1Model model(nc);
      model.init(rng);
      if (opt.smoke) {
        summary.smoke = overfit_smoke(model, spread_batch(samples, 4), k, cfg);
        summary.result = summary.smoke->run;
        log << "smoke: L_d " << summary.smoke->final_d << " after " << summary.result.epochs.back().step
            << " steps, loss " << (summary.smoke->decreasing ? "decreasing" : "not decreasing") << "\n";
        if (!summary.smoke->passed) throw NumericalError("overfit smoke test failed");
        return summary;
      }
      auto csv = detail::open_out(log_path);
      summary.result = train_stage1(model, samples, k, cfg, &csv);
      save_model(opt.out, model);
    } else {
      const Stage1Model s1 = load_stage1(opt.stage1_weights);
      check_window(m, s1.config().window, "the Stage-1 model");
      const auto s2 = make_stage2_samples(samples, predict_stage1(s1, samples), k, opt.volume);
      Stage2Model model(nc, opt.volume.resolution);
      model.init(rng);
      auto csv = detail::open_out(log_path);
      summary.result = train_stage2(model, s2, k, cfg, &csv);
      save_model(opt.out, model, opt.volume);
    }
  }
  if (summary.result.preflight)
    log << "preflight gradient check: max relative error " << summary.result.preflight->max_rel_error << " over "
        << summary.result.preflight->checked << " coordinates\n";
  for (const auto& e : summary.result.epochs)
    log << "epoch " << e.epoch << ": total " << e.mean.total << " (L_d " << e.mean.d << ")\n";
  log << "wrote " << opt.out << " and " << log_path << "\n";
  return summary;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string dataset;
  std::string out;  // directory for frames.csv, summary.csv, table.txt
  std::string stage1_weights, stage2_weights, shape_weights;
  bool ground_truth_row = false;
  bool deterministic = false;
};

inline std::vector<EvalReport> run_eval(const EvalOptions& opt, std::ostream& log) {
  if (opt.dataset.empty()) throw ConfigError("eval needs a dataset");
  if (opt.out.empty()) throw ConfigError("eval needs an output directory");
  if (!opt.stage2_weights.empty() && opt.stage1_weights.empty())
    throw ConfigError("Stage-2 evaluation needs Stage-1 weights");
  if (opt.deterministic) worker_limit() = 1;
  const DatasetManifest m = read_manifest(opt.dataset);
  std::optional<Pipeline> pipe;
  if (!opt.stage1_weights.empty()) pipe = make_pipeline(m, opt.stage1_weights, opt.stage2_weights, opt.shape_weights);
  std::vector<EvalReport> reports(2);
  reports[0].method = baseline_name(Baseline::kAllStand);
  reports[1].method = baseline_name(Baseline::kAllSit);
  EvalReport truth, s1, full;
  truth.method = "GroundTruth";
  s1.method = "Stage1";
  full.method = "FullModel";
  for (const auto& e : m.sequences) {
    const Sequence seq = read_sequence(opt.dataset, e, pipe && pipe->needs_images());
    std::vector<FrameSample> samples;
    for (const auto& f : seq.frames) samples.push_back(make_sample(e.name, f, false));
    const auto append = [](EvalReport& into, const EvalReport& part) {
      into.frames.insert(into.frames.end(), part.frames.begin(), part.frames.end());
    };
    append(reports[0], evaluate_baseline(Baseline::kAllStand, samples));
    append(reports[1], evaluate_baseline(Baseline::kAllSit, samples));
    if (opt.ground_truth_row) {
      std::vector<PosePrediction> gt;
      for (const auto& s : samples) gt.push_back({s.body_pose(), s.head_pose()});
      append(truth, evaluate_predictions(truth.method, samples, gt));
    }
    if (pipe) {
      const auto out = pipe->run(samples);
      append(s1, evaluate_predictions(s1.method, samples, poses_of(out.stage1)));
      if (pipe->stage2) append(full, evaluate_predictions(full.method, samples, out.final));
    }
  }
  if (opt.ground_truth_row) reports.push_back(truth);
  if (pipe) reports.push_back(s1);
  if (pipe && pipe->stage2) reports.push_back(full);
  fs::create_directories(opt.out);
  {
    auto f = detail::open_out((fs::path(opt.out) / "frames.csv").string());
    write_frame_csv(f, reports);
    auto s = detail::open_out((fs::path(opt.out) / "summary.csv").string());
    write_summary_csv(s, reports);
    auto t = detail::open_out((fs::path(opt.out) / "table.txt").string());
    write_table(t, reports);
  }
  write_table(log, reports);
  return reports;
}

// ---------------------------------------------------------------------------
// infer

struct InferOptions {
  std::string dataset;
  std::string out;  // directory
  std::string stage1_weights, stage2_weights, shape_weights;
  std::string sequence;  // empty: all
  bool plot = false;
  bool global = false;
  bool deterministic = false;
};

namespace detail {

inline void draw_line(RgbImage& img, Vec2 a, Vec2 b, std::array<std::uint8_t, 3> color) {
  const int steps = static_cast<int>(std::ceil(std::max(std::abs(b.x() - a.x()), std::abs(b.y() - a.y())))) + 1;
  for (int i = 0; i <= steps; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / steps);
    const int x = static_cast<int>(std::lround(p.x())), y = static_cast<int>(std::lround(p.y()));
    for (int dy = 0; dy <= 1; ++dy)
      for (int dx = 0; dx <= 1; ++dx)
        if (x + dx >= 0 && y + dy >= 0 && x + dx < img.width && y + dy < img.height)
          for (int c = 0; c < 3; ++c) img.at(x + dx, y + dy, c) = color[static_cast<std::size_t>(c)];
  }
}

}  // namespace detail

// Front view (left panel, wearer facing the viewer) and side view (right
// panel) of the local pose; head arrows f in red and u in green.
inline RgbImage plot_pose(const PosePrediction& p, int panel = 256) {
  RgbImage img(2 * panel, panel);
  std::fill(img.data.begin(), img.data.end(), std::uint8_t{255});
  const double scale = panel / 2.4;
  const auto front = [&](const Vec3& v) { return Vec2(panel / 2.0 - scale * v.x(), panel * 0.55 - scale * v.y()); };
  const auto side = [&](const Vec3& v) { return Vec2(1.5 * panel + scale * v.z(), panel * 0.55 - scale * v.y()); };
  std::vector<std::pair<std::size_t, std::size_t>> bones = {{kPelvis, kNeck}, {kNeck, kHead}};
  for (const auto& b : kBones) bones.emplace_back(b.from, b.to);
  for (const auto& view : {std::function<Vec2(const Vec3&)>(front), std::function<Vec2(const Vec3&)>(side)}) {
    for (const auto& [a, b] : bones) detail::draw_line(img, view(p.body.at(a)), view(p.body.at(b)), {40, 40, 40});
    const Vec3 h = p.body.at(kHead);
    detail::draw_line(img, view(h), view(h + 0.3 * p.head.f.normalized()), {220, 30, 30});
    detail::draw_line(img, view(h), view(h + 0.3 * p.head.u.normalized()), {30, 160, 30});
  }
  return img;
}

struct InferSummary {
  std::size_t frames = 0;
  std::size_t plots = 0;
};

inline InferSummary run_infer(const InferOptions& opt, std::ostream& log) {
  if (opt.dataset.empty()) throw ConfigError("infer needs a dataset");
  if (opt.out.empty()) throw ConfigError("infer needs an output directory");
  if (opt.deterministic) worker_limit() = 1;
  const DatasetManifest m = read_manifest(opt.dataset);
  const Pipeline pipe = make_pipeline(m, opt.stage1_weights, opt.stage2_weights, opt.shape_weights);
  fs::create_directories(opt.out);
  auto poses = detail::open_out((fs::path(opt.out) / "poses.csv").string());
  poses << "sequence,frame";
  for (const auto& name : kKeypointNames) poses << "," << name << "_x," << name << "_y," << name << "_z";
  poses << ",f_x,f_y,f_z,u_x,u_y,u_z\n" << std::setprecision(17);
  std::ofstream world;
  if (opt.global) {
    world = detail::open_out((fs::path(opt.out) / "global.csv").string());
    world << "sequence,frame";
    for (const auto& name : kKeypointNames) world << "," << name << "_x," << name << "_y," << name << "_z";
    world << "\n" << std::setprecision(17);
  }
  if (opt.plot) fs::create_directories(fs::path(opt.out) / "plots");
  InferSummary summary;
  bool found = opt.sequence.empty();
  for (const auto& e : m.sequences) {
    if (!opt.sequence.empty() && e.name != opt.sequence) continue;
    found = true;
    const Sequence seq = read_sequence(opt.dataset, e, pipe.needs_images());
    std::vector<FrameSample> samples;
    for (const auto& f : seq.frames) samples.push_back(make_sample(e.name, f, false));
    const auto out = pipe.run(samples);
    RepositionOptions ropt;
    ropt.body_scale = calibrated_body_scale(seq.calibration);
    RepositionState state;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const PosePrediction& p = out.final[i];
      poses << e.name << "," << seq.frames[i].index;
      for (std::size_t k = 0; k < kNumKeypoints; ++k)
        for (int c = 0; c < 3; ++c) poses << "," << p.body.at(k)[c];
      for (int c = 0; c < 3; ++c) poses << "," << p.head.f[c];
      for (int c = 0; c < 3; ++c) poses << "," << p.head.u[c];
      poses << "\n";
      if (opt.global) {
        const BodyPose w = reposition_global(p.body, p.head, seq.frames[i].tracked_camera, ropt, &state);
        world << e.name << "," << seq.frames[i].index;
        for (std::size_t k = 0; k < kNumKeypoints; ++k)
          for (int c = 0; c < 3; ++c) world << "," << w.at(k)[c];
        world << "\n";
      }
      if (opt.plot) {
        write_ppm((fs::path(opt.out) / "plots" / (e.name + "_" + egospan::detail::frame_file(seq.frames[i].index, ".ppm")))
                      .string(),
                  plot_pose(p));
        ++summary.plots;
      }
      ++summary.frames;
    }
  }
  if (!found) throw DataError("no sequence named '" + opt.sequence + "' in " + opt.dataset);
  log << "infer: " << summary.frames << " frames -> " << opt.out << "\n";
  return summary;
}

}  // namespace egospan::app

// egospan: synthesize datasets, train, evaluate and run inference.
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numerical failure.

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "egospan/app.hpp"

using namespace egospan;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Egocentric body and head pose estimation from a front-facing fisheye camera.");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "key=value settings file; keys are <command>.<option> or grouped under [command]");
  app.allow_config_extras(CLI::config_extras_mode::error);

  // synth
  app::SynthOptions synth;
  std::string motions = "stand";
  bool no_images = false, synth_det = false;
  auto* cs = app.add_subcommand("synth", "Render labeled procedural or BVH sequences into a dataset directory");
  cs->fallthrough();
  cs->add_option("--out", synth.out, "Output dataset directory (created if missing)")->required();
  cs->add_option("--motions", motions, "Comma-separated procedural motions: " + motion_id_list());
  cs->add_option("--frames", synth.frames, "Labeled frames per procedural sequence");
  cs->add_option("--sequences", synth.sequences, "Sequences per motion, seeds seed .. seed+n-1");
  cs->add_option("--seed", synth.seed, "Base seed");
  cs->add_option("--window", synth.window, "Motion history window T");
  cs->add_flag("--no-images", no_images, "Skip rendering input images (masks only)");
  cs->add_flag("--noise", synth.noise, "Perturb the camera track with SLAM-like noise");
  cs->add_option("--bvh", synth.bvh, "BVH files to add as sequences");
  cs->add_option("--joint-map", synth.joint_map, "Keypoint to joint name table for BVH files (default: CMU names)");
  cs->add_option("--bvh-scale", synth.bvh_scale, "Meters per BVH unit");
  cs->add_flag("--deterministic", synth_det, "Single worker (output is identical either way)");

  // train
  app::TrainOptions train;
  std::string stage = "stage1", variant = "fused", optimizer = "adam";
  bool no_consistency = false, no_preflight = false, no_coord_maps = false;
  auto* ct = app.add_subcommand("train", "Train the shape net, Stage 1 or Stage 2");
  ct->fallthrough();
  ct->add_option("--dataset", train.dataset, "Dataset directory")->required();
  ct->add_option("--out", train.out, "Output model file")->required();
  ct->add_option("--log", train.log, "Loss CSV (default: <out>.loss.csv)");
  ct->add_option("--stage", stage, "shape, stage1 or stage2");
  ct->add_option("--variant", variant, "Stage-1 variant: fused, motion_only, shape_only, no_height");
  ct->add_option("--stage1", train.stage1_weights, "Stage-1 model (required for stage2)");
  ct->add_option("--epochs", train.train.epochs, "Epochs");
  ct->add_option("--batch", train.train.batch, "Batch size");
  ct->add_option("--optimizer", optimizer, "adam or sgd (with momentum)");
  ct->add_option("--lr", train.train.optimizer.lr, "Learning rate");
  ct->add_option("--momentum", train.train.optimizer.momentum, "SGD momentum");
  ct->add_flag("--cosine", train.train.cosine_decay, "Cosine learning-rate decay to zero");
  ct->add_option("--seed", train.train.seed, "Initialization and shuffling seed");
  ct->add_option("--alpha", train.train.loss.alpha, "Weight of the head orthonormality term L_o");
  ct->add_option("--beta", train.train.loss.beta, "Weight of the bone symmetry term L_s");
  ct->add_option("--gamma", train.train.loss.gamma, "Weight of the silhouette consistency term L_c");
  ct->add_option("--q", train.train.loss.q, "Distance truncation of L_c, pixels");
  ct->add_flag("--no-consistency", no_consistency, "Drop L_c");
  ct->add_flag("--no-preflight", no_preflight, "Skip the gradient check before training");
  ct->add_option("--preflight-samples", train.train.preflight_samples, "Coordinates sampled by the preflight check");
  ct->add_option("--time-limit", train.train.time_limit_s, "Stop after the epoch that passes this many seconds (0: off)");
  ct->add_option("--volume-resolution", train.volume.resolution, "Pose volume voxels per side (stage2)");
  ct->add_option("--volume-side", train.volume.side, "Pose volume cube side, meters (stage2)");
  ct->add_flag("--no-coord-maps", no_coord_maps, "Shape net without coordinate channels");
  ct->add_flag("--smoke", train.smoke, "Overfit one batch for 500 steps and require L_d < 0.02");
  ct->add_flag("--deterministic", train.deterministic, "Single-threaded, bitwise reproducible");

  // eval
  app::EvalOptions eval;
  auto* ce = app.add_subcommand("eval", "Evaluate models and constant baselines on a dataset");
  ce->fallthrough();
  ce->add_option("--dataset", eval.dataset, "Dataset directory")->required();
  ce->add_option("--out", eval.out, "Output directory for frames.csv, summary.csv and table.txt")->required();
  ce->add_option("--stage1", eval.stage1_weights, "Stage-1 model");
  ce->add_option("--stage2", eval.stage2_weights, "Stage-2 model");
  ce->add_option("--shape", eval.shape_weights, "Shape net; its masks replace the ground-truth masks");
  ce->add_flag("--ground-truth-row", eval.ground_truth_row, "Add a row scoring the labels against themselves");
  ce->add_flag("--deterministic", eval.deterministic, "Single-threaded");

  // infer
  app::InferOptions infer;
  auto* ci = app.add_subcommand("infer", "Write per-frame pose estimates, optional plots and world track");
  ci->fallthrough();
  ci->add_option("--dataset", infer.dataset, "Dataset directory")->required();
  ci->add_option("--out", infer.out, "Output directory")->required();
  ci->add_option("--stage1", infer.stage1_weights, "Stage-1 model")->required();
  ci->add_option("--stage2", infer.stage2_weights, "Stage-2 model");
  ci->add_option("--shape", infer.shape_weights, "Shape net; its masks replace the ground-truth masks");
  ci->add_option("--sequence", infer.sequence, "Only this sequence");
  ci->add_flag("--plot", infer.plot, "Render a skeleton and head-arrow PPM per frame");
  ci->add_flag("--global", infer.global, "Also write the world-frame keypoint track");
  ci->add_flag("--deterministic", infer.deterministic, "Single-threaded");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (cs->parsed()) {
      synth.motions = split_list(motions);
      synth.images = !no_images;
      if (synth_det) worker_limit() = 1;
      app::run_synth(synth, std::cout);
    } else if (ct->parsed()) {
      train.stage = app::parse_stage(stage);
      train.variant = parse_variant(variant);
      train.train.optimizer.kind = nn::parse_optimizer(optimizer);
      train.train.consistency = !no_consistency;
      train.train.preflight = !no_preflight;
      train.coord_maps = !no_coord_maps;
      app::run_train(train, std::cout);
    } else if (ce->parsed()) {
      app::run_eval(eval, std::cout);
    } else if (ci->parsed()) {
      app::run_infer(infer, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const GeometryError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}

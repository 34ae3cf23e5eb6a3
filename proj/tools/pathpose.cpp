// Copyright 2026 The pathpose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// pathpose command-line entry point.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/os.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pathpose/checkpoint.hpp"
#include "pathpose/data_io.hpp"
#include "pathpose/error.hpp"
#include "pathpose/eval.hpp"
#include "pathpose/run_config.hpp"
#include "pathpose/training.hpp"

namespace fs = std::filesystem;
using namespace pathpose;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("pathpose");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("PATHPOSE_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only honour real names.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

// --- generate ----------------------------------------------------------------

struct GenerateArgs {
  std::string config;
  std::string scene_file;
  std::string out;
  std::string write_scene_to;
  std::string video_id = "synthetic";
  int structures = 8;
  std::uint64_t scene_seed = 7;
  int frames = 4000;
  int passes = 4;
  std::uint64_t seed = 7;
  double angle_max_deg = 45.0;
  double angle_sd_deg = 1.0;
  double persistence = 0.98;
};

void add_generate(CLI::App& app, GenerateArgs& a) {
  auto* cmd = app.add_subcommand("generate", "Render a synthetic corridor trajectory to a dataset");
  cmd->add_option("--config", a.config, "Run config; its scene and trajectory sections seed the defaults")
      ->check(CLI::ExistingFile);
  cmd->add_option("--scene", a.scene_file, "Scene spec file instead of the generated default scene")
      ->check(CLI::ExistingFile);
  cmd->add_option("--structures", a.structures, "Structures in the generated default scene");
  cmd->add_option("--scene-seed", a.scene_seed, "Seed of the generated default scene");
  cmd->add_option("--frames", a.frames, "Frames to render");
  cmd->add_option("--passes", a.passes, "Forward and backward sweeps through the corridor");
  cmd->add_option("--seed", a.seed, "Trajectory seed");
  cmd->add_option("--angle-max", a.angle_max_deg, "Pitch/yaw clamp in degrees");
  cmd->add_option("--angle-sd", a.angle_sd_deg, "Per-frame angle noise in degrees");
  cmd->add_option("--persistence", a.persistence, "Angle persistence of the random walk");
  cmd->add_option("--video-id", a.video_id, "Video id stored with every record");
  cmd->add_option("--write-scene", a.write_scene_to, "Also write the scene spec used");
  cmd->add_option("--out", a.out, "Dataset file to write")->required();
}

int run_generate(const CLI::App& cmd, const GenerateArgs& a) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = read_run_config(a.config);
  auto given = [&](const char* flag) { return cmd.count(flag) > 0 || a.config.empty(); };
  if (given("--structures")) cfg.scene.n_structures = a.structures;
  if (given("--scene-seed")) cfg.scene.seed = a.scene_seed;
  if (!a.scene_file.empty()) cfg.scene.file = a.scene_file;
  if (given("--frames")) cfg.trajectory.n_frames = a.frames;
  if (given("--passes")) cfg.trajectory.n_passes = a.passes;
  if (given("--seed")) cfg.trajectory.seed = a.seed;
  if (given("--angle-max")) cfg.trajectory.angle_max = Angle::degrees(a.angle_max_deg);
  if (given("--angle-sd")) cfg.trajectory.angle_step_sd = Angle::degrees(a.angle_sd_deg);
  if (given("--persistence")) cfg.trajectory.angle_persistence = a.persistence;

  cfg.trajectory.validate();
  const Scene scene = cfg.scene.build();
  scene.validate();
  spdlog::info("rendering {} frames over {} passes, {} structures", cfg.trajectory.n_frames,
               cfg.trajectory.n_passes, scene.n_classes());
  const auto frames = to_records(generate_trajectory(scene, cfg.trajectory), a.video_id);
  write_dataset(frames, a.out, static_cast<int>(scene.n_classes()));
  if (!a.write_scene_to.empty()) write_scene(scene, a.write_scene_to);
  spdlog::info("wrote {}", a.out);
  return kExitOk;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  bool no_rotation = false;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<int> warmup;
  std::optional<int> batch_size;
  std::optional<std::uint64_t> seed;
  int checkpoint_every = 50;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* cmd = app.add_subcommand("train", "Train the autoencoder; writes a run directory");
  cmd->add_option("--data", a.data, "Dataset file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--config", a.config, "Run config (model and training sections)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "Run directory")->required();
  cmd->add_flag("--no-rotation", a.no_rotation, "Train the rotation-free ablation");
  cmd->add_option("--epochs", a.epochs, "training.epochs (default: config)");
  cmd->add_option("--lr", a.lr, "training.lr_peak (default: config)");
  cmd->add_option("--warmup", a.warmup, "training.warmup_epochs (default: config)");
  cmd->add_option("--batch-size", a.batch_size, "training.batch_size (default: config)");
  cmd->add_option("--seed", a.seed, "Model and training seeds (default: config)");
  cmd->add_option("--checkpoint-every", a.checkpoint_every,
                  "Epochs between periodic checkpoints; 0 keeps only the final one");
}

int run_train(const TrainArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : read_run_config(a.config);
  if (a.epochs) cfg.training.epochs = *a.epochs;
  if (a.lr) cfg.training.lr_peak = *a.lr;
  if (a.warmup) cfg.training.warmup_epochs = *a.warmup;
  if (a.batch_size) cfg.training.batch_size = *a.batch_size;
  if (a.seed) cfg.model.seed = cfg.training.seed = *a.seed;
  if (a.no_rotation) cfg.model.rotation_enabled = false;
  if (a.checkpoint_every < 0) throw ConfigError("--checkpoint-every must be >= 0");

  // The data decides the class count; the scene section follows so the
  // snapshot stays self-consistent.
  cfg.model.n_classes = read_dataset_classes(a.data);
  cfg.scene.n_structures = cfg.model.n_classes;
  cfg.scene.file.clear();
  cfg.model.validate();
  cfg.training.validate();

  const auto frames = read_dataset(a.data);
  const fs::path run = a.out;
  const fs::path ckpt_dir = run / "checkpoints";
  fs::create_directories(ckpt_dir);
  write_run_config(cfg, run / "config.json");

  auto history = fmt::output_file((run / "history.tsv").string());
  history.print("epoch\tlr\ttotal\tbce\tbox\tcentering\n");
  spdlog::info("training {} ({} parameters) for {} epochs on {} frames",
               cfg.model.rotation_enabled ? "rotation model" : "no-rotation ablation",
               parameter_count(cfg.model), cfg.training.epochs, frames.size());
  const auto on_epoch = [&](int epoch, const LossBreakdown& l, const ModelParams& p) {
    history.print("{}\t{}\t{}\t{}\t{}\t{}\n", epoch, learning_rate(cfg.training, epoch), l.total,
                  l.bce_term, l.box_term, l.centering_term);
    history.flush();
    spdlog::debug("epoch {} loss {:.5f}", epoch, l.total);
    if (a.checkpoint_every > 0 && (epoch + 1) % a.checkpoint_every == 0) {
      save_checkpoint(p, ckpt_dir / fmt::format("epoch_{:05d}.json", epoch + 1));
    }
  };
  const TrainResult result = train(frames, cfg.model, cfg.training, on_epoch);
  history.close();
  save_checkpoint(result.params, run / "model.json");
  if (result.skipped_batches > 0) {
    spdlog::warn("{} batches skipped on degenerate rotations", result.skipped_batches);
  }
  spdlog::info("loss {:.5f} -> {:.5f}; checkpoint {}", result.history.front().total,
               result.history.back().total, (run / "model.json").string());
  return kExitOk;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string data;
  std::string ckpt;
  std::string report;
  std::string table;
  std::string config;
  int bins = 10;
  int stride = 16;
  int min_visits = 5;
  bool oracle = false;
  double corridor_length = 10.0;
  int seq_len = 16;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* cmd = app.add_subcommand("eval", "Angle errors, depth correlation and latent spread");
  cmd->add_option("--data", a.data, "Dataset with ground-truth poses")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--ckpt", a.ckpt, "Checkpoint manifest")->check(CLI::ExistingFile);
  cmd->add_option("--report", a.report, "Report file to write")->required();
  cmd->add_option("--config", a.config, "Run config; its eval section sets the defaults")
      ->check(CLI::ExistingFile);
  cmd->add_option("--bins", a.bins, "Depth bins for the latent spread");
  cmd->add_option("--stride", a.stride, "Use every k-th window for angles and correlation");
  cmd->add_option("--min-visits", a.min_visits, "Windows required in every depth bin");
  cmd->add_option("--table", a.table, "Also write a per-window latent table");
  // Test mode: replace the model by z1 = depth / L and the true angles.
  cmd->add_flag("--oracle-z1", a.oracle)->group("");
  cmd->add_option("--corridor-length", a.corridor_length)->group("");
  cmd->add_option("--seq-len", a.seq_len)->group("");
}

int run_eval(const CLI::App& cmd, const EvalArgs& a) {
  EvalConfig ecfg = a.config.empty() ? EvalConfig{} : read_run_config(a.config).eval;
  if (cmd.count("--bins") > 0 || a.config.empty()) ecfg.bins = a.bins;
  if (cmd.count("--stride") > 0 || a.config.empty()) ecfg.stride = a.stride;
  if (cmd.count("--min-visits") > 0 || a.config.empty()) ecfg.min_visits = a.min_visits;
  ecfg.validate();
  if (a.ckpt.empty() && !a.oracle) throw ConfigError("eval needs --ckpt");

  const auto frames = read_dataset(a.data);
  LatentPredictor predict;
  int seq_len = a.seq_len;
  std::string variant = "oracle";
  if (a.oracle) {
    predict = oracle_predictor(a.corridor_length);
  } else {
    const ModelParams params = load_checkpoint(a.ckpt);
    predict = model_predictor(params);
    seq_len = params.config.seq_len;
    variant = params.config.rotation_enabled ? "rotation" : "no-rotation";
  }
  const EvalReport report = evaluate(predict, frames, seq_len, ecfg, variant);
  write_report(report, a.report);
  if (!a.table.empty()) {
    const auto wins = posed_windows(frames, seq_len, 1);
    write_latent_table(frames, wins, predict(frames, wins), a.table);
  }
  spdlog::info("|r| {:.4f}, mean |pitch err| {:.3f} deg, mean |yaw err| {:.3f} deg, spread {:.4f}",
               report.correlation.abs_r, report.angles.mean_abs_pitch_err,
               report.angles.mean_abs_yaw_err, report.spread.mean_range);
  return kExitOk;
}

// --- infer -------------------------------------------------------------------

struct InferArgs {
  std::string ckpt;
  std::string data;
  std::string out;
  std::vector<double> reference;
};

void add_infer(CLI::App& app, InferArgs& a) {
  auto* cmd = app.add_subcommand("infer", "Per-window latent codes and optional guidance deltas");
  cmd->add_option("--ckpt", a.ckpt, "Checkpoint manifest")->required()->check(CLI::ExistingFile);
  cmd->add_option("--data", a.data, "Dataset file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "Tab-separated output table")->required();
  cmd->add_option("--reference", a.reference, "Reference latent z1,z2,z3 for guidance")
      ->delimiter(',')
      ->expected(3)
      ->default_str("");
}

int run_infer(const InferArgs& a) {
  std::optional<LatentCode> reference;
  if (!a.reference.empty()) {
    const LatentCode ref{a.reference[0], a.reference[1], a.reference[2]};
    if (!(ref.z1 >= 0.0 && ref.z1 <= 1.0 && std::abs(ref.z2) <= 1.0 && std::abs(ref.z3) <= 1.0)) {
      throw ConfigError("--reference must satisfy z1 in [0,1] and |z2|, |z3| <= 1");
    }
    reference = ref;
  }
  const ModelParams params = load_checkpoint(a.ckpt);
  const auto frames = read_dataset(a.data);
  const auto wins = windows(frames, params.config.seq_len);
  const auto codes = model_predictor(params)(frames, wins);

  std::ofstream out(a.out);
  if (!out) throw IoError("cannot write " + a.out);
  out << "video\tframe\tz1\tz2\tz3\tpitch_deg\tyaw_deg";
  if (reference) out << "\td_pitch_deg\td_yaw_deg\td_path";
  out << '\n';
  for (std::size_t i = 0; i < wins.size(); ++i) {
    const FrameRecord& f = frames[wins[i].last];
    const LatentCode& z = codes[i];
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}", f.video_id, f.frame_index, z.z1, z.z2, z.z3,
                       z.pitch().deg(), z.yaw().deg());
    if (reference) {
      const GuidanceDelta g = guidance_delta(z, *reference);
      out << fmt::format("\t{}\t{}\t{}", g.d_pitch_deg, g.d_yaw_deg, g.d_path);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + a.out);
  spdlog::info("wrote {} rows to {}", wins.size(), a.out);
  return kExitOk;
}

// --- ingest / export ---------------------------------------------------------

struct IngestArgs {
  std::string yolo_dir;
  int classes = 16;
  std::vector<int> drop;
  int stride = 1;
  std::string out;
};

void add_ingest(CLI::App& app, IngestArgs& a) {
  auto* cmd = app.add_subcommand("ingest", "Convert YOLO label directories into a dataset");
  cmd->add_option("--yolo-dir", a.yolo_dir, "Label directory (one video, or one per subdirectory)")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--classes", a.classes, "Detector class count before dropping");
  cmd->add_option("--drop", a.drop, "Comma-separated class ids to drop")
      ->delimiter(',')
      ->default_str("");
  cmd->add_option("--stride", a.stride, "Keep every k-th frame file");
  cmd->add_option("--out", a.out, "Dataset file to write")->required();
}

int run_ingest(const IngestArgs& a) {
  const ClassMap classes = ClassMap::dropping(a.classes, std::set<int>(a.drop.begin(), a.drop.end()));
  const auto frames = ingest_yolo_labels(a.yolo_dir, classes, a.stride);
  write_dataset(frames, a.out, classes.n_kept());
  spdlog::info("ingested {} frames with {} classes into {}", frames.size(), classes.n_kept(), a.out);
  return kExitOk;
}

struct ExportArgs {
  std::string data;
  std::string out_dir;
};

void add_export(CLI::App& app, ExportArgs& a) {
  auto* cmd = app.add_subcommand("export", "Write a dataset as YOLO label files");
  cmd->add_option("--data", a.data, "Dataset file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out-dir", a.out_dir, "Directory receiving <video>/<frame>.txt")->required();
}

int run_export(const ExportArgs& a) {
  const auto frames = read_dataset(a.data);
  export_yolo_labels(frames, a.out_dir);
  spdlog::info("exported {} frames to {}", frames.size(), a.out_dir);
  return kExitOk;
}

// --- config ------------------------------------------------------------------

struct ConfigArgs {
  bool reference = false;
  std::string out;
};

void add_config(CLI::App& app, ConfigArgs& a) {
  auto* cmd = app.add_subcommand("config", "Print a complete run config");
  cmd->add_flag("--reference", a.reference, "The desk-scale reference setup instead of defaults");
  cmd->add_option("--out", a.out, "Write to a file instead of stdout");
}

int run_config(const ConfigArgs& a) {
  const RunConfig cfg = a.reference ? reference_desk_config() : RunConfig{};
  if (a.out.empty()) {
    fmt::print("{}\n", to_json(cfg).dump(2));
  } else {
    write_run_config(cfg, a.out);
  }
  return kExitOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return kExitNumeric;
  if (dynamic_cast<const IoError*>(&e) != nullptr) return kExitIo;
  if (dynamic_cast<const Error*>(&e) != nullptr) return kExitValidation;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e) != nullptr) return kExitIo;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pathpose: surgical-path position and viewing-angle embedding from detections",
               "pathpose"};
  app.set_help_all_flag("--help-all", "Print help for every subcommand");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.footer(
      "Exit codes: 0 ok, 2 validation or config error, 3 numeric error, 4 I/O error.\n"
      "Environment: PATHPOSE_LOG sets log verbosity (trace, debug, info, warn, error, off).");

  GenerateArgs gen;
  TrainArgs tr;
  EvalArgs ev;
  InferArgs inf;
  IngestArgs ing;
  ExportArgs exp;
  ConfigArgs conf;
  add_generate(app, gen);
  add_train(app, tr);
  add_eval(app, ev);
  add_infer(app, inf);
  add_ingest(app, ing);
  add_export(app, exp);
  add_config(app, conf);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  setup_logging();
  try {
    const CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "generate") return run_generate(*cmd, gen);
    if (name == "train") return run_train(tr);
    if (name == "eval") return run_eval(*cmd, ev);
    if (name == "infer") return run_infer(inf);
    if (name == "ingest") return run_ingest(ing);
    if (name == "export") return run_export(exp);
    return run_config(conf);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e);
  }
}

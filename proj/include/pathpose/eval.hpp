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

#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pathpose/data_io.hpp"
#include "pathpose/model.hpp"

namespace pathpose {

inline constexpr int kReportFormatVersion = 1;

struct EvalConfig {
  // Angle and correlation metrics use every stride-th window.
  int stride = 16;
  int bins = 10;
  int min_visits = 5;

  void validate() const;
};

/// Errors in degrees, predicted minus true.
struct AngleErrorReport {
  double mean_pitch_err = 0.0;
  double mean_yaw_err = 0.0;
  double sd_pitch_err = 0.0;
  double sd_yaw_err = 0.0;
  double mean_abs_pitch_err = 0.0;
  double mean_abs_yaw_err = 0.0;
  int n_sequences = 0;
};

struct CorrelationReport {
  double pearson_r = 0.0;
  double abs_r = 0.0;
  int n_frames = 0;
};

struct BinSpread {
  double depth_lo = 0.0;
  double depth_hi = 0.0;
  int visits = 0;
  double z1_min = 0.0;
  double z1_max = 0.0;
  double range = 0.0;
};

struct SpreadReport {
  std::vector<BinSpread> bins;
  double mean_range = 0.0;
  std::string variant;  // "rotation" or "no-rotation"
};

struct GuidanceDelta {
  double d_pitch_deg = 0.0;
  double d_yaw_deg = 0.0;
  double d_path = 0.0;
};

/// Maps windows over `frames` to latent codes, in window order.
using LatentPredictor = std::function<std::vector<LatentCode>(
    std::span<const FrameRecord> frames, std::span<const Window> windows)>;

LatentPredictor model_predictor(const ModelParams& params, int batch_size = 256);

/// Test oracle: z1 = depth / corridor_length of each window's last frame
/// (or 1 - that when `reversed`), true angles mapped back to latents.
LatentPredictor oracle_predictor(double corridor_length, bool reversed = false);

/// Sample correlation. Throws InputError on length mismatch or fewer than two
/// points, UndefinedCorrelationError when either series is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Throws InputError on empty or mismatched input.
AngleErrorReport angle_errors(std::span<const LatentCode> predicted,
                              std::span<const CameraPose> truth);

/// Valid windows whose target carries a pose, thinned to every stride-th.
std::vector<Window> posed_windows(std::span<const FrameRecord> frames, int seq_len,
                                  int stride);

AngleErrorReport angle_errors(const LatentPredictor& predict,
                              std::span<const FrameRecord> frames, int seq_len, int stride);
AngleErrorReport angle_errors(const ModelParams& params, std::span<const FrameRecord> frames,
                              int stride);

/// Throws InputError when fewer than two windows qualify.
CorrelationReport depth_correlation(const LatentPredictor& predict,
                                    std::span<const FrameRecord> frames, int seq_len,
                                    int stride);
CorrelationReport depth_correlation(const ModelParams& params,
                                    std::span<const FrameRecord> frames, int stride);

/// z1 range per equal-width true-depth bin over every valid window. Throws
/// InsufficientCoverageError listing bins with fewer than `min_visits`.
SpreadReport latent_spread(const LatentPredictor& predict, std::span<const FrameRecord> frames,
                           int seq_len, int n_bins, int min_visits = 5);
SpreadReport latent_spread(const ModelParams& params, std::span<const FrameRecord> frames,
                           int n_bins, int min_visits = 5);

/// reference - current, angles in degrees.
GuidanceDelta guidance_delta(const LatentCode& current, const LatentCode& reference);

struct EvalReport {
  AngleErrorReport angles;
  CorrelationReport correlation;
  SpreadReport spread;
};

EvalReport evaluate(const LatentPredictor& predict, std::span<const FrameRecord> frames,
                    int seq_len, const EvalConfig& cfg, const std::string& variant);

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
void write_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_report(const std::filesystem::path& path);

/// Tab-separated per-window table: video, frame, depth, z1, z2, z3, pitch and
/// yaw in degrees (true and predicted).
void write_latent_table(std::span<const FrameRecord> frames, std::span<const Window> windows,
                        std::span<const LatentCode> latents,
                        const std::filesystem::path& path);

}  // namespace pathpose

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

#include "pathpose/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "pathpose/error.hpp"

namespace pathpose {

using nlohmann::json;

namespace {

constexpr std::string_view kReportFormatName = "pathpose-eval-report";

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  double mean_abs = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  for (double x : v) {
    m.mean += x;
    m.mean_abs += std::abs(x);
  }
  m.mean /= static_cast<double>(v.size());
  m.mean_abs /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

int seq_len_of(const ModelParams& params) { return params.config.seq_len; }

}  // namespace

void EvalConfig::validate() const {
  if (stride < 1) throw ConfigError("eval stride must be >= 1");
  if (bins < 1) throw ConfigError("eval bins must be >= 1");
  if (min_visits < 1) throw ConfigError("eval min_visits must be >= 1");
}

LatentPredictor model_predictor(const ModelParams& params, int batch_size) {
  return [params, batch_size](std::span<const FrameRecord> frames,
                              std::span<const Window> wins) {
    std::vector<LatentCode> out;
    out.reserve(wins.size());
    std::vector<DetectionSequence> seqs;
    for (std::size_t start = 0; start < wins.size(); start += static_cast<std::size_t>(batch_size)) {
      const std::size_t stop = std::min(wins.size(), start + static_cast<std::size_t>(batch_size));
      seqs.clear();
      for (std::size_t k = start; k < stop; ++k) seqs.push_back(window_sequence(frames, wins[k]));
      const auto codes = encode_batch(params, seqs);
      out.insert(out.end(), codes.begin(), codes.end());
    }
    return out;
  };
}

LatentPredictor oracle_predictor(double corridor_length, bool reversed) {
  return [corridor_length, reversed](std::span<const FrameRecord> frames,
                                     std::span<const Window> wins) {
    std::vector<LatentCode> out;
    out.reserve(wins.size());
    for (const Window& w : wins) {
      const auto& pose = frames[w.last].pose;
      if (!pose) throw InputError("oracle predictor needs ground-truth poses");
      const double z1 = pose->depth / corridor_length;
      out.push_back(LatentCode{reversed ? 1.0 - z1 : z1, angle_to_latent(pose->pitch),
                               angle_to_latent(pose->yaw)});
    }
    return out;
  };
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("pearson: series lengths differ");
  if (x.size() < 2) throw InputError("pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelationError("pearson: a series is constant");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

AngleErrorReport angle_errors(std::span<const LatentCode> predicted,
                              std::span<const CameraPose> truth) {
  if (predicted.empty()) throw InputError("angle_errors: no sequences");
  if (predicted.size() != truth.size()) throw InputError("angle_errors: size mismatch");
  std::vector<double> pitch_err, yaw_err;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    pitch_err.push_back(latent_to_angle(predicted[i].z2).deg() - truth[i].pitch.deg());
    yaw_err.push_back(latent_to_angle(predicted[i].z3).deg() - truth[i].yaw.deg());
  }
  const Moments p = moments(pitch_err);
  const Moments y = moments(yaw_err);
  return AngleErrorReport{p.mean, y.mean, p.sd, y.sd, p.mean_abs, y.mean_abs,
                          static_cast<int>(predicted.size())};
}

std::vector<Window> posed_windows(std::span<const FrameRecord> frames, int seq_len,
                                  int stride) {
  if (stride < 1) throw ConfigError("stride must be >= 1");
  std::vector<Window> out;
  const auto all = windows(frames, seq_len);
  std::size_t k = 0;
  for (const Window& w : all) {
    if (!frames[w.last].pose) continue;
    if (k++ % static_cast<std::size_t>(stride) == 0) out.push_back(w);
  }
  return out;
}

AngleErrorReport angle_errors(const LatentPredictor& predict,
                              std::span<const FrameRecord> frames, int seq_len, int stride) {
  const auto wins = posed_windows(frames, seq_len, stride);
  if (wins.empty()) throw InputError("angle_errors: no posed windows");
  const auto codes = predict(frames, wins);
  std::vector<CameraPose> truth;
  for (const Window& w : wins) truth.push_back(*frames[w.last].pose);
  return angle_errors(codes, truth);
}

AngleErrorReport angle_errors(const ModelParams& params, std::span<const FrameRecord> frames,
                              int stride) {
  return angle_errors(model_predictor(params), frames, seq_len_of(params), stride);
}

CorrelationReport depth_correlation(const LatentPredictor& predict,
                                    std::span<const FrameRecord> frames, int seq_len,
                                    int stride) {
  const auto wins = posed_windows(frames, seq_len, stride);
  if (wins.size() < 2) throw InputError("depth_correlation: fewer than two valid windows");
  const auto codes = predict(frames, wins);
  std::vector<double> z1, depth;
  for (std::size_t i = 0; i < wins.size(); ++i) {
    z1.push_back(codes[i].z1);
    depth.push_back(frames[wins[i].last].pose->depth);
  }
  const double r = pearson(z1, depth);
  return CorrelationReport{r, std::abs(r), static_cast<int>(wins.size())};
}

CorrelationReport depth_correlation(const ModelParams& params,
                                    std::span<const FrameRecord> frames, int stride) {
  return depth_correlation(model_predictor(params), frames, seq_len_of(params), stride);
}

SpreadReport latent_spread(const LatentPredictor& predict, std::span<const FrameRecord> frames,
                           int seq_len, int n_bins, int min_visits) {
  if (n_bins < 1) throw ConfigError("latent_spread: n_bins must be >= 1");
  const auto wins = posed_windows(frames, seq_len, 1);
  if (wins.empty()) throw InsufficientCoverageError("latent_spread: no posed windows");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Window& w : wins) {
    lo = std::min(lo, frames[w.last].pose->depth);
    hi = std::max(hi, frames[w.last].pose->depth);
  }
  const double width = (hi - lo) / n_bins;

  SpreadReport report;
  report.bins.resize(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    auto& bin = report.bins[static_cast<std::size_t>(b)];
    bin.depth_lo = lo + width * b;
    bin.depth_hi = b + 1 == n_bins ? hi : lo + width * (b + 1);
    bin.z1_min = std::numeric_limits<double>::infinity();
    bin.z1_max = -std::numeric_limits<double>::infinity();
  }
  const auto codes = predict(frames, wins);
  for (std::size_t i = 0; i < wins.size(); ++i) {
    const double d = frames[wins[i].last].pose->depth;
    int b = width > 0.0 ? static_cast<int>((d - lo) / width) : 0;
    b = std::clamp(b, 0, n_bins - 1);
    auto& bin = report.bins[static_cast<std::size_t>(b)];
    ++bin.visits;
    bin.z1_min = std::min(bin.z1_min, codes[i].z1);
    bin.z1_max = std::max(bin.z1_max, codes[i].z1);
  }

  std::vector<int> thin;
  for (int b = 0; b < n_bins; ++b) {
    if (report.bins[static_cast<std::size_t>(b)].visits < min_visits) thin.push_back(b);
  }
  if (!thin.empty()) {
    throw InsufficientCoverageError(fmt::format(
        "latent_spread: bins with fewer than {} visits: {}", min_visits, fmt::join(thin, ", ")));
  }
  for (auto& bin : report.bins) {
    bin.range = std::clamp(bin.z1_max - bin.z1_min, 0.0, 1.0);
    report.mean_range += bin.range;
  }
  report.mean_range /= n_bins;
  return report;
}

SpreadReport latent_spread(const ModelParams& params, std::span<const FrameRecord> frames,
                           int n_bins, int min_visits) {
  auto r = latent_spread(model_predictor(params), frames, seq_len_of(params), n_bins, min_visits);
  r.variant = params.config.rotation_enabled ? "rotation" : "no-rotation";
  return r;
}

GuidanceDelta guidance_delta(const LatentCode& current, const LatentCode& reference) {
  return GuidanceDelta{
      latent_to_angle(reference.z2).deg() - latent_to_angle(current.z2).deg(),
      latent_to_angle(reference.z3).deg() - latent_to_angle(current.z3).deg(),
      reference.z1 - current.z1};
}

EvalReport evaluate(const LatentPredictor& predict, std::span<const FrameRecord> frames,
                    int seq_len, const EvalConfig& cfg, const std::string& variant) {
  cfg.validate();
  EvalReport report;
  report.angles = angle_errors(predict, frames, seq_len, cfg.stride);
  report.correlation = depth_correlation(predict, frames, seq_len, cfg.stride);
  report.spread = latent_spread(predict, frames, seq_len, cfg.bins, cfg.min_visits);
  report.spread.variant = variant;
  return report;
}

// --- serialization -------------------------------------------------------------

json to_json(const EvalReport& r) {
  json bins = json::array();
  for (const auto& b : r.spread.bins) {
    bins.push_back({{"depth_lo", b.depth_lo}, {"depth_hi", b.depth_hi}, {"visits", b.visits},
                    {"z1_min", b.z1_min}, {"z1_max", b.z1_max}, {"range", b.range}});
  }
  return {
      {"format", kReportFormatName},
      {"version", kReportFormatVersion},
      {"angle_errors",
       {{"mean_pitch_err_deg", r.angles.mean_pitch_err},
        {"mean_yaw_err_deg", r.angles.mean_yaw_err},
        {"sd_pitch_err_deg", r.angles.sd_pitch_err},
        {"sd_yaw_err_deg", r.angles.sd_yaw_err},
        {"mean_abs_pitch_err_deg", r.angles.mean_abs_pitch_err},
        {"mean_abs_yaw_err_deg", r.angles.mean_abs_yaw_err},
        {"n_sequences", r.angles.n_sequences}}},
      {"depth_correlation",
       {{"pearson_r", r.correlation.pearson_r},
        {"abs_r", r.correlation.abs_r},
        {"n_frames", r.correlation.n_frames}}},
      {"latent_spread",
       {{"variant", r.spread.variant}, {"mean_range", r.spread.mean_range}, {"bins", bins}}},
  };
}

EvalReport report_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != kReportFormatName) {
    throw FormatError("not a pathpose evaluation report");
  }
  if (j.value("version", -1) != kReportFormatVersion) {
    throw VersionError(fmt::format("unsupported report version {}", j.value("version", -1)));
  }
  try {
    EvalReport r;
    const auto& a = j.at("angle_errors");
    r.angles = AngleErrorReport{a.at("mean_pitch_err_deg").get<double>(),
                                a.at("mean_yaw_err_deg").get<double>(),
                                a.at("sd_pitch_err_deg").get<double>(),
                                a.at("sd_yaw_err_deg").get<double>(),
                                a.at("mean_abs_pitch_err_deg").get<double>(),
                                a.at("mean_abs_yaw_err_deg").get<double>(),
                                a.at("n_sequences").get<int>()};
    const auto& c = j.at("depth_correlation");
    r.correlation = CorrelationReport{c.at("pearson_r").get<double>(), c.at("abs_r").get<double>(),
                                      c.at("n_frames").get<int>()};
    const auto& s = j.at("latent_spread");
    r.spread.variant = s.at("variant").get<std::string>();
    r.spread.mean_range = s.at("mean_range").get<double>();
    for (const auto& b : s.at("bins")) {
      r.spread.bins.push_back(BinSpread{b.at("depth_lo").get<double>(),
                                        b.at("depth_hi").get<double>(), b.at("visits").get<int>(),
                                        b.at("z1_min").get<double>(), b.at("z1_max").get<double>(),
                                        b.at("range").get<double>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << to_json(report).dump(2) << '\n';
  if (!out) throw IoError("failed writing report: " + path.string());
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read report: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

void write_latent_table(std::span<const FrameRecord> frames, std::span<const Window> wins,
                        std::span<const LatentCode> latents, const std::filesystem::path& path) {
  if (wins.size() != latents.size()) throw InputError("latent table: size mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write table: " + path.string());
  out << "video\tframe\ttrue_depth\tz1\tz2\tz3\ttrue_pitch_deg\ttrue_yaw_deg\t"
         "pred_pitch_deg\tpred_yaw_deg\n";
  for (std::size_t i = 0; i < wins.size(); ++i) {
    const FrameRecord& f = frames[wins[i].last];
    const LatentCode& z = latents[i];
    const auto& pose = f.pose;
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", f.video_id, f.frame_index,
                       pose ? fmt::format("{}", pose->depth) : "nan", z.z1, z.z2, z.z3,
                       pose ? fmt::format("{}", pose->pitch.deg()) : "nan",
                       pose ? fmt::format("{}", pose->yaw.deg()) : "nan", z.pitch().deg(),
                       z.yaw().deg());
  }
}

}  // namespace pathpose

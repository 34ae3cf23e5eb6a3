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

#include "pathpose/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pathpose/error.hpp"
#include "util.hpp"

namespace pathpose {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kDatasetFormatName = "pathpose-dataset";

std::string describe(const FrameRecord& r) {
  return fmt::format("record (video '{}', frame {})", r.video_id, r.frame_index);
}

}  // namespace

ClassMap ClassMap::dropping(int n_total, std::set<int> drop) {
  ClassMap map;
  map.n_total = n_total;
  map.drop_ids = std::move(drop);
  int next = 0;
  for (int id = 0; id < n_total; ++id) {
    if (!map.drop_ids.contains(id)) map.remap[id] = next++;
  }
  map.validate();
  return map;
}

void ClassMap::validate() const {
  if (n_total < 1) throw ConfigError("class map needs n_total >= 1");
  for (int id : drop_ids) {
    if (id < 0 || id >= n_total) {
      throw ConfigError(fmt::format("dropped class id {} outside [0, {})", id, n_total));
    }
  }
  const int kept = n_total - static_cast<int>(drop_ids.size());
  if (static_cast<int>(remap.size()) != kept) {
    throw ConfigError("class remap must cover exactly the non-dropped ids");
  }
  std::set<int> targets;
  for (const auto& [from, to] : remap) {
    if (drop_ids.contains(from) || from < 0 || from >= n_total) {
      throw ConfigError(fmt::format("class remap source {} is invalid", from));
    }
    if (to < 0 || to >= kept || !targets.insert(to).second) {
      throw ConfigError("class remap is not a bijection onto [0, n_kept)");
    }
  }
}

std::vector<FrameRecord> to_records(std::span<const LabeledFrame> frames,
                                    const std::string& video_id) {
  std::vector<FrameRecord> out;
  out.reserve(frames.size());
  for (const LabeledFrame& f : frames) {
    out.push_back(FrameRecord{video_id, f.frame_index, f.pose, f.detections});
  }
  return out;
}

void validate_records(std::span<const FrameRecord> frames) {
  std::unordered_map<std::string, int> last_index;
  const std::size_t n = frames.empty() ? 0 : frames.front().detections.n_classes();
  for (const FrameRecord& r : frames) {
    if (r.detections.n_classes() != n) {
      throw ValidationError(describe(r) + ": class slot count differs from first record");
    }
    auto it = last_index.find(r.video_id);
    if (it != last_index.end() && r.frame_index <= it->second) {
      throw ValidationError(describe(r) + ": frame_index not strictly increasing");
    }
    last_index[r.video_id] = r.frame_index;
    try {
      r.detections.validate_input();
    } catch (const ValidationError& e) {
      throw ValidationError(describe(r) + ": " + e.what());
    }
    if (r.pose && !(r.pose->depth >= 0.0 && std::isfinite(r.pose->depth))) {
      throw ValidationError(describe(r) + ": pose depth must be finite and >= 0");
    }
  }
}

void write_dataset(std::span<const FrameRecord> frames, const fs::path& path,
                   int n_classes) {
  validate_records(frames);
  const int n = frames.empty() ? n_classes
                               : static_cast<int>(frames.front().detections.n_classes());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open dataset for writing: " + path.string());

  const json header = {
      {"format", kDatasetFormatName},
      {"version", kDatasetFormatVersion},
      {"n_classes", n},
      {"fields", {"presence", "cx", "cy", "w", "h"}},
      {"pose_fields", {"depth", "pitch_rad", "yaw_rad"}},
  };
  out << header.dump() << '\n';
  for (const FrameRecord& r : frames) {
    json det = json::array();
    for (const Detection& d : r.detections.slots) {
      det.push_back({d.presence, d.box.cx, d.box.cy, d.box.w, d.box.h});
    }
    json rec = {{"video", r.video_id}, {"frame", r.frame_index}};
    if (r.pose) rec["pose"] = {r.pose->depth, r.pose->pitch.rad(), r.pose->yaw.rad()};
    rec["det"] = std::move(det);
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("failed writing dataset: " + path.string());
}

namespace {

int parse_header(const std::string& line, const fs::path& path) {
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}:1: bad header: {}", path.string(), e.what()));
  }
  if (!header.is_object() || header.value("format", "") != kDatasetFormatName) {
    throw FormatError(path.string() + ":1: not a pathpose dataset");
  }
  if (header.value("version", -1) != kDatasetFormatVersion) {
    throw VersionError(fmt::format("{}: unsupported dataset version {}", path.string(),
                                   header.value("version", -1)));
  }
  const int n = header.value("n_classes", -1);
  if (n < 0) throw FormatError(path.string() + ":1: missing n_classes");
  return n;
}

}  // namespace

int read_dataset_classes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  return parse_header(line, path);
}

std::vector<FrameRecord> read_dataset(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  const int n = parse_header(line, path);

  std::vector<FrameRecord> frames;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      FrameRecord r;
      r.video_id = rec.at("video").get<std::string>();
      r.frame_index = rec.at("frame").get<int>();
      if (rec.contains("pose")) {
        const auto& p = rec.at("pose");
        if (p.size() != 3) throw FormatError("pose needs 3 values");
        r.pose = CameraPose{p.at(0).get<double>(), Angle::radians(p.at(1).get<double>()),
                            Angle::radians(p.at(2).get<double>())};
      }
      const auto& det = rec.at("det");
      if (det.size() != static_cast<std::size_t>(n)) {
        throw FormatError(fmt::format("expected {} class slots, got {}", n, det.size()));
      }
      r.detections = DetectionFrame(static_cast<std::size_t>(n));
      for (std::size_t i = 0; i < det.size(); ++i) {
        const auto& s = det.at(i);
        if (s.size() != kSlotFeatures) throw FormatError("slot needs 5 values");
        r.detections.slots[i] = Detection{
            s.at(0).get<double>(),
            BBox{s.at(1).get<double>(), s.at(2).get<double>(), s.at(3).get<double>(),
                 s.at(4).get<double>()}};
      }
      frames.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw FormatError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    } catch (const FormatError& e) {
      throw FormatError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    } catch (const DomainError& e) {
      throw FormatError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  validate_records(frames);
  return frames;
}

// --- YOLO label directories ----------------------------------------------------

namespace {

std::optional<long long> trailing_index(const fs::path& file) {
  const std::string stem = file.stem().string();
  std::size_t i = stem.size();
  while (i > 0 && stem[i - 1] >= '0' && stem[i - 1] <= '9') --i;
  if (i == stem.size()) return std::nullopt;
  long long v = 0;
  if (!detail::parse_number(std::string_view(stem).substr(i), v)) return std::nullopt;
  return v;
}

std::vector<FrameRecord> ingest_video(const fs::path& dir, const std::string& video_id,
                                      const ClassMap& classes, int stride) {
  std::vector<std::pair<long long, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const auto idx = trailing_index(entry.path());
    if (!idx) {
      throw FormatError(entry.path().string() + ": file name carries no frame index");
    }
    files.emplace_back(*idx, entry.path());
  }
  std::sort(files.begin(), files.end());
  for (std::size_t i = 1; i < files.size(); ++i) {
    if (files[i].first == files[i - 1].first) {
      throw FormatError(fmt::format("{}: duplicate frame index {}", dir.string(), files[i].first));
    }
  }

  const auto n = static_cast<std::size_t>(classes.n_kept());
  std::vector<FrameRecord> out;
  for (std::size_t k = 0; k < files.size(); k += static_cast<std::size_t>(stride)) {
    const auto& [index, file] = files[k];
    std::ifstream in(file);
    if (!in) throw IoError("cannot read label file: " + file.string());

    FrameRecord rec;
    rec.video_id = video_id;
    if (index > std::numeric_limits<int>::max()) {
      throw FormatError(file.string() + ": frame index too large");
    }
    rec.frame_index = static_cast<int>(index);
    rec.detections = DetectionFrame(n);
    std::vector<double> best_conf(n, -std::numeric_limits<double>::infinity());

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto parts = detail::split_ws(line);
      if (parts.empty()) continue;
      auto fail = [&](const std::string& why) {
        throw FormatError(fmt::format("{}:{}: {}", file.string(), line_no, why));
      };
      if (parts.size() != 5 && parts.size() != 6) fail("expected 'class cx cy w h [conf]'");
      int cls = 0;
      if (!detail::parse_number(parts[0], cls)) fail("bad class id");
      if (cls < 0 || cls >= classes.n_total) {
        fail(fmt::format("class id {} outside [0, {})", cls, classes.n_total));
      }
      double v[5] = {0, 0, 0, 0, 0};
      for (std::size_t j = 1; j < parts.size(); ++j) {
        if (!detail::parse_number(parts[j], v[j - 1]) || !std::isfinite(v[j - 1])) {
          fail("bad number '" + std::string(parts[j]) + "'");
        }
      }
      for (int j = 0; j < 4; ++j) {
        if (v[j] < 0.0 || v[j] > 1.0) fail("box value outside [0,1]");
      }
      if (classes.drop_ids.contains(cls)) continue;
      const auto slot = static_cast<std::size_t>(classes.remap.at(cls));
      // Without a confidence column the first line wins.
      const double conf = parts.size() == 6 ? v[4] : 0.0;
      if (conf > best_conf[slot]) {
        best_conf[slot] = conf;
        rec.detections.slots[slot] = Detection{1.0, BBox{v[0], v[1], v[2], v[3]}};
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

std::vector<FrameRecord> ingest_yolo_labels(const fs::path& dir, const ClassMap& classes,
                                            int stride) {
  classes.validate();
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());

  bool has_files = false;
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
    if (entry.is_regular_file() && entry.path().extension() == ".txt") has_files = true;
  }
  if (has_files) {
    return ingest_video(dir, fs::absolute(dir).lexically_normal().filename().string(),
                        classes, stride);
  }
  std::sort(subdirs.begin(), subdirs.end());
  std::vector<FrameRecord> all;
  for (const auto& sub : subdirs) {
    auto part = ingest_video(sub, sub.filename().string(), classes, stride);
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return all;
}

void export_yolo_labels(std::span<const FrameRecord> frames, const fs::path& dir) {
  validate_records(frames);
  for (const FrameRecord& r : frames) {
    const fs::path video_dir = dir / r.video_id;
    fs::create_directories(video_dir);
    const fs::path file = video_dir / fmt::format("{:06d}.txt", r.frame_index);
    std::ofstream out(file);
    if (!out) throw IoError("cannot write label file: " + file.string());
    for (std::size_t i = 0; i < r.detections.slots.size(); ++i) {
      const Detection& d = r.detections.slots[i];
      if (d.presence != 1.0) continue;
      out << fmt::format("{} {} {} {} {}\n", i, d.box.cx, d.box.cy, d.box.w, d.box.h);
    }
    if (!out) throw IoError("failed writing label file: " + file.string());
  }
}

// --- windows -------------------------------------------------------------------

std::vector<Window> windows(std::span<const FrameRecord> frames, int s) {
  std::vector<Window> out;
  if (s < 1) return out;
  std::size_t start = 0;
  while (start < frames.size()) {
    std::size_t end = start + 1;
    while (end < frames.size() && frames[end].video_id == frames[start].video_id) ++end;

    int min_step = std::numeric_limits<int>::max();
    for (std::size_t i = start + 1; i < end; ++i) {
      min_step = std::min(min_step, frames[i].frame_index - frames[i - 1].frame_index);
    }
    std::size_t run = start;
    for (std::size_t i = start; i < end; ++i) {
      if (i > start && frames[i].frame_index - frames[i - 1].frame_index > min_step) run = i;
      if (i + 1 - run >= static_cast<std::size_t>(s)) {
        out.push_back(Window{i + 1 - static_cast<std::size_t>(s), i});
      }
    }
    start = end;
  }
  return out;
}

DetectionSequence window_sequence(std::span<const FrameRecord> frames, const Window& w) {
  DetectionSequence seq;
  seq.frames.reserve(w.last - w.first + 1);
  for (std::size_t i = w.first; i <= w.last; ++i) seq.frames.push_back(frames[i].detections);
  return seq;
}

}  // namespace pathpose

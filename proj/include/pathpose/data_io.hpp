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
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pathpose/detection.hpp"
#include "pathpose/scene.hpp"

namespace pathpose {

inline constexpr int kDatasetFormatVersion = 1;

struct FrameRecord {
  std::string video_id;
  int frame_index = 0;
  std::optional<CameraPose> pose;  // synthetic data only
  DetectionFrame detections;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

/// Which raw detector classes survive and where they land.
struct ClassMap {
  int n_total = 0;
  std::set<int> drop_ids;
  std::map<int, int> remap;  // raw id -> dense id in [0, n_kept)

  /// Keeps every id not in `drop`, in ascending order.
  static ClassMap dropping(int n_total, std::set<int> drop);
  int n_kept() const { return static_cast<int>(remap.size()); }
  void validate() const;
};

/// Tags simulator frames with a video id.
std::vector<FrameRecord> to_records(std::span<const LabeledFrame> frames,
                                    const std::string& video_id = "synthetic");

/// Throws ValidationError naming the offending record when frame indices are
/// not strictly increasing per video, slot counts differ, or a detection
/// violates the input invariants.
void validate_records(std::span<const FrameRecord> frames);

/// JSON-lines file: a header object then one object per frame.
/// `n_classes` is only consulted for an empty list.
void write_dataset(std::span<const FrameRecord> frames,
                   const std::filesystem::path& path, int n_classes = 0);
std::vector<FrameRecord> read_dataset(const std::filesystem::path& path);
/// Class count from the header of a dataset file.
int read_dataset_classes(const std::filesystem::path& path);

/// Reads "class cx cy w h [confidence]" label files. A directory holding
/// .txt files is one video named after the directory; otherwise each
/// subdirectory is a video. Files are ordered by the trailing integer in
/// their stem, then every `stride`-th one is kept.
std::vector<FrameRecord> ingest_yolo_labels(const std::filesystem::path& dir,
                                            const ClassMap& classes, int stride);

/// Writes `<dir>/<video_id>/<frame_index>.txt` with one line per present
/// class. Inverse of ingest_yolo_labels for an identity class map.
void export_yolo_labels(std::span<const FrameRecord> frames,
                        const std::filesystem::path& dir);

/// A run of seq_len consecutive frames of one video; target = frames[last].
struct Window {
  std::size_t first = 0;
  std::size_t last = 0;
};

/// Every window of length `s` that stays inside one video and does not span
/// a frame-index gap (a step larger than the video's smallest step).
std::vector<Window> windows(std::span<const FrameRecord> frames, int s);

DetectionSequence window_sequence(std::span<const FrameRecord> frames, const Window& w);

}  // namespace pathpose

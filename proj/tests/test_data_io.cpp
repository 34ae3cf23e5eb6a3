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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include <unistd.h>

#include "pathpose/data_io.hpp"
#include "pathpose/error.hpp"
#include "pathpose/scene.hpp"

namespace pathpose {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("pathpose_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

std::vector<FrameRecord> synthetic(int n = 120, std::uint64_t seed = 3) {
  TrajectoryConfig cfg;
  cfg.n_frames = n;
  cfg.n_passes = 1;
  cfg.seed = seed;
  return to_records(generate_trajectory(default_scene(8, 7), cfg));
}

std::vector<FrameRecord> blank_video(const std::string& id, int n, int n_classes = 2) {
  std::vector<FrameRecord> out;
  for (int i = 0; i < n; ++i) out.push_back(FrameRecord{id, i, std::nullopt, DetectionFrame(n_classes)});
  return out;
}

TEST(Dataset, WriteReadRoundTrip) {
  TempDir dir("ds");
  auto frames = synthetic();
  auto more = blank_video("clip-b", 5, 8);
  more[2].detections.slots[4] = Detection{1.0, BBox{0.1, 0.2, 0.3, 0.4}};
  frames.insert(frames.end(), more.begin(), more.end());
  const fs::path file = dir.path() / "data.jsonl";
  write_dataset(frames, file);
  EXPECT_EQ(read_dataset(file), frames);
  EXPECT_EQ(read_dataset_classes(file), 8);
}

TEST(Dataset, ReadWriteReproducesBytes) {
  TempDir dir("ds_bytes");
  const fs::path a = dir.path() / "a.jsonl";
  const fs::path b = dir.path() / "b.jsonl";
  write_dataset(synthetic(40), a);
  write_dataset(read_dataset(a), b);
  std::ifstream fa(a), fb(b);
  const std::string ta((std::istreambuf_iterator<char>(fa)), {});
  const std::string tb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(ta, tb);
}

TEST(Dataset, EmptyListIsHeaderOnly) {
  TempDir dir("ds_empty");
  const fs::path file = dir.path() / "empty.jsonl";
  write_dataset({}, file, 8);
  EXPECT_TRUE(read_dataset(file).empty());
  EXPECT_EQ(read_dataset_classes(file), 8);
  std::ifstream in(file);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 1);
}

TEST(Dataset, OutOfOrderFrameIndexIsRejected) {
  TempDir dir("ds_order");
  auto frames = blank_video("v", 4);
  std::swap(frames[1].frame_index, frames[2].frame_index);
  EXPECT_THROW(write_dataset(frames, dir.path() / "x.jsonl"), ValidationError);
  EXPECT_THROW(validate_records(frames), ValidationError);
}

TEST(Dataset, AbsentSlotsMustBeZeroed) {
  auto frames = blank_video("v", 2);
  frames[1].detections.slots[0].box.cx = 0.5;
  EXPECT_THROW(validate_records(frames), ValidationError);
}

TEST(Dataset, MalformedLineReportsLineNumber) {
  TempDir dir("ds_bad");
  const fs::path file = dir.path() / "bad.jsonl";
  write_dataset(blank_video("v", 3), file);
  {
    std::ofstream out(file, std::ios::app);
    out << "{\"video\": \"v\", \"frame\": 9, \"det\": [[1, 0.5]]}\n";
  }
  try {
    read_dataset(file);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":5:"), std::string::npos) << e.what();
  }
}

TEST(Dataset, UnknownVersionIsTyped) {
  TempDir dir("ds_ver");
  const fs::path file = dir.path() / "v2.jsonl";
  write_text(file, R"({"format":"pathpose-dataset","version":2,"n_classes":2})" "\n");
  EXPECT_THROW(read_dataset(file), VersionError);
  EXPECT_THROW(read_dataset(dir.path() / "missing.jsonl"), IoError);
}

TEST(ClassMap, DroppingRemapsDensely) {
  const ClassMap m = ClassMap::dropping(16, {15});
  EXPECT_EQ(m.n_kept(), 15);
  EXPECT_EQ(m.remap.at(14), 14);
  const ClassMap mid = ClassMap::dropping(5, {1, 3});
  EXPECT_EQ(mid.remap, (std::map<int, int>{{0, 0}, {2, 1}, {4, 2}}));
  EXPECT_THROW(ClassMap::dropping(4, {7}).validate(), ConfigError);
}

TEST(Yolo, SingleLineWithDroppedInstrumentClass) {
  TempDir dir("yolo1");
  write_text(dir.path() / "vid" / "frame_0001.txt", "2 0.5 0.5 0.2 0.1\n");
  const auto recs = ingest_yolo_labels(dir.path() / "vid", ClassMap::dropping(16, {15}), 1);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].video_id, "vid");
  EXPECT_EQ(recs[0].frame_index, 1);
  ASSERT_EQ(recs[0].detections.n_classes(), 15u);
  for (std::size_t i = 0; i < 15; ++i) {
    const auto& s = recs[0].detections.slots[i];
    if (i == 2) {
      EXPECT_EQ(s, (Detection{1.0, BBox{0.5, 0.5, 0.2, 0.1}}));
    } else {
      EXPECT_EQ(s, Detection{});
    }
  }
}

TEST(Yolo, DuplicateClassKeepsHighestConfidence) {
  TempDir dir("yolo2");
  write_text(dir.path() / "v" / "7.txt",
             "3 0.1 0.1 0.1 0.1 0.4\n3 0.6 0.6 0.2 0.2 0.9\n3 0.3 0.3 0.3 0.3 0.5\n");
  write_text(dir.path() / "v" / "8.txt", "3 0.2 0.2 0.1 0.1\n3 0.7 0.7 0.1 0.1\n");
  const auto recs = ingest_yolo_labels(dir.path() / "v", ClassMap::dropping(5, {}), 1);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].detections.slots[3].box, (BBox{0.6, 0.6, 0.2, 0.2}));
  EXPECT_EQ(recs[1].detections.slots[3].box, (BBox{0.2, 0.2, 0.1, 0.1}));
}

TEST(Yolo, DroppedClassesVanishAndFilesSortNumerically) {
  TempDir dir("yolo3");
  write_text(dir.path() / "v" / "f10.txt", "0 0.5 0.5 0.1 0.1\n");
  write_text(dir.path() / "v" / "f9.txt", "1 0.5 0.5 0.1 0.1\n");
  write_text(dir.path() / "v" / "f100.txt", "");
  const auto recs = ingest_yolo_labels(dir.path() / "v", ClassMap::dropping(2, {1}), 1);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].frame_index, 9);
  EXPECT_EQ(recs[0].detections.slots[0].presence, 0.0);
  EXPECT_EQ(recs[1].frame_index, 10);
  EXPECT_EQ(recs[1].detections.slots[0].presence, 1.0);
  EXPECT_EQ(recs[2].frame_index, 100);
}

TEST(Yolo, StrideSubsamplesFrames) {
  TempDir dir("yolo4");
  for (int i = 0; i < 10; ++i) write_text(dir.path() / "v" / (std::to_string(i) + ".txt"), "");
  const auto recs = ingest_yolo_labels(dir.path() / "v", ClassMap::dropping(1, {}), 3);
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs[3].frame_index, 9);
}

TEST(Yolo, ErrorsNameFileAndLine) {
  TempDir dir("yolo5");
  write_text(dir.path() / "v" / "1.txt", "0 0.5 0.5 0.1 0.1\n0 0.5 oops 0.1 0.1\n");
  try {
    ingest_yolo_labels(dir.path() / "v", ClassMap::dropping(2, {}), 1);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("1.txt:2"), std::string::npos) << e.what();
  }
  write_text(dir.path() / "v" / "1.txt", "4 0.5 0.5 0.1 0.1\n");
  EXPECT_THROW(ingest_yolo_labels(dir.path() / "v", ClassMap::dropping(2, {}), 1), FormatError);
}

TEST(Yolo, ExportThenIngestIsIdentityWithoutPose) {
  TempDir dir("yolo_rt");
  auto frames = synthetic(200, 9);
  export_yolo_labels(frames, dir.path());
  const auto back = ingest_yolo_labels(dir.path(), ClassMap::dropping(8, {}), 1);
  for (auto& f : frames) f.pose.reset();
  EXPECT_EQ(back, frames);
  EXPECT_EQ(ingest_yolo_labels(dir.path(), ClassMap::dropping(8, {}), 1), back);
}

TEST(Windows, CountsPerVideo) {
  EXPECT_EQ(windows(blank_video("a", 64), 64).size(), 1u);
  EXPECT_EQ(windows(blank_video("a", 63), 64).size(), 0u);
  EXPECT_EQ(windows(blank_video("a", 100), 64).size(), 37u);
  auto two = blank_video("a", 20);
  const auto b = blank_video("b", 10);
  two.insert(two.end(), b.begin(), b.end());
  EXPECT_EQ(windows(two, 8).size(), 13u + 3u);
}

TEST(Windows, TargetIsLastFrame) {
  auto frames = blank_video("a", 10);
  frames[9].detections.slots[1] = Detection{1.0, BBox{0.5, 0.5, 0.1, 0.1}};
  const auto w = windows(frames, 4);
  ASSERT_EQ(w.size(), 7u);
  EXPECT_EQ(w.back().first, 6u);
  EXPECT_EQ(w.back().last, 9u);
  const auto seq = window_sequence(frames, w.back());
  ASSERT_EQ(seq.frames.size(), 4u);
  EXPECT_EQ(seq.frames.back(), frames[9].detections);
}

TEST(Windows, GapsBreakContiguity) {
  auto frames = blank_video("a", 10);
  for (std::size_t i = 5; i < frames.size(); ++i) frames[i].frame_index += 3;
  EXPECT_EQ(windows(frames, 4).size(), 2u + 2u);
  // A uniform stride is not a gap.
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i].frame_index = 5 * static_cast<int>(i);
  EXPECT_EQ(windows(frames, 4).size(), 7u);
}

TEST(Windows, NeverMixVideos) {
  std::mt19937_64 rng(8);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<FrameRecord> frames;
    std::map<std::string, int> next;
    std::string id = "v0";
    for (int i = 0; i < 200; ++i) {
      if (coin(rng)) id = "v" + std::to_string(rng() % 4);
      frames.push_back(FrameRecord{id, next[id]++, std::nullopt, DetectionFrame(1)});
    }
    for (const Window& w : windows(frames, 3)) {
      for (std::size_t i = w.first; i <= w.last; ++i) {
        EXPECT_EQ(frames[i].video_id, frames[w.last].video_id);
      }
    }
  }
}

}  // namespace
}  // namespace pathpose

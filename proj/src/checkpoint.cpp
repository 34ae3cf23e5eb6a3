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

#include "pathpose/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <zlib.h>

#include "pathpose/error.hpp"
#include "pathpose/run_config.hpp"

namespace pathpose {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kCheckpointFormatName = "pathpose-checkpoint";

std::uint32_t crc_of(const std::vector<unsigned char>& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void put_le(double v, unsigned char* out) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(bits >> (8 * i));
}

double get_le(const unsigned char* in) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

fs::path blob_path(const fs::path& manifest) {
  fs::path p = manifest;
  p.replace_extension(".bin");
  return p;
}

void save_checkpoint(const ModelParams& params, const fs::path& manifest) {
  const auto specs = shape_manifest(params.config);
  if (specs.size() != params.tensors.size()) {
    throw ValidationError("parameters do not match their config's shape manifest");
  }
  std::vector<unsigned char> blob(params.parameter_count() * 8);
  json tensors = json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& t = params.tensors[i];
    if (t.name != specs[i].name || t.value.rows() != specs[i].rows ||
        t.value.cols() != specs[i].cols) {
      throw ValidationError("tensor " + t.name + " does not match the shape manifest");
    }
    if (!t.value.allFinite()) throw ValidationError("tensor " + t.name + " is not finite");
    const std::size_t bytes = static_cast<std::size_t>(t.value.size()) * 8;
    for (Eigen::Index k = 0; k < t.value.size(); ++k) {
      put_le(t.value.data()[k], blob.data() + offset + static_cast<std::size_t>(k) * 8);
    }
    tensors.push_back({{"name", t.name},
                       {"shape", {t.value.rows(), t.value.cols()}},
                       {"offset", offset},
                       {"nbytes", bytes}});
    offset += bytes;
  }

  const fs::path blob_file = blob_path(manifest);
  const json doc = {
      {"format", kCheckpointFormatName},
      {"version", kCheckpointFormatVersion},
      {"dtype", "float64-le"},
      {"model_config", to_json(params.config)},
      {"blob", blob_file.filename().string()},
      {"blob_bytes", blob.size()},
      {"checksum", fmt::format("crc32:{:08x}", crc_of(blob))},
      {"tensors", tensors},
  };

  std::ofstream bout(blob_file, std::ios::binary);
  if (!bout) throw IoError("cannot write checkpoint blob: " + blob_file.string());
  bout.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!bout) throw IoError("failed writing checkpoint blob: " + blob_file.string());

  std::ofstream mout(manifest);
  if (!mout) throw IoError("cannot write checkpoint manifest: " + manifest.string());
  mout << doc.dump(2) << '\n';
  if (!mout) throw IoError("failed writing checkpoint manifest: " + manifest.string());
}

ModelParams load_checkpoint(const fs::path& manifest) {
  std::ifstream min(manifest);
  if (!min) throw IoError("cannot read checkpoint manifest: " + manifest.string());
  json doc;
  try {
    doc = json::parse(min);
  } catch (const json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kCheckpointFormatName) {
    throw FormatError(manifest.string() + ": not a pathpose checkpoint");
  }
  if (doc.value("version", -1) != kCheckpointFormatVersion) {
    throw VersionError(fmt::format("{}: unsupported checkpoint version {}", manifest.string(),
                                   doc.value("version", -1)));
  }

  ModelParams params;
  std::vector<unsigned char> blob;
  std::string checksum;
  json tensors;
  try {
    if (doc.at("dtype").get<std::string>() != "float64-le") {
      throw FormatError("unsupported dtype");
    }
    params.config = model_config_from_json(doc.at("model_config"));
    checksum = doc.at("checksum").get<std::string>();
    tensors = doc.at("tensors");
    const fs::path blob_file = manifest.parent_path() / doc.at("blob").get<std::string>();
    std::ifstream bin(blob_file, std::ios::binary);
    if (!bin) throw IoError("cannot read checkpoint blob: " + blob_file.string());
    blob.assign(std::istreambuf_iterator<char>(bin), std::istreambuf_iterator<char>());
    if (blob.size() != doc.at("blob_bytes").get<std::size_t>()) {
      throw FormatError("blob size does not match manifest");
    }
  } catch (const json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  if (checksum != fmt::format("crc32:{:08x}", crc_of(blob))) {
    throw FormatError(manifest.string() + ": checksum mismatch");
  }

  const auto specs = shape_manifest(params.config);
  if (tensors.size() != specs.size()) {
    throw FormatError(manifest.string() + ": tensor count does not match the model config");
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& t = tensors[i];
    const auto name = t.at("name").get<std::string>();
    const auto rows = t.at("shape").at(0).get<Eigen::Index>();
    const auto cols = t.at("shape").at(1).get<Eigen::Index>();
    const auto offset = t.at("offset").get<std::size_t>();
    const auto nbytes = t.at("nbytes").get<std::size_t>();
    if (name != specs[i].name || rows != specs[i].rows || cols != specs[i].cols ||
        nbytes != static_cast<std::size_t>(rows * cols) * 8 || offset + nbytes > blob.size()) {
      throw FormatError(manifest.string() + ": tensor entry '" + name + "' is inconsistent");
    }
    ad::Matrix m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      m.data()[k] = get_le(blob.data() + offset + static_cast<std::size_t>(k) * 8);
    }
    params.tensors.push_back({name, std::move(m)});
  }
  return params;
}

}  // namespace pathpose

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
#include <string>

#include "pathpose/model.hpp"

namespace pathpose {

inline constexpr int kCheckpointFormatVersion = 1;

/// Writes a JSON manifest at `manifest` (format version, model config, tensor
/// names/shapes/byte offsets, CRC-32 of the blob) and the raw little-endian
/// float64 blob next to it with extension ".bin".
void save_checkpoint(const ModelParams& params, const std::filesystem::path& manifest);

/// Throws VersionError on an unknown format version and FormatError on any
/// shape, size or checksum mismatch.
ModelParams load_checkpoint(const std::filesystem::path& manifest);

std::filesystem::path blob_path(const std::filesystem::path& manifest);

}  // namespace pathpose

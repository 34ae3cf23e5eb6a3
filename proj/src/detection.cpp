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

#include "pathpose/detection.hpp"

#include <cmath>
#include <string>

#include "pathpose/error.hpp"

namespace pathpose {

void DetectionFrame::write_features(std::span<double> out) const {
  std::size_t k = 0;
  for (const Detection& d : slots) {
    out[k++] = d.presence;
    out[k++] = d.box.cx;
    out[k++] = d.box.cy;
    out[k++] = d.box.w;
    out[k++] = d.box.h;
  }
}

void DetectionFrame::validate_input() const {
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Detection& d = slots[i];
    const std::string where = "class slot " + std::to_string(i);
    if (d.presence != 0.0 && d.presence != 1.0) {
      throw ValidationError(where + ": presence must be 0 or 1");
    }
    for (double v : {d.box.cx, d.box.cy, d.box.w, d.box.h}) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw ValidationError(where + ": box field outside [0,1]");
      }
    }
    if (d.presence == 0.0 && !(d.box == BBox{})) {
      throw ValidationError(where + ": absent slot with non-zero box");
    }
  }
}

}  // namespace pathpose

# Copyright 2026 The pathpose Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Path position and viewing-angle embedding from per-frame detections.

The heavy lifting lives in the compiled ``_core`` module; this package
re-exports it.
"""

from ._core import (
    ConfigError,
    Dataset,
    Error,
    FormatError,
    InputError,
    IoError,
    Model,
    NumericError,
    ValidationError,
    degrees_to_latent,
    evaluate,
    guidance_delta,
    latent_to_degrees,
    pearson,
    reference_config,
    rotate_centers,
    rotation_matrix,
    train,
)

__all__ = [
    "ConfigError",
    "Dataset",
    "Error",
    "FormatError",
    "InputError",
    "IoError",
    "Model",
    "NumericError",
    "ValidationError",
    "degrees_to_latent",
    "evaluate",
    "guidance_delta",
    "latent_to_degrees",
    "pearson",
    "reference_config",
    "rotate_centers",
    "rotation_matrix",
    "train",
]

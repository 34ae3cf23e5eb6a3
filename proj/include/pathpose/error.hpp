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

#include <stdexcept>
#include <string>

namespace pathpose {

// Base of every error raised by the library. The CLI maps subclasses to exit
// codes: validation/config -> 2, numeric -> 3, I/O -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Runtime numeric failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

class DegenerateRotationError : public NumericError {
 public:
  using NumericError::NumericError;
};

class UndefinedCorrelationError : public NumericError {
 public:
  using NumericError::NumericError;
};

class InsufficientCoverageError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pathpose

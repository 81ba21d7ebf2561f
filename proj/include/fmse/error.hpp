// Copyright 2026 The fmse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fmse {

enum class ErrorCode {
  // codec
  BadMagic,
  UnsupportedMajorVersion,
  MetaChecksumMismatch,
  Truncated,
  ChecksumMismatch,
  RegistryViolation,
  OrderViolation,
  IoFailure,
  OutOfRange,
  NotSeekable,
  MalformedRecord,
  // model / calibration
  InvalidArgument,
  NonIdentityRoot,
  UnregisteredSensor,
  CrossAgent,
  MissingRoot,
  // assembly
  UnsortedInput,
  InsufficientSamples,
  // geometry
  NoConvergence,
  DimensionMismatch,
  EmptyInput,
  Degenerate,
  // export
  UnmappedSensor,
  UnsupportedEncoding,
};

/// Stable upper-case name, e.g. "BAD_MAGIC".
std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fmse

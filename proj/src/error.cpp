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

#include "fmse/error.hpp"

namespace fmse {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BAD_MAGIC";
    case ErrorCode::UnsupportedMajorVersion: return "UNSUPPORTED_MAJOR_VERSION";
    case ErrorCode::MetaChecksumMismatch: return "META_CHECKSUM_MISMATCH";
    case ErrorCode::Truncated: return "TRUNCATED";
    case ErrorCode::ChecksumMismatch: return "CHECKSUM_MISMATCH";
    case ErrorCode::RegistryViolation: return "REGISTRY_VIOLATION";
    case ErrorCode::OrderViolation: return "ORDER_VIOLATION";
    case ErrorCode::IoFailure: return "IO_FAILURE";
    case ErrorCode::OutOfRange: return "OUT_OF_RANGE";
    case ErrorCode::NotSeekable: return "NOT_SEEKABLE";
    case ErrorCode::MalformedRecord: return "MALFORMED_RECORD";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::NonIdentityRoot: return "NON_IDENTITY_ROOT";
    case ErrorCode::UnregisteredSensor: return "UNREGISTERED_SENSOR";
    case ErrorCode::CrossAgent: return "CROSS_AGENT";
    case ErrorCode::MissingRoot: return "MISSING_ROOT";
    case ErrorCode::UnsortedInput: return "UNSORTED_INPUT";
    case ErrorCode::InsufficientSamples: return "INSUFFICIENT_SAMPLES";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::EmptyInput: return "EMPTY_INPUT";
    case ErrorCode::Degenerate: return "DEGENERATE";
    case ErrorCode::UnmappedSensor: return "UNMAPPED_SENSOR";
    case ErrorCode::UnsupportedEncoding: return "UNSUPPORTED_ENCODING";
  }
  return "UNKNOWN";
}

}  // namespace fmse

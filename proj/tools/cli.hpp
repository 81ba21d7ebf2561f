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

#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmse/assembler.hpp"
#include "fmse/types.hpp"

namespace fmse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIntegrity = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line tool with stdout/stderr redirected to the given
/// streams. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Raw record dump accepted by `assemble`.
struct RecordDump {
  DatasetMeta meta;
  TriggerModel trigger;
  AssemblyConfig config;
  std::vector<RawRecord> records;
};

RecordDump dump_from_json(const nlohmann::json& j);
nlohmann::json dump_to_json(const RecordDump& dump);

}  // namespace fmse::cli

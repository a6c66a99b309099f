// Copyright 2026 The Sewerdet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: synth, tile, postproc, eval, report.
//
// Settings resolve as defaults < --config JSON file < SEWERDET_* environment
// variables < flags. Failures print one JSON object to stderr and map to a
// distinct exit code per category.

#ifndef SEWERDET_TOOLS_CLI_H_
#define SEWERDET_TOOLS_CLI_H_

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sewerdet/metrics.h"
#include "sewerdet/postproc.h"
#include "sewerdet/synth.h"
#include "sewerdet/tiler.h"

namespace sewerdet::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,  // bad flags or configuration values
  kExitMissingFile = 3,
  kExitBadSchema = 4,
  kExitInfeasible = 5,
};

// Parameters that are individually valid but cannot be satisfied together.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  TilerConfig tiler;
  PostprocConfig postproc;
  std::string ruleset_path;  // empty: built-in rules
  EvalConfig eval;
  // synth
  int pipes = 1;
  PipeSpec pipe;
  std::string detector = "noisy";  // none | perfect | seam | noisy
  bool overlay = false;
  // render
  std::int64_t pixel_budget = 40'000'000;
};

// Applies the keys present in `j` on top of `config`. Unknown keys and
// out-of-range values throw UsageError.
void ApplyConfigJson(const nlohmann::json& j, RunConfig& config);
// Canonical form of every setting; its hash goes into provenance.
nlohmann::json ConfigToJson(const RunConfig& config);

// Runs fn(0..n-1) on up to `jobs` threads. Exceptions are rethrown in index
// order after all workers finish.
void ParallelFor(int n, int jobs, const std::function<void(int)>& fn);

// Full command-line entry point. Never throws.
int Main(const std::vector<std::string>& args, std::ostream& out,
         std::ostream& err);

}  // namespace sewerdet::cli

#endif  // SEWERDET_TOOLS_CLI_H_

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

// JSON interchange for pipe documents, tile manifests and evaluation
// reports, plus small file helpers.
//
// Pipe document (schema_version 1):
//   {"schema_version": 1,
//    "geometry": {"pipe_id", "width_px", "height_px", "px_per_meter_axial",
//                 "material", "joint_positions_px": [..]},
//    "annotations": [{"id", "box": [x, y, w, h], "class", "severity"}],
//    "detections": [{"id", "box", "class", "confidence", "merged_from",
//                    "tags"}],
//    "spans": [{"top_id", "bottom_id", "class", "confidence", "top_part",
//               "bottom_part"}],
//    "audit": [{"detection_id", "rule", "kind", "detail"}],
//    "provenance": {"tool_version", "seed", "config_hash"}}
// Every array may be omitted on input; all are written on output.

#ifndef SEWERDET_IO_H_
#define SEWERDET_IO_H_

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sewerdet/core.h"
#include "sewerdet/metrics.h"
#include "sewerdet/rules.h"
#include "sewerdet/tiler.h"

namespace sewerdet {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

// Malformed or inconsistent input document.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FileNotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Provenance {
  std::string tool_version{kToolVersion};
  std::uint64_t seed = 0;
  std::string config_hash;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct PipeDocument {
  MosaicGeometry geometry;
  std::vector<Annotation> annotations;
  std::vector<Detection> detections;
  std::vector<CylindricalSpan> spans;
  std::vector<RuleEvent> audit;
  std::optional<Provenance> provenance;

  friend bool operator==(const PipeDocument&, const PipeDocument&) = default;
};

nlohmann::json ToJson(const PipeDocument& doc);
// Validates schema version, class codes, severities and that every box lies
// inside the mosaic. Throws SchemaError.
PipeDocument PipeDocumentFromJson(const nlohmann::json& j);

std::string SerializePipeDocument(const PipeDocument& doc);
PipeDocument ParsePipeDocument(std::string_view text);

// One tile manifest record; network boxes are written for convenience and
// recomputed on load.
nlohmann::json ToJson(const PatchSample& sample);
PatchSample PatchSampleFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const EvalReport& report, const EvalConfig& config);

// 64-bit FNV-1a as 16 lowercase hex digits.
std::string Fnv1aHex(std::string_view data);

// Throws FileNotFoundError when the path does not exist.
std::string ReadTextFile(const std::filesystem::path& path);
// Writes through a sibling temporary file and renames it into place.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view content);

}  // namespace sewerdet

#endif  // SEWERDET_IO_H_

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

#include "sewerdet/io.h"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

namespace sewerdet {

namespace {

using nlohmann::json;

json BoxToJson(const PixelBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

// Reads `key` from object `j` as T, naming the field in the error.
template <typename T>
T Field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(where + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(where + ": field '" + key + "' has the wrong type");
  }
}

const json& ArrayField(const json& j, const char* key,
                       const std::string& where) {
  static const json kEmpty = json::array();
  if (!j.contains(key)) return kEmpty;
  const json& a = j.at(key);
  if (!a.is_array()) {
    throw SchemaError(where + ": field '" + key + "' must be an array");
  }
  return a;
}

PixelBox BoxFromJson(const json& j, const char* key, const std::string& where) {
  const std::vector<int> v = Field<std::vector<int>>(j, key, where);
  if (v.size() != 4) {
    throw SchemaError(where + ": '" + key + "' must be [x, y, w, h]");
  }
  return PixelBox{v[0], v[1], v[2], v[3]};
}

DefectClass ClassFromJson(const json& j, const std::string& where) {
  const std::string code = Field<std::string>(j, "class", where);
  const std::optional<DefectClass> c = ParseClassCode(code);
  if (!c) throw SchemaError(where + ": unknown class code '" + code + "'");
  return *c;
}

void CheckInBounds(const MosaicGeometry& g, const PixelBox& b,
                   const std::string& where) {
  if (!g.InBounds(b)) {
    throw SchemaError(where + ": box [" + std::to_string(b.x) + ", " +
                      std::to_string(b.y) + ", " + std::to_string(b.w) + ", " +
                      std::to_string(b.h) + "] outside the " +
                      std::to_string(g.width_px) + "x" +
                      std::to_string(g.height_px) + " mosaic");
  }
}

std::optional<RuleEventKind> ParseEventKind(std::string_view name) {
  for (RuleEventKind k : {RuleEventKind::kSuppressed, RuleEventKind::kScaled,
                          RuleEventKind::kTagged, RuleEventKind::kSkipped}) {
    if (RuleEventKindName(k) == name) return k;
  }
  return std::nullopt;
}

json ClassPrToJson(const ClassPr& pr) {
  return {{"precision", pr.precision},
          {"recall", pr.recall},
          {"n_objects", pr.n_objects},
          {"n_detections", pr.n_detections},
          {"matched", pr.matched}};
}

json CountsToJson(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

json SeverityToJson(const SeverityReport& s) {
  json by = json::object();
  for (int i = 0; i < kNumSeverities; ++i) {
    by[std::to_string(i)] = s.by_condition[i];
  }
  return {{"by_condition", by},
          {"medium_and_slight", s.medium_and_slight},
          {"total_missed", s.total_missed},
          {"severe_missed", s.severe_missed},
          {"total_objects", s.total_objects}};
}

}  // namespace

json ToJson(const PipeDocument& doc) {
  const MosaicGeometry& g = doc.geometry;
  json out;
  out["schema_version"] = kSchemaVersion;
  out["geometry"] = {{"pipe_id", g.pipe_id},
                     {"width_px", g.width_px},
                     {"height_px", g.height_px},
                     {"px_per_meter_axial", g.px_per_meter_axial},
                     {"material", std::string(MaterialName(g.material))},
                     {"joint_positions_px", g.joint_positions_px}};
  json anns = json::array();
  for (const Annotation& a : doc.annotations) {
    anns.push_back({{"id", a.id},
                    {"box", BoxToJson(a.box)},
                    {"class", std::string(ClassCode(a.cls))},
                    {"severity", a.severity.condition}});
  }
  out["annotations"] = std::move(anns);
  json dets = json::array();
  for (const Detection& d : doc.detections) {
    dets.push_back({{"id", d.id},
                    {"box", BoxToJson(d.box)},
                    {"class", std::string(ClassCode(d.cls))},
                    {"confidence", d.confidence},
                    {"merged_from", d.merged_from},
                    {"tags", d.tags}});
  }
  out["detections"] = std::move(dets);
  json spans = json::array();
  for (const CylindricalSpan& s : doc.spans) {
    spans.push_back({{"top_id", s.top_id},
                     {"bottom_id", s.bottom_id},
                     {"class", std::string(ClassCode(s.cls))},
                     {"confidence", s.confidence},
                     {"top_part", BoxToJson(s.top_part)},
                     {"bottom_part", BoxToJson(s.bottom_part)}});
  }
  out["spans"] = std::move(spans);
  json audit = json::array();
  for (const RuleEvent& e : doc.audit) {
    audit.push_back({{"detection_id", e.detection_id},
                     {"rule", e.rule},
                     {"kind", std::string(RuleEventKindName(e.kind))},
                     {"detail", e.detail}});
  }
  out["audit"] = std::move(audit);
  if (doc.provenance) {
    out["provenance"] = {{"tool_version", doc.provenance->tool_version},
                         {"seed", doc.provenance->seed},
                         {"config_hash", doc.provenance->config_hash}};
  }
  return out;
}

PipeDocument PipeDocumentFromJson(const json& j) {
  if (!j.is_object()) throw SchemaError("document must be a JSON object");
  const int version = Field<int>(j, "schema_version", "document");
  if (version != kSchemaVersion) {
    throw SchemaError("unsupported schema_version " + std::to_string(version) +
                      " (expected " + std::to_string(kSchemaVersion) + ")");
  }
  PipeDocument doc;
  const json& jg = j.contains("geometry") ? j.at("geometry") : json();
  if (!jg.is_object()) throw SchemaError("document: missing geometry block");
  MosaicGeometry& g = doc.geometry;
  g.pipe_id = Field<std::string>(jg, "pipe_id", "geometry");
  g.width_px = Field<int>(jg, "width_px", "geometry");
  g.height_px = Field<int>(jg, "height_px", "geometry");
  g.px_per_meter_axial = Field<double>(jg, "px_per_meter_axial", "geometry");
  const std::string material = Field<std::string>(jg, "material", "geometry");
  const std::optional<Material> m = ParseMaterial(material);
  if (!m) throw SchemaError("geometry: unknown material '" + material + "'");
  g.material = *m;
  if (jg.contains("joint_positions_px")) {
    g.joint_positions_px =
        Field<std::vector<int>>(jg, "joint_positions_px", "geometry");
  }
  try {
    Validate(g);
  } catch (const UsageError& e) {
    throw SchemaError(std::string("geometry: ") + e.what());
  }

  int i = 0;
  for (const json& ja : ArrayField(j, "annotations", "document")) {
    const std::string where = "annotations[" + std::to_string(i++) + "]";
    Annotation a;
    a.id = Field<std::string>(ja, "id", where);
    a.box = BoxFromJson(ja, "box", where);
    a.cls = ClassFromJson(ja, where);
    const int sev = Field<int>(ja, "severity", where);
    if (sev < 0 || sev >= kNumSeverities) {
      throw SchemaError(where + ": severity must be in 0..4");
    }
    a.severity = SeverityClass{sev};
    CheckInBounds(g, a.box, where);
    doc.annotations.push_back(std::move(a));
  }
  i = 0;
  for (const json& jd : ArrayField(j, "detections", "document")) {
    const std::string where = "detections[" + std::to_string(i++) + "]";
    Detection d;
    d.id = Field<std::string>(jd, "id", where);
    d.box = BoxFromJson(jd, "box", where);
    d.cls = ClassFromJson(jd, where);
    d.confidence = Field<double>(jd, "confidence", where);
    if (jd.contains("merged_from")) {
      d.merged_from = Field<std::vector<std::string>>(jd, "merged_from", where);
    }
    if (jd.contains("tags")) {
      d.tags = Field<std::vector<std::string>>(jd, "tags", where);
    }
    CheckInBounds(g, d.box, where);
    try {
      Validate(d);
    } catch (const UsageError& e) {
      throw SchemaError(where + ": " + e.what());
    }
    doc.detections.push_back(std::move(d));
  }
  i = 0;
  for (const json& js : ArrayField(j, "spans", "document")) {
    const std::string where = "spans[" + std::to_string(i++) + "]";
    CylindricalSpan s;
    s.top_id = Field<std::string>(js, "top_id", where);
    s.bottom_id = Field<std::string>(js, "bottom_id", where);
    s.cls = ClassFromJson(js, where);
    s.confidence = Field<double>(js, "confidence", where);
    s.top_part = BoxFromJson(js, "top_part", where);
    s.bottom_part = BoxFromJson(js, "bottom_part", where);
    CheckInBounds(g, s.top_part, where);
    CheckInBounds(g, s.bottom_part, where);
    doc.spans.push_back(std::move(s));
  }
  i = 0;
  for (const json& je : ArrayField(j, "audit", "document")) {
    const std::string where = "audit[" + std::to_string(i++) + "]";
    RuleEvent e;
    e.detection_id = Field<std::string>(je, "detection_id", where);
    e.rule = Field<std::string>(je, "rule", where);
    const std::string kind = Field<std::string>(je, "kind", where);
    const std::optional<RuleEventKind> k = ParseEventKind(kind);
    if (!k) throw SchemaError(where + ": unknown event kind '" + kind + "'");
    e.kind = *k;
    e.detail = Field<std::string>(je, "detail", where);
    doc.audit.push_back(std::move(e));
  }
  if (j.contains("provenance")) {
    const json& jp = j.at("provenance");
    Provenance p;
    p.tool_version = Field<std::string>(jp, "tool_version", "provenance");
    p.seed = Field<std::uint64_t>(jp, "seed", "provenance");
    p.config_hash = Field<std::string>(jp, "config_hash", "provenance");
    doc.provenance = std::move(p);
  }
  return doc;
}

std::string SerializePipeDocument(const PipeDocument& doc) {
  return ToJson(doc).dump(2) + "\n";
}

PipeDocument ParsePipeDocument(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  return PipeDocumentFromJson(j);
}

json ToJson(const PatchSample& sample) {
  json boxes = json::array();
  const std::vector<RealBox> net = NetworkBoxes(sample);
  for (size_t i = 0; i < sample.annotations.size(); ++i) {
    const PatchAnnotation& a = sample.annotations[i];
    boxes.push_back({{"source_id", a.source_id},
                     {"class", std::string(ClassCode(a.cls))},
                     {"patch_box", BoxToJson(a.box)},
                     {"network_box",
                      json::array({net[i].x, net[i].y, net[i].w, net[i].h})}});
  }
  return {{"pipe_id", sample.pipe_id},
          {"window_index", sample.window_index},
          {"window_offset_px", sample.window_offset_px},
          {"patch_size_px", sample.patch_size_px},
          {"scale", sample.scale},
          {"flip_ud", sample.flip_ud},
          {"flip_lr", sample.flip_lr},
          {"boxes", std::move(boxes)}};
}

PatchSample PatchSampleFromJson(const json& j) {
  const std::string where = "manifest record";
  PatchSample s;
  s.pipe_id = Field<std::string>(j, "pipe_id", where);
  s.window_index = Field<int>(j, "window_index", where);
  s.window_offset_px = Field<int>(j, "window_offset_px", where);
  s.patch_size_px = Field<int>(j, "patch_size_px", where);
  s.scale = Field<double>(j, "scale", where);
  s.flip_ud = Field<bool>(j, "flip_ud", where);
  s.flip_lr = Field<bool>(j, "flip_lr", where);
  for (const json& jb : ArrayField(j, "boxes", where)) {
    PatchAnnotation a;
    a.source_id = Field<std::string>(jb, "source_id", where);
    a.cls = ClassFromJson(jb, where);
    a.box = BoxFromJson(jb, "patch_box", where);
    s.annotations.push_back(std::move(a));
  }
  return s;
}

json ToJson(const EvalReport& report, const EvalConfig& config) {
  json out;
  out["schema_version"] = kSchemaVersion;
  out["config"] = {{"chunk_width_px", config.chunk_width_px},
                   {"match_iou", config.match_iou}};
  json chunk = CountsToJson(report.counts);
  chunk["chunks"] = report.chunk_total.value_or(report.counts.total());
  chunk["accuracy"] = report.stats.accuracy;
  chunk["precision"] = report.stats.precision;
  chunk["recall"] = report.stats.recall;
  chunk["f1"] = report.stats.f1;
  out["chunk_metric"] = std::move(chunk);
  out["meters_evaluated"] = report.meters_evaluated;

  json per_class = json::object();
  for (const auto& [cls, pr] : report.pr.per_class) {
    per_class[std::string(ClassCode(cls))] = ClassPrToJson(pr);
  }
  out["per_class"] = std::move(per_class);
  out["macro_average"] = ClassPrToJson(report.pr.macro);
  out["micro_average"] = ClassPrToJson(report.pr.micro);

  json ap = json::object();
  for (DefectClass c : kAllClasses) {
    const auto& row = report.map.ap[ClassIndex(c)];
    if (!row[0]) continue;
    json by_threshold = json::object();
    for (int t = 0; t < kNumIouThresholds; ++t) {
      char key[8];
      std::snprintf(key, sizeof(key), "%.2f", IouThreshold(t));
      by_threshold[key] = *row[t];
    }
    ap[std::string(ClassCode(c))] = std::move(by_threshold);
  }
  out["ap"] = std::move(ap);
  out["map50"] = report.map.map50;
  out["map75"] = report.map.map75;
  out["map5095"] = report.map.map5095;
  out["fn_severity"] = SeverityToJson(report.fn_severity);

  json pipes = json::array();
  for (const PipeEvalResult& p : report.pipes) {
    std::string verdicts;
    verdicts.reserve(p.chunks.verdicts.size());
    for (const ChunkVerdict& v : p.chunks.verdicts) {
      switch (v.verdict) {
        case Verdict::kTP:
          verdicts += 'P';
          break;
        case Verdict::kFP:
          verdicts += 'F';
          break;
        case Verdict::kTN:
          verdicts += 'N';
          break;
        case Verdict::kFN:
          verdicts += 'M';
          break;
      }
    }
    json jp = CountsToJson(p.chunks.counts);
    jp["pipe_id"] = p.pipe_id;
    jp["meters"] = p.meters;
    // One letter per chunk: P=TP, F=FP, N=TN, M=FN (missed).
    jp["chunk_verdicts"] = std::move(verdicts);
    jp["fn_severity"] = SeverityToJson(p.fn_severity);
    pipes.push_back(std::move(jp));
  }
  out["pipes"] = std::move(pipes);
  return out;
}

std::string Fnv1aHex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view content) {
  static std::atomic<std::uint64_t> counter{0};
  std::filesystem::path tmp = path;
  tmp +=
      ".tmp." + std::to_string(counter.fetch_add(1)) + "." +
      std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace sewerdet

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

#include "cli.h"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "sewerdet/io.h"
#include "sewerdet/random.h"
#include "sewerdet/render.h"

namespace sewerdet::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config file handling.

template <typename T>
T Get(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw UsageError("config: '" + key + "' has the wrong type");
  }
}

void CheckKeys(const json& j, const std::string& where,
               const std::set<std::string>& allowed) {
  if (!j.is_object())
    throw UsageError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw UsageError("config: unknown key '" +
                       (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

DefectClass ClassOrThrow(const std::string& code) {
  const std::optional<DefectClass> c = ParseClassCode(code);
  if (!c) throw UsageError("unknown class code '" + code + "'");
  return *c;
}

std::vector<Stage> ParseStages(const std::vector<std::string>& names) {
  std::vector<Stage> stages;
  for (const std::string& n : names) {
    const std::optional<Stage> s = ParseStage(n);
    if (!s) throw UsageError("unknown postproc stage '" + n + "'");
    stages.push_back(*s);
  }
  return stages;
}

std::vector<std::string> SplitCommas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

const std::map<std::string, std::function<DetectorProfile()>>& Profiles() {
  static const auto* kProfiles =
      new std::map<std::string, std::function<DetectorProfile()>>{
          {"perfect", &DetectorProfile::Perfect},
          {"seam", &DetectorProfile::SeamSplit},
          {"noisy", &DetectorProfile::Noisy},
  };
  return *kProfiles;
}

void CheckDetector(const std::string& name) {
  if (name != "none" && !Profiles().count(name)) {
    throw UsageError("unknown detector profile '" + name +
                     "' (none, perfect, seam, noisy)");
  }
}

// ---------------------------------------------------------------------------
// Documents on disk.

std::vector<fs::path> ListInputs(const fs::path& path) {
  if (!fs::exists(path)) {
    throw FileNotFoundError("no such file or directory: " + path.string());
  }
  if (!fs::is_directory(path)) return {path};
  std::vector<fs::path> files;
  for (const fs::directory_entry& e : fs::directory_iterator(path)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw FileNotFoundError("no .json documents in " + path.string());
  }
  return files;
}

// Loads pipe documents and orders them by pipe id so that results do not
// depend on file names or thread scheduling.
std::vector<PipeDocument> LoadDocuments(const fs::path& path, int jobs) {
  const std::vector<fs::path> files = ListInputs(path);
  std::vector<PipeDocument> docs(files.size());
  ParallelFor(static_cast<int>(files.size()), jobs, [&](int i) {
    try {
      docs[i] = ParsePipeDocument(ReadTextFile(files[i]));
    } catch (const SchemaError& e) {
      throw SchemaError(files[i].string() + ": " + e.what());
    }
  });
  std::sort(docs.begin(), docs.end(),
            [](const PipeDocument& a, const PipeDocument& b) {
              return a.geometry.pipe_id < b.geometry.pipe_id;
            });
  for (size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].geometry.pipe_id == docs[i - 1].geometry.pipe_id) {
      throw SchemaError("duplicate pipe_id '" + docs[i].geometry.pipe_id +
                        "' in " + path.string());
    }
  }
  return docs;
}

void EnsureDirectory(const fs::path& dir) {
  if (dir.empty()) throw UsageError("--output is required");
  fs::create_directories(dir);
}

std::string SafeFileStem(const std::string& pipe_id) {
  std::string s = pipe_id;
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return s.empty() ? "pipe" : s;
}

Provenance MakeProvenance(const RunConfig& config) {
  Provenance p;
  p.seed = config.seed;
  p.config_hash = Fnv1aHex(ConfigToJson(config).dump());
  return p;
}

std::vector<Detection> AllDetections(const PipeDocument& doc) {
  std::vector<Detection> dets = doc.detections;
  for (const CylindricalSpan& s : doc.spans) {
    for (Detection& d : Flatten(s)) dets.push_back(std::move(d));
  }
  return dets;
}

ConfusionCounts ParseCounts(const std::string& text) {
  const std::vector<std::string> parts = SplitCommas(text);
  if (parts.size() != 4) {
    throw UsageError("--counts expects TP,FP,TN,FN");
  }
  std::int64_t v[4];
  for (int i = 0; i < 4; ++i) {
    const std::string& p = parts[i];
    auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), v[i]);
    if (ec != std::errc() || ptr != p.data() + p.size() || v[i] < 0) {
      throw UsageError("--counts: '" + p + "' is not a non-negative integer");
    }
  }
  return ConfusionCounts{v[0], v[1], v[2], v[3]};
}

// ---------------------------------------------------------------------------
// Verbs.

struct Paths {
  std::string input;
  std::string output;
  std::string annotations;
  std::string detections;
  std::string counts;
  std::optional<std::int64_t> chunks;
};

void RunSynth(const RunConfig& config, const Paths& paths, std::ostream& out,
              std::ostream& err) {
  EnsureDirectory(paths.output);
  if (config.pipes < 1) throw UsageError("--pipes must be >= 1");
  CheckDetector(config.detector);
  Validate(config.pipe);
  const Provenance prov = MakeProvenance(config);
  std::vector<std::string> warnings(config.pipes);
  ParallelFor(config.pipes, config.jobs, [&](int i) {
    char id[32];
    std::snprintf(id, sizeof(id), "pipe-%04d", i);
    PipeSpec spec = config.pipe;
    spec.pipe_id = id;
    const SyntheticPipe pipe =
        GeneratePipe(spec, DeriveSeed(config.seed, Stream::kPipe, i));
    PipeDocument doc;
    doc.geometry = pipe.geometry;
    doc.annotations = pipe.annotations;
    if (config.detector != "none") {
      doc.detections =
          SimulateDetector(pipe.geometry, pipe.annotations,
                           Profiles().at(config.detector)(),
                           DeriveSeed(config.seed, Stream::kDetector, i))
              .detections;
    }
    doc.provenance = prov;
    const fs::path base = fs::path(paths.output) / SafeFileStem(id);
    WriteFileAtomic(fs::path(base).replace_extension(".json"),
                    SerializePipeDocument(doc));
    if (config.overlay) {
      RenderOptions opts;
      opts.seed = config.seed;
      opts.pixel_budget = config.pixel_budget;
      const RenderResult r =
          RenderOverlay(doc.geometry, doc.annotations, doc.detections, opts);
      for (const std::string& w : r.warnings) warnings[i] += w + "\n";
      WriteFileAtomic(fs::path(base).replace_extension(".ppm"),
                      EncodePpm(r.image));
    }
  });
  for (const std::string& w : warnings) err << w;
  out << "wrote " << config.pipes << " pipe documents to " << paths.output
      << "\n";
}

void RunTile(const RunConfig& config, const Paths& paths, std::ostream& out) {
  if (paths.input.empty()) throw UsageError("--input is required");
  if (paths.output.empty()) throw UsageError("--output is required");
  Validate(config.tiler);
  const std::vector<PipeDocument> docs =
      LoadDocuments(paths.input, config.jobs);
  for (const PipeDocument& d : docs) {
    if (d.geometry.height_px != config.tiler.patch_size_px) {
      throw InfeasibleError(
          "patch size " + std::to_string(config.tiler.patch_size_px) +
          " does not match mosaic height " +
          std::to_string(d.geometry.height_px) + " of " + d.geometry.pipe_id);
    }
  }
  std::vector<std::string> lines(docs.size());
  ParallelFor(static_cast<int>(docs.size()), config.jobs, [&](int i) {
    AnnotatedPipe pipe{docs[i].geometry, docs[i].annotations};
    for (const PatchSample& s : ExportPipePatches(pipe, i, config.tiler)) {
      lines[i] += ToJson(s).dump() + "\n";
    }
  });
  std::string manifest;
  for (const std::string& l : lines) manifest += l;
  const fs::path target(paths.output);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  WriteFileAtomic(target, manifest);
  out << "wrote tile manifest for " << docs.size() << " pipes to "
      << paths.output << "\n";
}

void RunPostprocVerb(const RunConfig& config, const Paths& paths,
                     std::ostream& out, std::ostream& err) {
  if (paths.input.empty()) throw UsageError("--input is required");
  Validate(config.postproc);
  const std::vector<PipeDocument> docs =
      LoadDocuments(paths.input, config.jobs);
  EnsureDirectory(paths.output);
  const Provenance prov = MakeProvenance(config);
  std::vector<std::string> warnings(docs.size());
  ParallelFor(static_cast<int>(docs.size()), config.jobs, [&](int i) {
    PipeDocument doc = docs[i];
    PostprocResult r =
        RunPostproc(AllDetections(doc), doc.geometry, config.postproc);
    doc.detections = std::move(r.detections);
    doc.spans = std::move(r.spans);
    doc.audit = std::move(r.audit);
    doc.provenance = prov;
    for (const RuleEvent& e : doc.audit) {
      if (e.kind == RuleEventKind::kSkipped) {
        warnings[i] += "warning: " + doc.geometry.pipe_id + ": rule '" +
                       e.rule + "' skipped: " + e.detail + "\n";
      }
    }
    WriteFileAtomic(
        fs::path(paths.output) / (SafeFileStem(doc.geometry.pipe_id) + ".json"),
        SerializePipeDocument(doc));
  });
  for (const std::string& w : warnings) err << w;
  out << "post-processed " << docs.size() << " pipes into " << paths.output
      << "\n";
}

std::string FormatCountsSummary(const ConfusionCounts& k, std::int64_t chunks,
                                const SummaryStats& s) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "Sections %lld: TP %lld, TN %lld, FP %lld, FN %lld\n"
                "Accuracy %.2f%%, precision %.2f%%, recall %.2f%%, F1 %.2f%%\n",
                static_cast<long long>(chunks), static_cast<long long>(k.tp),
                static_cast<long long>(k.tn), static_cast<long long>(k.fp),
                static_cast<long long>(k.fn), 100.0 * s.accuracy,
                100.0 * s.precision, 100.0 * s.recall, 100.0 * s.f1);
  return buf;
}

std::vector<PipeEvalInput> PairDocuments(
    const std::vector<PipeDocument>& truth,
    const std::vector<PipeDocument>* predicted) {
  std::map<std::string, const PipeDocument*> by_id;
  if (predicted) {
    for (const PipeDocument& d : *predicted) by_id[d.geometry.pipe_id] = &d;
  }
  std::vector<PipeEvalInput> inputs;
  for (const PipeDocument& t : truth) {
    PipeEvalInput in;
    in.geometry = t.geometry;
    in.annotations = t.annotations;
    const PipeDocument* source = &t;
    if (predicted) {
      auto it = by_id.find(t.geometry.pipe_id);
      if (it == by_id.end()) {
        throw FileNotFoundError("no detections for pipe '" +
                                t.geometry.pipe_id + "'");
      }
      source = it->second;
      if (source->geometry != t.geometry) {
        throw SchemaError("geometry of pipe '" + t.geometry.pipe_id +
                          "' differs between annotations and detections");
      }
    }
    in.detections = AllDetections(*source);
    inputs.push_back(std::move(in));
  }
  return inputs;
}

void RunEval(const RunConfig& config, const Paths& paths, std::ostream& out) {
  Validate(config.eval);
  EvalReport report;
  std::string text;
  if (!paths.counts.empty()) {
    if (!paths.annotations.empty() || !paths.detections.empty()) {
      throw UsageError("--counts cannot be combined with input documents");
    }
    report.counts = ParseCounts(paths.counts);
    const std::int64_t chunks = paths.chunks.value_or(report.counts.total());
    if (chunks <= 0) throw UsageError("--chunks must be positive");
    if (chunks < report.counts.tp + report.counts.tn) {
      throw InfeasibleError("--chunks " + std::to_string(chunks) +
                            " is smaller than TP + TN");
    }
    report.chunk_total = chunks;
    report.stats = ComputeSummaryStats(report.counts, chunks);
    text = FormatCountsSummary(report.counts, chunks, report.stats);
  } else {
    if (paths.chunks) throw UsageError("--chunks requires --counts");
    if (paths.annotations.empty()) {
      throw UsageError("--annotations (or --counts) is required");
    }
    const std::vector<PipeDocument> truth =
        LoadDocuments(paths.annotations, config.jobs);
    std::vector<PipeDocument> predicted;
    if (!paths.detections.empty()) {
      predicted = LoadDocuments(paths.detections, config.jobs);
    }
    const std::vector<PipeEvalInput> inputs =
        PairDocuments(truth, paths.detections.empty() ? nullptr : &predicted);
    report = Evaluate(inputs, config.eval);
    text = FormatEvalTables(report);
  }
  out << text;
  if (!paths.output.empty()) {
    EnsureDirectory(paths.output);
    json j = ToJson(report, config.eval);
    const Provenance prov = MakeProvenance(config);
    j["provenance"] = {{"tool_version", prov.tool_version},
                       {"seed", prov.seed},
                       {"config_hash", prov.config_hash}};
    WriteFileAtomic(fs::path(paths.output) / "eval_report.json",
                    j.dump(2) + "\n");
    WriteFileAtomic(fs::path(paths.output) / "eval_report.txt", text);
  }
}

void RunReport(const RunConfig& config, const Paths& paths, std::ostream& out,
               std::ostream& err) {
  if (paths.input.empty()) throw UsageError("--input is required");
  Validate(config.eval);
  const std::vector<PipeDocument> docs =
      LoadDocuments(paths.input, config.jobs);
  EnsureDirectory(paths.output);
  std::vector<json> rows(docs.size());
  std::vector<std::string> warnings(docs.size());
  ParallelFor(static_cast<int>(docs.size()), config.jobs, [&](int i) {
    const PipeDocument& doc = docs[i];
    RenderOptions opts;
    opts.seed = config.seed;
    opts.pixel_budget = config.pixel_budget;
    const std::vector<Detection> dets = AllDetections(doc);
    const RenderResult r =
        RenderOverlay(doc.geometry, doc.annotations, dets, opts);
    const std::string name = SafeFileStem(doc.geometry.pipe_id) + ".ppm";
    WriteFileAtomic(fs::path(paths.output) / name, EncodePpm(r.image));
    for (const std::string& w : r.warnings)
      warnings[i] += "warning: " + w + "\n";
    rows[i] = {{"pipe_id", doc.geometry.pipe_id},
               {"meters", doc.geometry.length_m()},
               {"annotations", doc.annotations.size()},
               {"detections", doc.detections.size()},
               {"spans", doc.spans.size()},
               {"rule_events", doc.audit.size()},
               {"overlay", name},
               {"overlay_downscale", r.downscale}};
  });
  for (const std::string& w : warnings) err << w;

  std::vector<PipeEvalInput> inputs = PairDocuments(docs, nullptr);
  const EvalReport report = Evaluate(inputs, config.eval);
  const std::string text = FormatEvalTables(report);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["pipes"] = rows;
  j["evaluation"] = ToJson(report, config.eval);
  const Provenance prov = MakeProvenance(config);
  j["provenance"] = {{"tool_version", prov.tool_version},
                     {"seed", prov.seed},
                     {"config_hash", prov.config_hash}};
  WriteFileAtomic(fs::path(paths.output) / "report.json", j.dump(2) + "\n");
  WriteFileAtomic(fs::path(paths.output) / "report.txt", text);
  out << text;
}

// ---------------------------------------------------------------------------
// Error reporting.

int Fail(std::ostream& err, int code, std::string_view category,
         const std::string& message, json extra = json::object()) {
  json e = {{"category", category}, {"message", message}};
  for (auto& [k, v] : extra.items()) e[k] = v;
  err << json{{"error", e}}.dump() << "\n";
  return code;
}

}  // namespace

void ApplyConfigJson(const json& j, RunConfig& c) {
  CheckKeys(j, "",
            {"seed", "jobs", "tiler", "postproc", "eval", "synth", "render"});
  if (j.contains("seed")) c.seed = Get<std::uint64_t>(j["seed"], "seed");
  if (j.contains("jobs")) c.jobs = Get<int>(j["jobs"], "jobs");
  if (j.contains("tiler")) {
    const json& t = j["tiler"];
    CheckKeys(t, "tiler",
              {"patch_size_px", "stride_px", "network_size_px",
               "min_visible_fraction"});
    if (t.contains("patch_size_px")) {
      c.tiler.patch_size_px = Get<int>(t["patch_size_px"], "patch_size_px");
    }
    if (t.contains("stride_px")) {
      c.tiler.stride_px = Get<int>(t["stride_px"], "stride_px");
    }
    if (t.contains("network_size_px")) {
      c.tiler.network_size_px =
          Get<int>(t["network_size_px"], "network_size_px");
    }
    if (t.contains("min_visible_fraction")) {
      c.tiler.min_visible_fraction =
          Get<double>(t["min_visible_fraction"], "min_visible_fraction");
    }
  }
  if (j.contains("postproc")) {
    const json& p = j["postproc"];
    CheckKeys(p, "postproc",
              {"confidence_floor", "per_class_thresholds", "merge_iou",
               "nms_iou", "min_axial_overlap", "stages", "ruleset"});
    if (p.contains("confidence_floor")) {
      c.postproc.policy.global_floor =
          Get<double>(p["confidence_floor"], "confidence_floor");
    }
    if (p.contains("per_class_thresholds")) {
      const json& pc = p["per_class_thresholds"];
      if (!pc.is_object()) {
        throw UsageError("config: 'per_class_thresholds' must be an object");
      }
      for (const auto& [code, value] : pc.items()) {
        c.postproc.policy.per_class[ClassIndex(ClassOrThrow(code))] =
            Get<double>(value, code);
      }
    }
    if (p.contains("merge_iou")) {
      c.postproc.merge_iou = Get<double>(p["merge_iou"], "merge_iou");
    }
    if (p.contains("nms_iou")) {
      c.postproc.nms_iou = Get<double>(p["nms_iou"], "nms_iou");
    }
    if (p.contains("min_axial_overlap")) {
      c.postproc.min_axial_overlap =
          Get<double>(p["min_axial_overlap"], "min_axial_overlap");
    }
    if (p.contains("stages")) {
      c.postproc.stages =
          ParseStages(Get<std::vector<std::string>>(p["stages"], "stages"));
    }
    if (p.contains("ruleset")) {
      c.ruleset_path = Get<std::string>(p["ruleset"], "ruleset");
    }
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    CheckKeys(e, "eval", {"chunk_width_px", "match_iou"});
    if (e.contains("chunk_width_px")) {
      c.eval.chunk_width_px = Get<int>(e["chunk_width_px"], "chunk_width_px");
    }
    if (e.contains("match_iou")) {
      c.eval.match_iou = Get<double>(e["match_iou"], "match_iou");
    }
  }
  if (j.contains("synth")) {
    const json& s = j["synth"];
    CheckKeys(
        s, "synth",
        {"pipes", "length_m", "px_per_meter_axial", "height_px", "material",
         "joint_spacing_m", "ceiling_fraction", "root_max_distance_m",
         "rates_per_100m", "severity_weights", "detector", "overlay"});
    if (s.contains("pipes")) c.pipes = Get<int>(s["pipes"], "pipes");
    if (s.contains("length_m")) {
      c.pipe.length_m = Get<double>(s["length_m"], "length_m");
    }
    if (s.contains("px_per_meter_axial")) {
      c.pipe.px_per_meter_axial =
          Get<double>(s["px_per_meter_axial"], "px_per_meter_axial");
    }
    if (s.contains("height_px")) {
      c.pipe.height_px = Get<int>(s["height_px"], "height_px");
    }
    if (s.contains("material")) {
      const std::string m = Get<std::string>(s["material"], "material");
      const std::optional<Material> parsed = ParseMaterial(m);
      if (!parsed) throw UsageError("config: unknown material '" + m + "'");
      c.pipe.material = *parsed;
    }
    if (s.contains("joint_spacing_m")) {
      c.pipe.joint_spacing_m =
          Get<double>(s["joint_spacing_m"], "joint_spacing_m");
    }
    if (s.contains("ceiling_fraction")) {
      c.pipe.ceiling_fraction =
          Get<double>(s["ceiling_fraction"], "ceiling_fraction");
    }
    if (s.contains("root_max_distance_m")) {
      c.pipe.root_max_distance_m =
          Get<double>(s["root_max_distance_m"], "root_max_distance_m");
    }
    if (s.contains("rates_per_100m")) {
      const json& r = s["rates_per_100m"];
      if (!r.is_object()) {
        throw UsageError("config: 'rates_per_100m' must be an object");
      }
      for (const auto& [code, value] : r.items()) {
        c.pipe.rate_per_100m[ClassIndex(ClassOrThrow(code))] =
            Get<double>(value, code);
      }
    }
    if (s.contains("severity_weights")) {
      const auto w =
          Get<std::vector<double>>(s["severity_weights"], "severity_weights");
      if (w.size() != kNumSeverities) {
        throw UsageError("config: 'severity_weights' needs 5 entries");
      }
      std::array<double, kNumSeverities> a{};
      std::copy(w.begin(), w.end(), a.begin());
      c.pipe.severity_weights = a;
    }
    if (s.contains("detector")) {
      c.detector = Get<std::string>(s["detector"], "detector");
      CheckDetector(c.detector);
    }
    if (s.contains("overlay")) c.overlay = Get<bool>(s["overlay"], "overlay");
  }
  if (j.contains("render")) {
    const json& r = j["render"];
    CheckKeys(r, "render", {"pixel_budget"});
    if (r.contains("pixel_budget")) {
      c.pixel_budget = Get<std::int64_t>(r["pixel_budget"], "pixel_budget");
    }
  }
}

json ConfigToJson(const RunConfig& c) {
  json per_class = json::object();
  for (DefectClass cls : kAllClasses) {
    const auto& t = c.postproc.policy.per_class[ClassIndex(cls)];
    if (t) per_class[std::string(ClassCode(cls))] = *t;
  }
  std::vector<std::string> stages;
  for (Stage s : c.postproc.stages) stages.emplace_back(StageName(s));
  json rates = json::object();
  for (DefectClass cls : kAllClasses) {
    rates[std::string(ClassCode(cls))] = c.pipe.rate_per_100m[ClassIndex(cls)];
  }
  json synth = {{"pipes", c.pipes},
                {"length_m", c.pipe.length_m},
                {"px_per_meter_axial", c.pipe.px_per_meter_axial},
                {"height_px", c.pipe.height_px},
                {"material", std::string(MaterialName(c.pipe.material))},
                {"joint_spacing_m", c.pipe.joint_spacing_m},
                {"ceiling_fraction", c.pipe.ceiling_fraction},
                {"root_max_distance_m", c.pipe.root_max_distance_m},
                {"rates_per_100m", rates},
                {"detector", c.detector},
                {"overlay", c.overlay}};
  if (c.pipe.severity_weights) {
    synth["severity_weights"] = *c.pipe.severity_weights;
  }
  // Jobs are left out: outputs do not depend on them.
  return {{"seed", c.seed},
          {"tiler",
           {{"patch_size_px", c.tiler.patch_size_px},
            {"stride_px", c.tiler.stride_px},
            {"network_size_px", c.tiler.network_size_px},
            {"min_visible_fraction", c.tiler.min_visible_fraction}}},
          {"postproc",
           {{"confidence_floor", c.postproc.policy.global_floor},
            {"per_class_thresholds", per_class},
            {"merge_iou", c.postproc.merge_iou},
            {"nms_iou", c.postproc.nms_iou},
            {"min_axial_overlap", c.postproc.min_axial_overlap},
            {"stages", stages},
            {"rules", FormatRuleSet(c.postproc.rules)}}},
          {"eval",
           {{"chunk_width_px", c.eval.chunk_width_px},
            {"match_iou", c.eval.match_iou}}},
          {"synth", synth},
          {"render", {{"pixel_budget", c.pixel_budget}}}};
}

void ParallelFor(int n, int jobs, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::clamp(jobs, 1, n);
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < workers; ++t) {
      threads.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (std::thread& t : threads) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int Main(const std::vector<std::string>& args, std::ostream& out,
         std::ostream& err) {
  CLI::App app{"Sewer inspection detection toolkit", "sewerdet"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs, chunk_width, patch, stride, network, pipes;
  std::optional<double> iou, floor, merge_iou, nms_iou, min_overlap,
      min_visible, length_m, px_per_meter, joint_spacing;
  std::optional<std::int64_t> pixel_budget;
  std::optional<std::string> ruleset, stages, material, detector;
  bool overlay = false;
  Paths paths;

  app.add_option("--config", config_path, "JSON config file")
      ->envname("SEWERDET_CONFIG");
  app.add_option("--seed", seed, "Master seed")->envname("SEWERDET_SEED");
  app.add_option("--jobs", jobs, "Worker threads")->envname("SEWERDET_JOBS");
  app.add_option("--chunk-width", chunk_width, "Chunk width in pixels")
      ->envname("SEWERDET_CHUNK_WIDTH");
  app.add_option("--iou", iou, "Object match IoU threshold")
      ->envname("SEWERDET_IOU");
  app.add_option("--ruleset", ruleset, "Rule file")
      ->envname("SEWERDET_RULESET");
  app.add_option("--floor", floor, "Global confidence floor")
      ->envname("SEWERDET_FLOOR");
  app.add_option("--stages", stages, "Comma-separated postproc stages");
  app.add_option("--merge-iou", merge_iou, "IoU link threshold for merging");
  app.add_option("--nms-iou", nms_iou, "IoU suppression threshold for NMS");
  app.add_option("--min-axial-overlap", min_overlap,
                 "Minimum axial overlap for seam stitching");
  app.add_option("--patch", patch, "Patch size in pixels");
  app.add_option("--stride", stride, "Window stride in pixels");
  app.add_option("--network-size", network, "Network input size");
  app.add_option("--min-visible", min_visible,
                 "Minimum visible fraction of a clipped box");
  app.add_option("--pixel-budget", pixel_budget, "Overlay pixel budget");

  CLI::App* synth = app.add_subcommand("synth", "Generate synthetic pipes");
  synth->add_option("--output", paths.output, "Output directory");
  synth->add_option("--pipes", pipes, "Number of pipes");
  synth->add_option("--length-m", length_m, "Pipe length in meters");
  synth->add_option("--px-per-meter", px_per_meter, "Axial pixels per meter");
  synth->add_option("--joint-spacing-m", joint_spacing, "Joint spacing");
  synth->add_option("--material", material, "Pipe material");
  synth->add_option("--detector", detector,
                    "Detector profile: none, perfect, seam, noisy");
  synth->add_flag("--overlay", overlay, "Also write overlay rasters");

  CLI::App* tile = app.add_subcommand("tile", "Export training patches");
  tile->add_option("--input", paths.input, "Pipe document or directory");
  tile->add_option("--output", paths.output, "Manifest file (JSON lines)");

  CLI::App* postproc =
      app.add_subcommand("postproc", "Post-process raw detections");
  postproc->add_option("--input", paths.input, "Pipe document or directory");
  postproc->add_option("--output", paths.output, "Output directory");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate detections");
  eval->add_option("--annotations", paths.annotations,
                   "Ground-truth document or directory");
  eval->add_option("--detections", paths.detections,
                   "Detection documents (default: same as annotations)");
  eval->add_option("--output", paths.output, "Report directory");
  eval->add_option("--counts", paths.counts,
                   "Evaluate given chunk counts TP,FP,TN,FN");
  eval->add_option("--chunks", paths.chunks,
                   "Number of evaluated sections for --counts");

  CLI::App* report = app.add_subcommand("report", "Overlays and summary");
  report->add_option("--input", paths.input, "Pipe document or directory");
  report->add_option("--output", paths.output, "Output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    RunConfig config;
    if (config_path) {
      json j;
      try {
        j = json::parse(ReadTextFile(*config_path));
      } catch (const json::parse_error& e) {
        throw UsageError("config " + *config_path + ": " + e.what());
      }
      ApplyConfigJson(j, config);
    }
    if (seed) config.seed = *seed;
    if (jobs) config.jobs = *jobs;
    if (config.jobs < 1) throw UsageError("--jobs must be >= 1");
    if (chunk_width) config.eval.chunk_width_px = *chunk_width;
    if (iou) config.eval.match_iou = *iou;
    if (ruleset) config.ruleset_path = *ruleset;
    if (floor) config.postproc.policy.global_floor = *floor;
    if (stages) config.postproc.stages = ParseStages(SplitCommas(*stages));
    if (merge_iou) config.postproc.merge_iou = *merge_iou;
    if (nms_iou) config.postproc.nms_iou = *nms_iou;
    if (min_overlap) config.postproc.min_axial_overlap = *min_overlap;
    if (patch) config.tiler.patch_size_px = *patch;
    if (stride) config.tiler.stride_px = *stride;
    if (network) config.tiler.network_size_px = *network;
    if (min_visible) config.tiler.min_visible_fraction = *min_visible;
    if (pixel_budget) config.pixel_budget = *pixel_budget;
    if (pipes) config.pipes = *pipes;
    if (length_m) config.pipe.length_m = *length_m;
    if (px_per_meter) config.pipe.px_per_meter_axial = *px_per_meter;
    if (joint_spacing) config.pipe.joint_spacing_m = *joint_spacing;
    if (material) {
      const std::optional<Material> m = ParseMaterial(*material);
      if (!m) throw UsageError("unknown material '" + *material + "'");
      config.pipe.material = *m;
    }
    if (detector) config.detector = *detector;
    if (overlay) config.overlay = true;
    config.tiler.seed = config.seed;
    if (!config.ruleset_path.empty()) {
      const std::string text = ReadTextFile(config.ruleset_path);
      try {
        config.postproc.rules = ParseRuleSet(text);
      } catch (const RuleParseError& e) {
        return Fail(err, kExitUsage, "bad_config",
                    config.ruleset_path + ": " + e.what(),
                    {{"file", config.ruleset_path},
                     {"line", e.line()},
                     {"column", e.column()}});
      }
    }

    if (synth->parsed()) {
      RunSynth(config, paths, out, err);
    } else if (tile->parsed()) {
      RunTile(config, paths, out);
    } else if (postproc->parsed()) {
      RunPostprocVerb(config, paths, out, err);
    } else if (eval->parsed()) {
      RunEval(config, paths, out);
    } else if (report->parsed()) {
      RunReport(config, paths, out, err);
    }
    return kExitOk;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return Fail(err, kExitUsage, "usage", e.what());
  } catch (const InfeasibleError& e) {
    return Fail(err, kExitInfeasible, "infeasible", e.what());
  } catch (const UsageError& e) {
    return Fail(err, kExitUsage, "bad_config", e.what());
  } catch (const FileNotFoundError& e) {
    return Fail(err, kExitMissingFile, "missing_file", e.what());
  } catch (const SchemaError& e) {
    return Fail(err, kExitBadSchema, "bad_schema", e.what());
  } catch (const std::exception& e) {
    return Fail(err, kExitInternal, "internal", e.what());
  }
}

}  // namespace sewerdet::cli

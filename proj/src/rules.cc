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

#include "sewerdet/rules.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sewerdet {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

double GapToPoint(const PixelBox& b, int position) {
  if (position < b.x) return b.x - position;
  if (position > b.right()) return position - b.right();
  return 0.0;
}

double GapBetween(const PixelBox& a, const PixelBox& b) {
  const int gap = std::max(a.x - b.right(), b.x - a.right());
  return gap > 0 ? gap : 0.0;
}

bool NeedsJoints(const Atom& a) {
  return std::holds_alternative<atom::MinDistanceToJointOrConnectionExceeds>(
             a) ||
         std::holds_alternative<atom::WithinDistanceOfJoint>(a);
}

bool Holds(const Atom& a, const Detection& d, const PipeContext& ctx) {
  const MosaicGeometry& g = ctx.geometry;
  return std::visit(
      Overloaded{
          [&](const atom::ClassIs& x) { return d.cls == x.cls; },
          [&](const atom::MinDistanceToJointOrConnectionExceeds& x) {
            return AxialDistanceToJointOrConnectionPx(d.box, ctx) /
                       g.px_per_meter_axial >
                   x.meters;
          },
          [&](const atom::WithinDistanceOfJoint& x) {
            return AxialDistanceToJointPx(d.box, ctx) / g.px_per_meter_axial <=
                   x.meters;
          },
          [&](const atom::VerticalExtentFractionAtLeast& x) {
            return static_cast<double>(d.box.h) / g.height_px >= x.fraction;
          },
          [&](const atom::AspectRatioAtLeast& x) {
            return static_cast<double>(d.box.h) / d.box.w >= x.h_over_w;
          },
          [&](const atom::MaterialIs& x) { return g.material == x.material; },
      },
      a);
}

std::string FormatNumber(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void Validate(const Rule& rule) {
  const std::string where = "rule '" + rule.name + "': ";
  if (rule.atoms.empty()) throw UsageError(where + "needs at least one atom");
  for (const Atom& a : rule.atoms) {
    std::visit(Overloaded{
                   [](const atom::ClassIs&) {},
                   [](const atom::MaterialIs&) {},
                   [&](const atom::MinDistanceToJointOrConnectionExceeds& x) {
                     if (!(x.meters >= 0.0))
                       throw UsageError(where + "negative distance");
                   },
                   [&](const atom::WithinDistanceOfJoint& x) {
                     if (!(x.meters >= 0.0))
                       throw UsageError(where + "negative distance");
                   },
                   [&](const atom::VerticalExtentFractionAtLeast& x) {
                     if (!(x.fraction >= 0.0 && x.fraction <= 1.0)) {
                       throw UsageError(where + "fraction must be in [0, 1]");
                     }
                   },
                   [&](const atom::AspectRatioAtLeast& x) {
                     if (!(x.h_over_w >= 0.0))
                       throw UsageError(where + "negative ratio");
                   },
               },
               a);
  }
  if (const auto* s = std::get_if<action::ScaleConfidence>(&rule.action)) {
    if (!(s->factor > 0.0 && s->factor <= 1.0)) {
      throw UsageError(where + "scale factor must be in (0, 1]");
    }
  }
}

PipeContext MakePipeContext(const MosaicGeometry& geometry,
                            std::span<const Detection> detections) {
  PipeContext ctx{geometry, {}};
  for (const Detection& d : detections) {
    if (d.cls == DefectClass::kConnection)
      ctx.connection_boxes.push_back(d.box);
  }
  return ctx;
}

double AxialDistanceToJointPx(const PixelBox& box, const PipeContext& ctx) {
  double best = kInf;
  for (int j : ctx.geometry.joint_positions_px) {
    best = std::min(best, GapToPoint(box, j));
  }
  return best;
}

double AxialDistanceToJointOrConnectionPx(const PixelBox& box,
                                          const PipeContext& ctx) {
  double best = AxialDistanceToJointPx(box, ctx);
  for (const PixelBox& c : ctx.connection_boxes) {
    best = std::min(best, GapBetween(box, c));
  }
  return best;
}

std::string_view RuleEventKindName(RuleEventKind kind) {
  switch (kind) {
    case RuleEventKind::kSuppressed:
      return "suppressed";
    case RuleEventKind::kScaled:
      return "scaled";
    case RuleEventKind::kTagged:
      return "tagged";
    case RuleEventKind::kSkipped:
      return "skipped";
  }
  return "?";
}

RuleResult ApplyRules(std::span<const Detection> detections,
                      const PipeContext& ctx, std::span<const Rule> rules) {
  RuleResult result;
  const bool has_anchors =
      !ctx.geometry.joint_positions_px.empty() || !ctx.connection_boxes.empty();
  std::vector<char> active(rules.size(), 1);
  for (size_t r = 0; r < rules.size(); ++r) {
    Validate(rules[r]);
    const bool needs =
        std::any_of(rules[r].atoms.begin(), rules[r].atoms.end(), NeedsJoints);
    if (needs && !has_anchors) {
      active[r] = 0;
      result.audit.push_back({"", rules[r].name, RuleEventKind::kSkipped,
                              "pipe has neither joints nor connections"});
    }
  }

  for (const Detection& input : detections) {
    Detection d = input;
    bool suppressed = false;
    for (size_t r = 0; r < rules.size() && !suppressed; ++r) {
      if (!active[r]) continue;
      const Rule& rule = rules[r];
      const bool match =
          std::all_of(rule.atoms.begin(), rule.atoms.end(),
                      [&](const Atom& a) { return Holds(a, d, ctx); });
      if (!match) continue;
      std::visit(
          Overloaded{
              [&](const action::Suppress&) {
                suppressed = true;
                result.audit.push_back(
                    {d.id, rule.name, RuleEventKind::kSuppressed, ""});
              },
              [&](const action::ScaleConfidence& s) {
                const double before = d.confidence;
                d.confidence = std::clamp(before * s.factor, 0.0, 1.0);
                result.audit.push_back({d.id, rule.name, RuleEventKind::kScaled,
                                        FormatNumber(before) + " -> " +
                                            FormatNumber(d.confidence)});
              },
              [&](const action::Tag& t) {
                d.tags.push_back(t.note);
                result.audit.push_back(
                    {d.id, rule.name, RuleEventKind::kTagged, t.note});
              },
          },
          rule.action);
    }
    if (!suppressed) result.detections.push_back(std::move(d));
  }
  return result;
}

std::vector<Rule> DefaultExpertRules() {
  using C = DefectClass;
  return {
      {"roots_away_from_joints",
       {atom::ClassIs{C::kRoot},
        atom::MinDistanceToJointOrConnectionExceeds{1.0}},
       action::ScaleConfidence{0.5}},
      {"circumferential_fissure_at_joint",
       {atom::ClassIs{C::kFissure}, atom::VerticalExtentFractionAtLeast{0.5},
        atom::AspectRatioAtLeast{2.0}, atom::WithinDistanceOfJoint{0.3}},
       action::ScaleConfidence{0.5}},
      {"glaze_fissure_at_clay_joint",
       {atom::ClassIs{C::kFissure}, atom::MaterialIs{Material::kVitrifiedClay},
        atom::WithinDistanceOfJoint{0.3}},
       action::Tag{"glaze fissure, structurally unproblematic"}},
      {"corrosion_on_concrete",
       {atom::ClassIs{C::kSurfaceDamage},
        atom::MaterialIs{Material::kConcrete}},
       action::Tag{"chemical corrosion typical for concrete"}},
  };
}

}  // namespace sewerdet

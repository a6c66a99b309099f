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

#include <algorithm>

#include "sewerdet/assignment.h"
#include "sewerdet/postproc.h"

namespace sewerdet {

StitchResult StitchSeam(std::span<const Detection> dets,
                        const MosaicGeometry& geometry,
                        double min_axial_overlap) {
  if (!(min_axial_overlap >= 0.0 && min_axial_overlap <= 1.0)) {
    throw UsageError("minimum axial overlap must be in [0, 1]");
  }
  const int height = geometry.height_px;
  std::vector<char> consumed(dets.size(), 0);
  // (index of top part, span) so spans can be emitted in input order.
  std::vector<std::pair<size_t, CylindricalSpan>> found;

  for (DefectClass cls : kAllClasses) {
    std::vector<size_t> tops, bottoms;
    for (size_t i = 0; i < dets.size(); ++i) {
      const Detection& d = dets[i];
      if (d.cls != cls) continue;
      const bool top = d.box.y == 0;
      const bool bottom = d.box.bottom() == height;
      if (top && !bottom) tops.push_back(i);
      if (bottom && !top) bottoms.push_back(i);
    }
    if (tops.empty() || bottoms.empty()) continue;

    AssignmentProblem<double> problem;
    problem.cost.resize(static_cast<Eigen::Index>(tops.size()),
                        static_cast<Eigen::Index>(bottoms.size()));
    for (size_t r = 0; r < tops.size(); ++r) {
      for (size_t c = 0; c < bottoms.size(); ++c) {
        const double overlap =
            AxialOverlapRatio(dets[tops[r]].box, dets[bottoms[c]].box);
        problem.cost(r, c) = 1.0 - overlap;
        if (overlap < min_axial_overlap) problem.forbid.emplace(r, c);
      }
    }
    for (const IndexPair& pr : SolveAssignment(problem).pairs) {
      const Detection& top = dets[tops[pr.first]];
      const Detection& bottom = dets[bottoms[pr.second]];
      consumed[tops[pr.first]] = 1;
      consumed[bottoms[pr.second]] = 1;
      found.emplace_back(
          tops[pr.first],
          CylindricalSpan{top.box, bottom.box, cls,
                          std::max(top.confidence, bottom.confidence), top.id,
                          bottom.id});
    }
  }

  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  StitchResult result;
  for (size_t i = 0; i < dets.size(); ++i) {
    if (!consumed[i]) result.detections.push_back(dets[i]);
  }
  for (auto& [index, span] : found) result.spans.push_back(std::move(span));
  return result;
}

}  // namespace sewerdet

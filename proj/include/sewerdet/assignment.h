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

// Minimum-cost bipartite assignment over a dense Eigen cost matrix with
// forbidden pairs.
//
// The objective is lexicographic: first maximise the number of matched pairs
// (so an infeasible square problem degrades to a maximum partial matching),
// then minimise the summed cost. Among equal optima the matching whose sorted
// (row, col) list is lexicographically smallest is returned.
//
// The solver splits the allowed-pair graph into connected components, runs
// the shortest-augmenting-path Hungarian method on each, and then fixes rows
// one by one in ascending order, trying columns in ascending order and
// keeping the first choice that preserves the optimum.

#ifndef SEWERDET_ASSIGNMENT_H_
#define SEWERDET_ASSIGNMENT_H_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "sewerdet/core.h"

namespace sewerdet {

template <typename Scalar>
using CostMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using IndexPair = std::pair<Eigen::Index, Eigen::Index>;

template <typename Scalar>
struct AssignmentProblem {
  CostMatrix<Scalar> cost;  // rows x cols
  std::set<IndexPair> forbid;
};

template <typename Scalar>
struct Matching {
  std::vector<IndexPair> pairs;  // ascending
  Scalar total_cost{0};
  // True when min(rows, cols) pairs were matched.
  bool complete = true;
};

namespace internal {

// (-matched, cost); ordered lexicographically.
template <typename Scalar>
struct LexValue {
  std::int64_t unmatched_penalty = 0;
  Scalar cost{0};

  LexValue operator+(const LexValue& o) const {
    return {unmatched_penalty + o.unmatched_penalty, cost + o.cost};
  }
  LexValue operator-(const LexValue& o) const {
    return {unmatched_penalty - o.unmatched_penalty, cost - o.cost};
  }
  LexValue& operator+=(const LexValue& o) { return *this = *this + o; }
  LexValue& operator-=(const LexValue& o) { return *this = *this - o; }
  bool operator<(const LexValue& o) const {
    if (unmatched_penalty != o.unmatched_penalty) {
      return unmatched_penalty < o.unmatched_penalty;
    }
    return cost < o.cost;
  }
};

template <typename Scalar>
class ComponentSolver {
 public:
  ComponentSolver(
      const CostMatrix<Scalar>& cost,
      const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& allowed,
      Scalar tolerance)
      : cost_(cost), allowed_(allowed), tolerance_(tolerance) {}

  // Lexicographically smallest optimal matching restricted to the given rows
  // and columns (both ascending).
  std::vector<IndexPair> Solve(std::vector<Eigen::Index> rows,
                               std::vector<Eigen::Index> cols) const {
    std::vector<IndexPair> result;
    LexValue<Scalar> target = Optimum(rows, cols);
    const std::vector<Eigen::Index> all_rows = rows;
    for (Eigen::Index r : all_rows) {
      rows.erase(std::find(rows.begin(), rows.end(), r));
      for (auto it = cols.begin(); it != cols.end(); ++it) {
        const Eigen::Index c = *it;
        if (!allowed_(r, c)) continue;
        std::vector<Eigen::Index> rest(cols.begin(), it);
        rest.insert(rest.end(), std::next(it), cols.end());
        const LexValue<Scalar> sub = Optimum(rows, rest);
        const LexValue<Scalar> with{sub.unmatched_penalty - 1,
                                    sub.cost + cost_(r, c)};
        if (Equal(with, target)) {
          result.emplace_back(r, c);
          target = sub;
          cols = std::move(rest);
          break;
        }
      }
    }
    return result;
  }

 private:
  bool Equal(const LexValue<Scalar>& a, const LexValue<Scalar>& b) const {
    if (a.unmatched_penalty != b.unmatched_penalty) return false;
    const Scalar diff = a.cost > b.cost ? a.cost - b.cost : b.cost - a.cost;
    return diff <= tolerance_;
  }

  // Optimal (-matched, cost) over the given rows and columns, computed with
  // the O(n^2 m) potentials formulation of the Hungarian method. Forbidden
  // entries carry a unit penalty and are discarded from the result.
  LexValue<Scalar> Optimum(const std::vector<Eigen::Index>& rows,
                           const std::vector<Eigen::Index>& cols) const {
    if (rows.empty() || cols.empty()) return {};
    const bool transpose = rows.size() > cols.size();
    const std::vector<Eigen::Index>& r_idx = transpose ? cols : rows;
    const std::vector<Eigen::Index>& c_idx = transpose ? rows : cols;
    const size_t n = r_idx.size();
    const size_t m = c_idx.size();

    auto entry = [&](size_t i, size_t j) -> LexValue<Scalar> {
      const Eigen::Index r = transpose ? c_idx[j] : r_idx[i];
      const Eigen::Index c = transpose ? r_idx[i] : c_idx[j];
      if (!allowed_(r, c)) return {1, Scalar{0}};
      return {0, cost_(r, c)};
    };

    const LexValue<Scalar> inf{std::numeric_limits<std::int64_t>::max() / 4,
                               Scalar{0}};
    std::vector<LexValue<Scalar>> u(n + 1), v(m + 1);
    std::vector<size_t> p(m + 1, 0), way(m + 1, 0);
    for (size_t i = 1; i <= n; ++i) {
      p[0] = i;
      size_t j0 = 0;
      std::vector<LexValue<Scalar>> minv(m + 1, inf);
      std::vector<char> used(m + 1, 0);
      do {
        used[j0] = 1;
        const size_t i0 = p[j0];
        LexValue<Scalar> delta = inf;
        size_t j1 = 0;
        for (size_t j = 1; j <= m; ++j) {
          if (used[j]) continue;
          const LexValue<Scalar> cur = entry(i0 - 1, j - 1) - u[i0] - v[j];
          if (cur < minv[j]) {
            minv[j] = cur;
            way[j] = j0;
          }
          if (minv[j] < delta) {
            delta = minv[j];
            j1 = j;
          }
        }
        for (size_t j = 0; j <= m; ++j) {
          if (used[j]) {
            u[p[j]] += delta;
            v[j] -= delta;
          } else {
            minv[j] -= delta;
          }
        }
        j0 = j1;
      } while (p[j0] != 0);
      do {
        const size_t j1 = way[j0];
        p[j0] = p[j1];
        j0 = j1;
      } while (j0 != 0);
    }

    // Re-sum in row order so equal matchings give bit-identical values.
    std::vector<size_t> col_of_row(n + 1, 0);
    for (size_t j = 1; j <= m; ++j) {
      if (p[j] != 0) col_of_row[p[j]] = j;
    }
    LexValue<Scalar> value;
    for (size_t i = 1; i <= n; ++i) {
      const LexValue<Scalar> e = entry(i - 1, col_of_row[i] - 1);
      if (e.unmatched_penalty == 0) {
        value.unmatched_penalty -= 1;
        value.cost += e.cost;
      }
    }
    return value;
  }

  const CostMatrix<Scalar>& cost_;
  const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& allowed_;
  Scalar tolerance_;
};

}  // namespace internal

template <typename Scalar>
Matching<Scalar> SolveAssignment(const AssignmentProblem<Scalar>& problem) {
  const CostMatrix<Scalar>& cost = problem.cost;
  const Eigen::Index rows = cost.rows();
  const Eigen::Index cols = cost.cols();

  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> allowed =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows, cols,
                                                                   true);
  for (const IndexPair& f : problem.forbid) {
    if (f.first < 0 || f.first >= rows || f.second < 0 || f.second >= cols) {
      throw UsageError("forbidden pair outside the cost matrix");
    }
    allowed(f.first, f.second) = false;
  }

  Scalar magnitude{0};
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!allowed(r, c)) continue;
      if constexpr (!std::numeric_limits<Scalar>::is_integer) {
        if (!std::isfinite(cost(r, c))) {
          throw UsageError("allowed assignment costs must be finite");
        }
      }
      magnitude += cost(r, c) < Scalar{0} ? -cost(r, c) : cost(r, c);
    }
  }
  Scalar tolerance{0};
  if constexpr (!std::numeric_limits<Scalar>::is_integer) {
    tolerance = static_cast<Scalar>(1e-10) * (Scalar{1} + magnitude);
  }

  // Connected components of the allowed-pair graph; rows are nodes
  // [0, rows), columns are nodes [rows, rows + cols).
  std::vector<Eigen::Index> parent(rows + cols);
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!allowed(r, c)) continue;
      const Eigen::Index a = find(r), b = find(rows + c);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }

  internal::ComponentSolver<Scalar> solver(cost, allowed, tolerance);
  Matching<Scalar> result;
  std::vector<char> done(rows + cols, 0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index root = find(r);
    if (done[root]) continue;
    done[root] = 1;
    std::vector<Eigen::Index> comp_rows, comp_cols;
    for (Eigen::Index rr = r; rr < rows; ++rr) {
      if (find(rr) == root) comp_rows.push_back(rr);
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (find(rows + c) == root) comp_cols.push_back(c);
    }
    if (comp_cols.empty()) continue;
    for (const IndexPair& pr : solver.Solve(comp_rows, comp_cols)) {
      result.pairs.push_back(pr);
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  for (const IndexPair& pr : result.pairs) {
    result.total_cost += cost(pr.first, pr.second);
  }
  result.complete =
      static_cast<Eigen::Index>(result.pairs.size()) == std::min(rows, cols);
  return result;
}

template <typename Derived>
Matching<typename Derived::Scalar> SolveAssignment(
    const Eigen::MatrixBase<Derived>& cost) {
  return SolveAssignment(
      AssignmentProblem<typename Derived::Scalar>{cost.eval(), {}});
}

}  // namespace sewerdet

#endif  // SEWERDET_ASSIGNMENT_H_

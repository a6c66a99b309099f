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

#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "sewerdet/rules.h"

namespace sewerdet {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool IsIdentStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool IsIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

// Cursor over one line of a rule file.
class LineParser {
 public:
  LineParser(std::string_view text, int line) : s_(text), line_(line) {}

  Rule ParseRule() {
    Rule rule;
    SkipSpace();
    rule.name = std::string(Ident("rule name"));
    SkipSpace();
    Expect(":");
    do {
      rule.atoms.push_back(ParseAtom());
      SkipSpace();
    } while (Consume("&&"));
    Expect("=>");
    SkipSpace();
    const size_t action_col = pos_;
    rule.action = ParseAction();
    SkipSpace();
    if (pos_ < s_.size() && s_[pos_] != '#') {
      Fail(pos_,
           "unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
    }
    try {
      Validate(rule);
    } catch (const UsageError& e) {
      Fail(action_col, e.what());
    }
    return rule;
  }

  [[noreturn]] void Fail(size_t col, const std::string& message) const {
    throw RuleParseError(line_, static_cast<int>(col) + 1, message);
  }

 private:
  void SkipSpace() {
    while (pos_ < s_.size() &&
           std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      ++pos_;
    }
  }

  bool Consume(std::string_view lit) {
    SkipSpace();
    if (s_.substr(pos_, lit.size()) == lit) {
      pos_ += lit.size();
      return true;
    }
    return false;
  }

  void Expect(std::string_view lit) {
    if (!Consume(lit)) {
      Fail(pos_, "expected '" + std::string(lit) + "'");
    }
  }

  std::string_view Ident(std::string_view what) {
    SkipSpace();
    const size_t start = pos_;
    if (pos_ >= s_.size() || !IsIdentStart(s_[pos_])) {
      Fail(pos_, "expected " + std::string(what));
    }
    while (pos_ < s_.size() && IsIdentChar(s_[pos_])) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  double Number() {
    SkipSpace();
    double value = 0.0;
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) Fail(pos_, "expected a number");
    pos_ += static_cast<size_t>(ptr - first);
    return value;
  }

  std::string Quoted() {
    SkipSpace();
    if (pos_ >= s_.size() || s_[pos_] != '"')
      Fail(pos_, "expected a quoted note");
    const size_t start = ++pos_;
    const size_t end = s_.find('"', start);
    if (end == std::string_view::npos) Fail(start - 1, "unterminated string");
    pos_ = end + 1;
    return std::string(s_.substr(start, end - start));
  }

  Atom ParseAtom() {
    SkipSpace();
    const size_t col = pos_;
    const std::string_view name = Ident("atom");
    Expect("(");
    SkipSpace();
    const size_t arg_col = pos_;
    Atom atom;
    if (name == "class_is") {
      const std::string_view code = Ident("class code");
      const auto cls = ParseClassCode(code);
      if (!cls) Fail(arg_col, "unknown class code '" + std::string(code) + "'");
      atom = atom::ClassIs{*cls};
    } else if (name == "material_is") {
      const std::string_view m = Ident("material");
      const auto material = ParseMaterial(m);
      if (!material) Fail(arg_col, "unknown material '" + std::string(m) + "'");
      atom = atom::MaterialIs{*material};
    } else if (name == "min_distance_to_joint_or_connection_exceeds") {
      atom = atom::MinDistanceToJointOrConnectionExceeds{Number()};
    } else if (name == "within_distance_of_joint") {
      atom = atom::WithinDistanceOfJoint{Number()};
    } else if (name == "vertical_extent_fraction_at_least") {
      atom = atom::VerticalExtentFractionAtLeast{Number()};
    } else if (name == "aspect_ratio_h_over_w_at_least") {
      atom = atom::AspectRatioAtLeast{Number()};
    } else {
      Fail(col, "unknown atom '" + std::string(name) + "'");
    }
    Expect(")");
    return atom;
  }

  Action ParseAction() {
    const size_t col = pos_;
    const std::string_view name = Ident("action");
    if (name == "suppress") {
      if (Consume("(")) Expect(")");
      return action::Suppress{};
    }
    if (name == "scale_confidence") {
      Expect("(");
      const double factor = Number();
      Expect(")");
      return action::ScaleConfidence{factor};
    }
    if (name == "tag") {
      Expect("(");
      std::string note = Quoted();
      Expect(")");
      return action::Tag{std::move(note)};
    }
    Fail(col, "unknown action '" + std::string(name) + "'");
  }

  std::string_view s_;
  int line_;
  size_t pos_ = 0;
};

std::string FormatNumber(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

RuleParseError::RuleParseError(int line, int column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

std::vector<Rule> ParseRuleSet(std::string_view text) {
  std::vector<Rule> rules;
  std::set<std::string> names;
  int line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;

    const size_t first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    LineParser parser(line, line_no);
    Rule rule = parser.ParseRule();
    if (!names.insert(rule.name).second) {
      parser.Fail(first, "duplicate rule name '" + rule.name + "'");
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::string FormatRuleSet(std::span<const Rule> rules) {
  std::ostringstream os;
  for (const Rule& rule : rules) {
    os << rule.name << ": ";
    for (size_t i = 0; i < rule.atoms.size(); ++i) {
      if (i > 0) os << " && ";
      std::visit(Overloaded{
                     [&](const atom::ClassIs& a) {
                       os << "class_is(" << ClassCode(a.cls) << ")";
                     },
                     [&](const atom::MinDistanceToJointOrConnectionExceeds& a) {
                       os << "min_distance_to_joint_or_connection_exceeds("
                          << FormatNumber(a.meters) << ")";
                     },
                     [&](const atom::WithinDistanceOfJoint& a) {
                       os << "within_distance_of_joint("
                          << FormatNumber(a.meters) << ")";
                     },
                     [&](const atom::VerticalExtentFractionAtLeast& a) {
                       os << "vertical_extent_fraction_at_least("
                          << FormatNumber(a.fraction) << ")";
                     },
                     [&](const atom::AspectRatioAtLeast& a) {
                       os << "aspect_ratio_h_over_w_at_least("
                          << FormatNumber(a.h_over_w) << ")";
                     },
                     [&](const atom::MaterialIs& a) {
                       os << "material_is(" << MaterialName(a.material) << ")";
                     },
                 },
                 rule.atoms[i]);
    }
    os << " => ";
    std::visit(
        Overloaded{
            [&](const action::Suppress&) { os << "suppress"; },
            [&](const action::ScaleConfidence& a) {
              os << "scale_confidence(" << FormatNumber(a.factor) << ")";
            },
            [&](const action::Tag& a) { os << "tag(\"" << a.note << "\")"; },
        },
        rule.action);
    os << "\n";
  }
  return os.str();
}

}  // namespace sewerdet

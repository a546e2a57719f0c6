#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twise/error.hpp"

namespace twise {

/// 0-based position of a feature in the feature list. Stable across all
/// modules for one model.
using FeatureId = int;

enum class NodeKind { Root, Mandatory, Optional, OrMember, XorMember };

inline bool is_group_member(NodeKind k) {
  return k == NodeKind::OrMember || k == NodeKind::XorMember;
}

/// Propositional cross-tree constraint over feature ids.
struct CtcExpr {
  enum class Op { Var, Not, And, Or, Implies };

  Op op = Op::Var;
  FeatureId var = -1; // Op::Var only
  std::shared_ptr<const CtcExpr> lhs;
  std::shared_ptr<const CtcExpr> rhs;

  static std::shared_ptr<const CtcExpr> make_var(FeatureId f) {
    auto e = std::make_shared<CtcExpr>();
    e->op = Op::Var;
    e->var = f;
    return e;
  }
  static std::shared_ptr<const CtcExpr> make(Op op,
                                             std::shared_ptr<const CtcExpr> l,
                                             std::shared_ptr<const CtcExpr> r = nullptr) {
    auto e = std::make_shared<CtcExpr>();
    e->op = op;
    e->lhs = std::move(l);
    e->rhs = std::move(r);
    return e;
  }
};

using CtcPtr = std::shared_ptr<const CtcExpr>;

inline bool ctc_equal(const CtcPtr& a, const CtcPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->op != b->op) return false;
  if (a->op == CtcExpr::Op::Var) return a->var == b->var;
  return ctc_equal(a->lhs, b->lhs) && ctc_equal(a->rhs, b->rhs);
}

struct Feature {
  std::string name;
  NodeKind kind = NodeKind::Optional;
  FeatureId parent = -1; // -1 for the root

  bool operator==(const Feature& o) const {
    return name == o.name && kind == o.kind && parent == o.parent;
  }
};

/// Tree of features plus cross-tree constraints. Immutable after parsing.
class FeatureModel {
public:
  FeatureModel() = default;
  FeatureModel(std::vector<Feature> features, std::vector<CtcPtr> ctcs)
      : features_(std::move(features)), ctcs_(std::move(ctcs)) {
    validate();
  }

  int num_features() const { return static_cast<int>(features_.size()); }
  const std::vector<Feature>& features() const { return features_; }
  const Feature& feature(FeatureId f) const { return features_.at(f); }
  const std::vector<CtcPtr>& ctcs() const { return ctcs_; }

  FeatureId root() const {
    for (FeatureId f = 0; f < num_features(); ++f)
      if (features_[f].kind == NodeKind::Root) return f;
    throw Error("feature model has no root");
  }

  std::optional<FeatureId> find(std::string_view name) const {
    for (FeatureId f = 0; f < num_features(); ++f)
      if (features_[f].name == name) return f;
    return std::nullopt;
  }

  std::vector<FeatureId> children(FeatureId parent) const {
    std::vector<FeatureId> out;
    for (FeatureId f = 0; f < num_features(); ++f)
      if (features_[f].parent == parent) out.push_back(f);
    return out;
  }

  /// Group members hanging below `parent` (empty when it heads no group).
  std::vector<FeatureId> group_members(FeatureId parent) const {
    std::vector<FeatureId> out;
    for (FeatureId f : children(parent))
      if (is_group_member(features_[f].kind)) out.push_back(f);
    return out;
  }

  bool operator==(const FeatureModel& o) const {
    if (features_ != o.features_) return false;
    if (ctcs_.size() != o.ctcs_.size()) return false;
    for (std::size_t i = 0; i < ctcs_.size(); ++i)
      if (!ctc_equal(ctcs_[i], o.ctcs_[i])) return false;
    return true;
  }

private:
  void validate() const {
    if (features_.empty()) throw Error("feature model has no features");
    int roots = 0;
    std::map<std::string, int> names;
    for (FeatureId f = 0; f < num_features(); ++f) {
      const Feature& ft = features_[f];
      if (ft.name.empty()) throw Error("feature with empty name");
      if (++names[ft.name] > 1) throw Error("duplicate feature name: " + ft.name);
      if (ft.kind == NodeKind::Root) {
        ++roots;
        if (ft.parent != -1) throw Error("root feature with a parent");
      } else {
        if (ft.parent < 0 || ft.parent >= num_features())
          throw Error("feature " + ft.name + " has no valid parent");
      }
    }
    if (roots != 1) throw Error("feature model must have exactly one root");
    for (FeatureId p = 0; p < num_features(); ++p) {
      int or_members = 0, xor_members = 0;
      for (FeatureId c : children(p)) {
        if (features_[c].kind == NodeKind::OrMember) ++or_members;
        if (features_[c].kind == NodeKind::XorMember) ++xor_members;
      }
      if (or_members > 0 && xor_members > 0)
        throw Error("feature " + features_[p].name + " heads both an or- and a xor-group");
      if ((or_members == 1) || (xor_members == 1))
        throw Error("group under " + features_[p].name + " has fewer than 2 members");
    }
    for (const CtcPtr& c : ctcs_) validate_ctc(c);
  }

  void validate_ctc(const CtcPtr& e) const {
    if (!e) throw Error("null constraint expression");
    if (e->op == CtcExpr::Op::Var) {
      if (e->var < 0 || e->var >= num_features())
        throw Error("constraint references unknown feature id");
      return;
    }
    validate_ctc(e->lhs);
    if (e->op != CtcExpr::Op::Not) validate_ctc(e->rhs);
  }

  std::vector<Feature> features_;
  std::vector<CtcPtr> ctcs_;
};

/// Declaration-ordered (id, name) projection of the feature list.
inline std::vector<std::pair<FeatureId, std::string>> feature_list(const FeatureModel& fm) {
  std::vector<std::pair<FeatureId, std::string>> out;
  out.reserve(fm.num_features());
  for (FeatureId f = 0; f < fm.num_features(); ++f)
    out.emplace_back(f, fm.feature(f).name);
  return out;
}

// ---------------------------------------------------------------------------
// DSL parser
//
// Line-based, indentation = 2 spaces per depth level:
//
//   <feature-line> := indent name [":" kind...]
//   kind           := "mandatory" | "optional" | "or" | "xor"
//   <ctc-line>     := "constraint:" expr
//   <order-line>   := "order:" name...
//
// Children of an "or"/"xor" line are the group members; a line may combine
// its own relation with a group kind ("Wing : mandatory xor"). The default
// kind for a child line is "optional"; the depth-0 line is the root. The
// optional "order:" directive fixes the feature-list index order; without it
// features are numbered in declaration order. Blank lines and "#" comments
// are ignored.
// ---------------------------------------------------------------------------

namespace detail {

inline bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return s != "constraint" && s != "order";
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

class CtcParser {
public:
  CtcParser(std::string_view text, int line,
            const std::map<std::string, FeatureId>& names)
      : text_(text), line_(line), names_(names) {}

  CtcPtr parse() {
    CtcPtr e = parse_implies();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("unexpected trailing input in constraint", line_, col());
    return e;
  }

private:
  CtcPtr parse_implies() {
    CtcPtr lhs = parse_or();
    skip_ws();
    if (match("=>")) return CtcExpr::make(CtcExpr::Op::Implies, lhs, parse_implies());
    return lhs;
  }

  CtcPtr parse_or() {
    CtcPtr e = parse_and();
    for (skip_ws(); match("|"); skip_ws())
      e = CtcExpr::make(CtcExpr::Op::Or, e, parse_and());
    return e;
  }

  CtcPtr parse_and() {
    CtcPtr e = parse_unary();
    for (skip_ws(); match("&"); skip_ws())
      e = CtcExpr::make(CtcExpr::Op::And, e, parse_unary());
    return e;
  }

  CtcPtr parse_unary() {
    skip_ws();
    if (match("!")) return CtcExpr::make(CtcExpr::Op::Not, parse_unary());
    if (match("(")) {
      CtcPtr e = parse_implies();
      skip_ws();
      if (!match(")")) throw ParseError("expected ')'", line_, col());
      return e;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_' || text_[pos_] == '-'))
      ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (name.empty()) throw ParseError("expected feature name in constraint", line_, col());
    auto it = names_.find(name);
    if (it == names_.end())
      throw ParseError("constraint references unknown feature: " + name, line_,
                       static_cast<int>(start) + 1);
    return CtcExpr::make_var(it->second);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool match(std::string_view tok) {
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  int col() const { return static_cast<int>(pos_) + 1; }

  std::string_view text_;
  int line_;
  const std::map<std::string, FeatureId>& names_;
  std::size_t pos_ = 0;
};

} // namespace detail

inline FeatureModel parse_feature_model(const std::string& text) {
  struct RawFeature {
    std::string name;
    NodeKind kind;
    FeatureId parent;
    bool heads_or = false, heads_xor = false;
    int line;
  };

  std::vector<RawFeature> raw;
  std::map<std::string, FeatureId> names;
  std::vector<std::pair<std::string, int>> ctc_lines; // text, line no
  std::vector<std::string> order;
  int order_line = 0;

  std::vector<FeatureId> stack; // stack[d] = last feature declared at depth d
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find('\t') != std::string::npos)
      throw ParseError("tab character in indentation (use 2 spaces per level)", lineno);
    std::size_t indent = 0;
    while (indent < line.size() && line[indent] == ' ') ++indent;
    std::string body = line.substr(indent);
    while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back())))
      body.pop_back();
    if (body.empty()) continue;

    if (body.rfind("constraint:", 0) == 0) {
      ctc_lines.emplace_back(body.substr(11), lineno);
      continue;
    }
    if (body.rfind("order:", 0) == 0) {
      if (!order.empty()) throw ParseError("duplicate order directive", lineno);
      order = detail::split_ws(body.substr(6));
      if (order.empty()) throw ParseError("empty order directive", lineno);
      order_line = lineno;
      continue;
    }

    if (indent % 2 != 0)
      throw ParseError("indentation must be a multiple of 2 spaces", lineno,
                       static_cast<int>(indent) + 1);
    int depth = static_cast<int>(indent / 2);

    std::string name = body;
    std::vector<std::string> kinds;
    if (auto colon = body.find(':'); colon != std::string::npos) {
      name = body.substr(0, colon);
      while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back())))
        name.pop_back();
      kinds = detail::split_ws(body.substr(colon + 1));
      if (kinds.empty()) throw ParseError("expected kind after ':'", lineno);
    }
    if (!detail::valid_name(name))
      throw ParseError("invalid feature name: '" + name + "'", lineno,
                       static_cast<int>(indent) + 1);
    if (names.count(name)) throw ParseError("duplicate feature name: " + name, lineno);

    RawFeature rf;
    rf.name = name;
    rf.line = lineno;
    bool own_set = false;
    NodeKind own = NodeKind::Optional;
    for (const std::string& k : kinds) {
      if (k == "mandatory" || k == "optional") {
        if (own_set) throw ParseError("conflicting kinds on feature " + name, lineno);
        own_set = true;
        own = (k == "mandatory") ? NodeKind::Mandatory : NodeKind::Optional;
      } else if (k == "or" || k == "xor") {
        if (rf.heads_or || rf.heads_xor)
          throw ParseError("conflicting group kinds on feature " + name, lineno);
        (k == "or" ? rf.heads_or : rf.heads_xor) = true;
      } else {
        throw ParseError("unknown kind '" + k + "'", lineno);
      }
    }

    if (depth == 0) {
      if (!raw.empty())
        throw ParseError("multiple root features (second root: " + name + ")", lineno);
      if (own_set) throw ParseError("root feature cannot carry a relation kind", lineno);
      rf.kind = NodeKind::Root;
      rf.parent = -1;
    } else {
      if (static_cast<int>(stack.size()) < depth)
        throw ParseError("indentation jumps more than one level", lineno,
                         static_cast<int>(indent) + 1);
      FeatureId parent = stack[depth - 1];
      rf.parent = parent;
      const RawFeature& pf = raw[parent];
      if (pf.heads_or || pf.heads_xor) {
        if (own_set)
          throw ParseError("group member " + name + " cannot carry its own kind", lineno);
        rf.kind = pf.heads_or ? NodeKind::OrMember : NodeKind::XorMember;
      } else {
        rf.kind = own;
      }
    }

    FeatureId id = static_cast<FeatureId>(raw.size());
    names[name] = id;
    raw.push_back(std::move(rf));
    stack.resize(depth);
    stack.push_back(id);
  }

  if (raw.empty()) throw ParseError("no features declared", std::max(lineno, 1));

  for (const RawFeature& rf : raw) {
    if (!rf.heads_or && !rf.heads_xor) continue;
    int members = 0;
    for (const RawFeature& c : raw)
      if (&c != &rf && c.parent == static_cast<FeatureId>(&rf - raw.data())) ++members;
    if (members < 2)
      throw ParseError("group under " + rf.name + " has fewer than 2 members", rf.line);
  }

  // Renumber by the order directive, when present.
  std::vector<FeatureId> new_id(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) new_id[i] = static_cast<FeatureId>(i);
  if (!order.empty()) {
    if (order.size() != raw.size())
      throw ParseError("order directive must list every feature exactly once", order_line);
    std::vector<bool> seen(raw.size(), false);
    std::vector<FeatureId> old_of_new(raw.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      auto it = names.find(order[pos]);
      if (it == names.end())
        throw ParseError("order directive names unknown feature: " + order[pos], order_line);
      if (seen[it->second])
        throw ParseError("order directive repeats feature: " + order[pos], order_line);
      seen[it->second] = true;
      new_id[it->second] = static_cast<FeatureId>(pos);
      old_of_new[pos] = it->second;
    }
    std::vector<RawFeature> reordered;
    reordered.reserve(raw.size());
    for (std::size_t pos = 0; pos < raw.size(); ++pos) {
      RawFeature rf = raw[old_of_new[pos]];
      if (rf.parent >= 0) rf.parent = new_id[rf.parent];
      reordered.push_back(std::move(rf));
    }
    raw = std::move(reordered);
    for (auto& [n, id] : names) id = new_id[id];
  }

  std::vector<Feature> features;
  features.reserve(raw.size());
  for (const RawFeature& rf : raw) features.push_back(Feature{rf.name, rf.kind, rf.parent});

  std::vector<CtcPtr> ctcs;
  for (const auto& [expr_text, ln] : ctc_lines)
    ctcs.push_back(detail::CtcParser(expr_text, ln, names).parse());

  return FeatureModel(std::move(features), std::move(ctcs));
}

// ---------------------------------------------------------------------------
// DSL writer (canonical form; parse(print(fm)) == fm)
// ---------------------------------------------------------------------------

namespace detail {

inline void print_ctc(std::ostringstream& out, const CtcPtr& e,
                      const std::vector<Feature>& features, int parent_prec) {
  // precedence: => 0 (right-assoc), | 1, & 2, ! 3
  switch (e->op) {
    case CtcExpr::Op::Var:
      out << features[e->var].name;
      return;
    case CtcExpr::Op::Not:
      out << "!";
      print_ctc(out, e->lhs, features, 3);
      return;
    case CtcExpr::Op::And:
    case CtcExpr::Op::Or:
    case CtcExpr::Op::Implies: {
      int prec = e->op == CtcExpr::Op::Implies ? 0 : (e->op == CtcExpr::Op::Or ? 1 : 2);
      bool parens = prec < parent_prec;
      if (parens) out << "(";
      // => is right-associative, so a left-nested => needs parentheses
      print_ctc(out, e->lhs, features, e->op == CtcExpr::Op::Implies ? prec + 1 : prec);
      out << (e->op == CtcExpr::Op::Implies ? " => " : e->op == CtcExpr::Op::Or ? " | " : " & ");
      print_ctc(out, e->rhs, features, prec);
      if (parens) out << ")";
      return;
    }
  }
}

inline void print_subtree(std::ostringstream& out, const FeatureModel& fm, FeatureId f,
                          int depth, std::vector<FeatureId>& emitted) {
  emitted.push_back(f);
  const Feature& ft = fm.feature(f);
  out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << ft.name;

  std::vector<std::string> kinds;
  if (ft.kind == NodeKind::Mandatory) kinds.push_back("mandatory");
  auto members = fm.group_members(f);
  if (!members.empty())
    kinds.push_back(fm.feature(members.front()).kind == NodeKind::OrMember ? "or" : "xor");
  if (!kinds.empty()) {
    out << " :";
    for (const auto& k : kinds) out << " " << k;
  }
  out << "\n";
  for (FeatureId c : fm.children(f)) print_subtree(out, fm, c, depth + 1, emitted);
}

} // namespace detail

inline std::string print_feature_model(const FeatureModel& fm) {
  std::ostringstream tree;
  std::vector<FeatureId> emitted;
  detail::print_subtree(tree, fm, fm.root(), 0, emitted);

  std::ostringstream out;
  bool dfs_order = true;
  for (std::size_t i = 0; i < emitted.size(); ++i)
    if (emitted[i] != static_cast<FeatureId>(i)) dfs_order = false;
  if (!dfs_order) {
    out << "order:";
    for (FeatureId f = 0; f < fm.num_features(); ++f) out << " " << fm.feature(f).name;
    out << "\n";
  }
  out << tree.str();
  for (const CtcPtr& c : fm.ctcs()) {
    std::ostringstream expr;
    detail::print_ctc(expr, c, fm.features(), 0);
    out << "constraint: " << expr.str() << "\n";
  }
  return out.str();
}

} // namespace twise

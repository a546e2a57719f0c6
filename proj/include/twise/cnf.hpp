#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "twise/error.hpp"
#include "twise/feature_model.hpp"

namespace twise {

/// Column value: feature i selected = 2*i, deselected = 2*i + 1.
using Value = int;

inline Value sel_value(FeatureId f) { return 2 * f; }
inline Value desel_value(FeatureId f) { return 2 * f + 1; }
inline FeatureId value_feature(Value v) { return v / 2; }
inline bool value_is_selected(Value v) { return v % 2 == 0; }

struct Literal {
  Value value = 0;
  bool negated = false;

  /// True when the literal, taken at face value, asserts the feature's
  /// selection ("+2i" and "!(2i+1)" both do).
  bool asserts_selected() const { return value_is_selected(value) == !negated; }
  FeatureId feature() const { return value_feature(value); }

  bool operator==(const Literal& o) const { return value == o.value && negated == o.negated; }
  auto operator<=>(const Literal& o) const = default;
};

inline Literal pos(Value v) { return Literal{v, false}; }
inline Literal neg(Value v) { return Literal{v, true}; }

/// Non-empty set of literals, kept sorted and duplicate-free.
struct Clause {
  std::vector<Literal> lits;

  Clause() = default;
  explicit Clause(std::vector<Literal> literals) : lits(std::move(literals)) {
    if (lits.empty()) throw Error("empty clause");
    std::sort(lits.begin(), lits.end());
    lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
  }
  Clause(std::initializer_list<Literal> literals)
      : Clause(std::vector<Literal>(literals)) {}

  bool operator==(const Clause& o) const { return lits == o.lits; }
};

/// CNF over CASA values. The per-feature exclusion (!2i | !(2i+1)) and
/// totality (2i | 2i+1) clauses are always present as a structural prefix;
/// they are never written to constraint files.
class CnfFormula {
public:
  explicit CnfFormula(int num_features) : num_features_(num_features) {
    if (num_features < 0) throw Error("negative feature count");
    clauses_.reserve(static_cast<std::size_t>(num_features) * 2);
    for (FeatureId f = 0; f < num_features; ++f) {
      clauses_.push_back(Clause{neg(sel_value(f)), neg(desel_value(f))});
      clauses_.push_back(Clause{pos(sel_value(f)), pos(desel_value(f))});
    }
    structural_ = clauses_.size();
  }

  int num_features() const { return num_features_; }
  int num_values() const { return 2 * num_features_; }

  void add_clause(Clause c) {
    for (const Literal& l : c.lits)
      if (l.value < 0 || l.value >= num_values())
        throw Error("literal value " + std::to_string(l.value) + " out of range 0.." +
                    std::to_string(num_values() - 1));
    clauses_.push_back(std::move(c));
  }

  const std::vector<Clause>& clauses() const { return clauses_; }

  /// Clauses beyond the structural prefix (the file-format payload).
  std::vector<Clause> payload_clauses() const {
    return {clauses_.begin() + static_cast<std::ptrdiff_t>(structural_), clauses_.end()};
  }
  std::size_t payload_size() const { return clauses_.size() - structural_; }

  bool contains_clause(const Clause& c) const {
    return std::find(clauses_.begin(), clauses_.end(), c) != clauses_.end();
  }

private:
  int num_features_;
  std::size_t structural_ = 0;
  std::vector<Clause> clauses_;
};

// ---------------------------------------------------------------------------
// Feature model -> CNF
// ---------------------------------------------------------------------------

namespace detail {

// NNF literal used while distributing CTC expressions.
struct NnfLit {
  FeatureId var;
  bool positive;
};

inline void ctc_to_clauses(const CtcPtr& e, bool negate,
                           std::vector<std::vector<NnfLit>>& out);

inline void cross_distribute(const CtcPtr& a, bool na, const CtcPtr& b, bool nb,
                             std::vector<std::vector<NnfLit>>& out) {
  std::vector<std::vector<NnfLit>> left, right;
  ctc_to_clauses(a, na, left);
  ctc_to_clauses(b, nb, right);
  for (const auto& l : left)
    for (const auto& r : right) {
      std::vector<NnfLit> merged = l;
      merged.insert(merged.end(), r.begin(), r.end());
      out.push_back(std::move(merged));
    }
}

inline void ctc_to_clauses(const CtcPtr& e, bool negate,
                           std::vector<std::vector<NnfLit>>& out) {
  switch (e->op) {
    case CtcExpr::Op::Var:
      out.push_back({NnfLit{e->var, !negate}});
      return;
    case CtcExpr::Op::Not:
      ctc_to_clauses(e->lhs, !negate, out);
      return;
    case CtcExpr::Op::And:
      if (!negate) {
        ctc_to_clauses(e->lhs, false, out);
        ctc_to_clauses(e->rhs, false, out);
      } else {
        cross_distribute(e->lhs, true, e->rhs, true, out); // !(a&b) = !a | !b
      }
      return;
    case CtcExpr::Op::Or:
      if (!negate) {
        cross_distribute(e->lhs, false, e->rhs, false, out);
      } else {
        ctc_to_clauses(e->lhs, true, out);
        ctc_to_clauses(e->rhs, true, out);
      }
      return;
    case CtcExpr::Op::Implies:
      if (!negate) {
        cross_distribute(e->lhs, true, e->rhs, false, out); // a=>b = !a | b
      } else {
        ctc_to_clauses(e->lhs, false, out);
        ctc_to_clauses(e->rhs, true, out);
      }
      return;
  }
}

inline int ctc_literal_count(const CtcPtr& e) {
  if (e->op == CtcExpr::Op::Var) return 1;
  int n = ctc_literal_count(e->lhs);
  if (e->op != CtcExpr::Op::Not) n += ctc_literal_count(e->rhs);
  return n;
}

} // namespace detail

/// Encode the tree and CTC constraints over CASA values. Selection literals
/// are written over even values ("!4 | 0" for Engine => Aircraft).
inline CnfFormula encode_fm_to_cnf(const FeatureModel& fm) {
  CnfFormula cnf(fm.num_features());

  cnf.add_clause(Clause{pos(sel_value(fm.root()))});

  for (FeatureId f = 0; f < fm.num_features(); ++f) {
    const Feature& ft = fm.feature(f);
    if (ft.kind == NodeKind::Root) continue;
    cnf.add_clause(Clause{neg(sel_value(f)), pos(sel_value(ft.parent))});
    if (ft.kind == NodeKind::Mandatory)
      cnf.add_clause(Clause{neg(sel_value(ft.parent)), pos(sel_value(f))});
  }

  for (FeatureId p = 0; p < fm.num_features(); ++p) {
    auto members = fm.group_members(p);
    if (members.empty()) continue;
    std::vector<Literal> at_least{neg(sel_value(p))};
    for (FeatureId m : members) at_least.push_back(pos(sel_value(m)));
    cnf.add_clause(Clause(at_least));
    if (fm.feature(members.front()).kind == NodeKind::XorMember) {
      for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j)
          cnf.add_clause(Clause{neg(sel_value(members[i])), neg(sel_value(members[j]))});
    }
  }

  for (const CtcPtr& ctc : fm.ctcs()) {
    if (detail::ctc_literal_count(ctc) > 16)
      throw Error("constraint expression exceeds the 16-literal distribution limit");
    std::vector<std::vector<detail::NnfLit>> raw;
    detail::ctc_to_clauses(ctc, false, raw);
    for (const auto& nnf : raw) {
      bool tautology = false;
      for (std::size_t i = 0; i < nnf.size() && !tautology; ++i)
        for (std::size_t j = i + 1; j < nnf.size(); ++j)
          if (nnf[i].var == nnf[j].var && nnf[i].positive != nnf[j].positive) {
            tautology = true;
            break;
          }
      if (tautology) continue;
      std::vector<Literal> lits;
      for (const auto& nl : nnf)
        lits.push_back(nl.positive ? pos(sel_value(nl.var)) : neg(sel_value(nl.var)));
      Clause c(lits);
      if (!cnf.contains_clause(c)) cnf.add_clause(std::move(c));
    }
  }

  return cnf;
}

} // namespace twise

#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <vector>

#include "twise/cnf.hpp"
#include "twise/error.hpp"

namespace twise {

/// Total polarity assignment, one per feature (Definition 2's [sel, desel]).
struct Assignment {
  std::vector<bool> selected;

  bool is_selected(FeatureId f) const { return selected.at(f); }
  int num_features() const { return static_cast<int>(selected.size()); }

  std::vector<Value> to_row() const {
    std::vector<Value> row;
    row.reserve(selected.size());
    for (FeatureId f = 0; f < num_features(); ++f)
      row.push_back(selected[f] ? sel_value(f) : desel_value(f));
    return row;
  }

  bool operator==(const Assignment& o) const { return selected == o.selected; }
};

using Assumptions = std::vector<Literal>;

inline bool literal_holds(const Literal& l, const Assignment& a) {
  return a.is_selected(l.feature()) == l.asserts_selected();
}

inline bool clause_holds(const Clause& c, const Assignment& a) {
  for (const Literal& l : c.lits)
    if (literal_holds(l, a)) return true;
  return false;
}

inline bool formula_holds(const CnfFormula& cnf, const Assignment& a) {
  for (const Clause& c : cnf.clauses())
    if (!clause_holds(c, a)) return false;
  return true;
}

/// DPLL over the boolean view of a value-encoded formula: each even/odd value
/// pair is one variable. Deterministic: decisions ascend by feature index,
/// preferred polarity first (selected unless a preference vector says
/// otherwise).
class Solver {
public:
  explicit Solver(const CnfFormula& cnf) : nvars_(cnf.num_features()) {
    for (const Clause& c : cnf.clauses()) {
      std::vector<int> bl;
      bool tautology = false;
      for (const Literal& l : c.lits) {
        int lit = blit(l);
        bool dup = false;
        for (int e : bl) {
          if (e == lit) dup = true;
          if (e == -lit) tautology = true;
        }
        if (!dup) bl.push_back(lit);
      }
      if (!tautology) clauses_.push_back(std::move(bl));
    }
  }

  std::optional<Assignment> solve(const Assumptions& assumptions = {}) const {
    return solve(assumptions, {});
  }

  std::optional<Assignment> solve(const Assumptions& assumptions,
                                  const std::vector<bool>& prefer_selected) const {
    std::vector<std::int8_t> a(nvars_, 0);
    for (const Literal& l : assumptions) {
      int v = l.feature();
      if (v < 0 || v >= nvars_) throw Error("assumption value out of range");
      std::int8_t want = l.asserts_selected() ? 1 : -1;
      if (a[v] != 0 && a[v] != want) return std::nullopt; // contradictory assumptions
      a[v] = want;
    }
    if (!search(a, prefer_selected)) return std::nullopt;
    Assignment out;
    out.selected.resize(nvars_);
    for (int v = 0; v < nvars_; ++v) out.selected[v] = a[v] == 1;
    return out;
  }

  /// All models, duplicate-free; throws when more than `cap` exist.
  std::vector<Assignment> enumerate(std::size_t cap) const {
    if (cap < 1) throw Error("enumeration cap must be >= 1");
    std::vector<Assignment> out;
    std::vector<std::int8_t> a(nvars_, 0);
    enum_search(a, cap, out);
    return out;
  }

private:
  static int blit(const Literal& l) {
    int v = l.feature() + 1;
    return l.asserts_selected() ? v : -v;
  }

  // Unit propagation to fixpoint; true on conflict.
  bool propagate(std::vector<std::int8_t>& a) const {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& cl : clauses_) {
        int unit = 0, open = 0;
        bool sat = false;
        for (int lit : cl) {
          std::int8_t val = a[std::abs(lit) - 1];
          if (val == 0) {
            ++open;
            unit = lit;
          } else if ((val == 1) == (lit > 0)) {
            sat = true;
            break;
          }
        }
        if (sat) continue;
        if (open == 0) return true;
        if (open == 1) {
          a[std::abs(unit) - 1] = unit > 0 ? 1 : -1;
          changed = true;
        }
      }
    }
    return false;
  }

  bool clause_satisfied(const std::vector<int>& cl, const std::vector<std::int8_t>& a) const {
    for (int lit : cl)
      if (a[std::abs(lit) - 1] == (lit > 0 ? 1 : -1)) return true;
    return false;
  }

  // Assign variables occurring with a single polarity in open clauses; true
  // when anything was assigned. Never conflicts.
  bool assign_pure_literals(std::vector<std::int8_t>& a) const {
    std::vector<std::uint8_t> seen(nvars_, 0); // bit0 positive, bit1 negative
    for (const auto& cl : clauses_) {
      if (clause_satisfied(cl, a)) continue;
      for (int lit : cl) {
        int v = std::abs(lit) - 1;
        if (a[v] == 0) seen[v] |= lit > 0 ? 1 : 2;
      }
    }
    bool changed = false;
    for (int v = 0; v < nvars_; ++v) {
      if (seen[v] == 1) {
        a[v] = 1;
        changed = true;
      } else if (seen[v] == 2) {
        a[v] = -1;
        changed = true;
      }
    }
    return changed;
  }

  int pick_branch_var(const std::vector<std::int8_t>& a) const {
    int best = nvars_;
    for (const auto& cl : clauses_) {
      if (clause_satisfied(cl, a)) continue;
      for (int lit : cl) {
        int v = std::abs(lit) - 1;
        if (a[v] == 0 && v < best) best = v;
      }
    }
    return best; // nvars_ when every clause is satisfied
  }

  std::int8_t preferred(int v, const std::vector<bool>& prefer_selected) const {
    if (prefer_selected.empty()) return 1;
    return prefer_selected[v] ? 1 : -1;
  }

  void fill_free(std::vector<std::int8_t>& a, const std::vector<bool>& prefer_selected) const {
    for (int v = 0; v < nvars_; ++v)
      if (a[v] == 0) a[v] = preferred(v, prefer_selected);
  }

  bool search(std::vector<std::int8_t>& a, const std::vector<bool>& prefer_selected) const {
    while (true) {
      if (propagate(a)) return false;
      if (!assign_pure_literals(a)) break;
    }
    int v = pick_branch_var(a);
    if (v == nvars_) {
      fill_free(a, prefer_selected);
      return true;
    }
    std::int8_t first = preferred(v, prefer_selected);
    for (std::int8_t val : {first, static_cast<std::int8_t>(-first)}) {
      std::vector<std::int8_t> b = a;
      b[v] = val;
      if (search(b, prefer_selected)) {
        a = std::move(b);
        return true;
      }
    }
    return false;
  }

  // Enumeration keeps every model, so no pure-literal pruning here.
  void enum_search(std::vector<std::int8_t>& a, std::size_t cap,
                   std::vector<Assignment>& out) const {
    if (propagate(a)) return;
    int v = pick_branch_var(a);
    if (v == nvars_) {
      expand_free(a, 0, cap, out);
      return;
    }
    for (std::int8_t val : {static_cast<std::int8_t>(1), static_cast<std::int8_t>(-1)}) {
      std::vector<std::int8_t> b = a;
      b[v] = val;
      enum_search(b, cap, out);
    }
  }

  void expand_free(std::vector<std::int8_t>& a, int from, std::size_t cap,
                   std::vector<Assignment>& out) const {
    int v = from;
    while (v < nvars_ && a[v] != 0) ++v;
    if (v == nvars_) {
      if (out.size() >= cap)
        throw Error("model count exceeds cap of " + std::to_string(cap));
      Assignment m;
      m.selected.resize(nvars_);
      for (int i = 0; i < nvars_; ++i) m.selected[i] = a[i] == 1;
      out.push_back(std::move(m));
      return;
    }
    for (std::int8_t val : {static_cast<std::int8_t>(1), static_cast<std::int8_t>(-1)}) {
      a[v] = val;
      expand_free(a, v + 1, cap, out);
    }
    a[v] = 0;
  }

  int nvars_;
  std::vector<std::vector<int>> clauses_;
};

/// SAT(witness) or UNSAT for cnf under the assumption literals.
inline std::optional<Assignment> solve(const CnfFormula& cnf,
                                       const Assumptions& assumptions = {}) {
  return Solver(cnf).solve(assumptions);
}

inline std::vector<Assignment> enumerate_models(const CnfFormula& cnf, std::size_t cap) {
  return Solver(cnf).enumerate(cap);
}

} // namespace twise

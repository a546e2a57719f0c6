#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "twise/cnf.hpp"
#include "twise/error.hpp"
#include "twise/sat.hpp"
#include "twise/tsets.hpp"

namespace twise {

/// Features neglectible during array generation: the root (Rule 1) and every
/// mandatory-equivalent feature (Rule 2), the latter mapped to its surviving
/// class representative.
struct ReductionSet {
  FeatureId root = -1;
  std::map<FeatureId, FeatureId> mandatories; // child -> representative parent

  std::set<FeatureId> reduceable() const {
    std::set<FeatureId> out{root};
    for (const auto& [c, p] : mandatories) out.insert(c);
    return out;
  }
  int m() const { return 1 + static_cast<int>(mandatories.size()); }
};

/// oldToNew / newToOld between the full and reduced value spaces. The root
/// pair maps to 2*(n-m), 2*(n-m)+1 -- outside the reduced range; mandatory
/// children share their representative's values; newToOld always answers
/// with the representative's old value.
struct ValueMapping {
  int full_features = 0;    // n
  int reduced_features = 0; // n - m
  std::vector<Value> old_to_new;
  std::vector<Value> new_to_old; // 2*(n-m) survivors plus the root pair

  Value oldToNew(Value v) const { return old_to_new.at(v); }
  Value newToOld(Value v) const { return new_to_old.at(v); }
};

/// Root test: f is a root feature if constraints AND NOT f is unsatisfiable.
inline bool root_test(const CnfFormula& cnf, FeatureId f) {
  return !Solver(cnf).solve({pos(desel_value(f))}).has_value();
}

/// Mandatory Child test: f2 is a mandatory child of f1 if neither
/// constraints AND NOT f1 AND f2 nor constraints AND f1 AND NOT f2 is
/// satisfiable (f1 and f2 are equivalent under the constraints).
inline bool mandatory_child_test(const CnfFormula& cnf, FeatureId f1, FeatureId f2) {
  Solver solver(cnf);
  if (solver.solve({pos(desel_value(f1)), pos(sel_value(f2))}).has_value()) return false;
  return !solver.solve({pos(sel_value(f1)), pos(desel_value(f2))}).has_value();
}

/// Determine the root and the mandatory-equivalence classes with SAT. The
/// root is the first feature passing the Root test; every later feature
/// equivalent to a surviving lower-indexed feature (or to the root) maps to
/// that representative. A witness pool prunes most solver calls: any known
/// model where two features differ disproves their equivalence.
inline ReductionSet find_mand_and_root(const CnfFormula& cnf) {
  int n = cnf.num_features();
  Solver solver(cnf);
  std::vector<Assignment> pool;
  {
    auto model = solver.solve();
    if (!model) throw Error("model is unsatisfiable: the product line is void");
    pool.push_back(std::move(*model));
  }

  ReductionSet rset;
  for (FeatureId f = 0; f < n && rset.root < 0; ++f) {
    bool disproved = false;
    for (const Assignment& a : pool)
      if (!a.is_selected(f)) {
        disproved = true;
        break;
      }
    if (disproved) continue;
    if (auto model = solver.solve({pos(desel_value(f))}))
      pool.push_back(std::move(*model));
    else
      rset.root = f;
  }
  if (rset.root < 0) throw Error("no feature passes the root test"); // unreachable on FM input

  std::vector<FeatureId> reps;
  for (FeatureId f = 0; f < n; ++f) {
    if (f == rset.root) {
      reps.push_back(f);
      continue;
    }
    bool assigned = false;
    for (FeatureId r : reps) {
      bool disproved = false;
      for (const Assignment& a : pool)
        if (a.is_selected(r) != a.is_selected(f)) {
          disproved = true;
          break;
        }
      if (disproved) continue;
      if (auto model = solver.solve({pos(desel_value(r)), pos(sel_value(f))})) {
        pool.push_back(std::move(*model));
        continue;
      }
      if (auto model = solver.solve({pos(sel_value(r)), pos(desel_value(f))})) {
        pool.push_back(std::move(*model));
        continue;
      }
      rset.mandatories[f] = r;
      assigned = true;
      break;
    }
    if (!assigned) reps.push_back(f);
  }
  return rset;
}

inline ValueMapping generate_mappings(const ReductionSet& rset, int n) {
  ValueMapping map;
  map.full_features = n;
  map.reduced_features = n - rset.m();
  int reduced = map.reduced_features;
  map.old_to_new.assign(2 * n, -1);
  map.new_to_old.assign(2 * reduced + 2, -1);

  map.old_to_new[sel_value(rset.root)] = 2 * reduced;
  map.old_to_new[desel_value(rset.root)] = 2 * reduced + 1;
  map.new_to_old[2 * reduced] = sel_value(rset.root);
  map.new_to_old[2 * reduced + 1] = desel_value(rset.root);

  int next = 0;
  for (FeatureId f = 0; f < n; ++f) {
    if (f == rset.root || rset.mandatories.count(f)) continue;
    map.old_to_new[sel_value(f)] = 2 * next;
    map.old_to_new[desel_value(f)] = 2 * next + 1;
    map.new_to_old[2 * next] = sel_value(f);
    map.new_to_old[2 * next + 1] = desel_value(f);
    ++next;
  }
  for (const auto& [child, parent] : rset.mandatories) {
    map.old_to_new[sel_value(child)] = map.old_to_new[sel_value(parent)];
    map.old_to_new[desel_value(child)] = map.old_to_new[desel_value(parent)];
  }
  return map;
}

/// Rewrite every literal through oldToNew and simplify: the root is a unit
/// fact, so literals asserting its selection satisfy their clause and
/// literals asserting its deselection drop out; clauses that merge into a
/// tautology disappear. The result ranges over the reduced values only.
inline CnfFormula adapt_constraints(const CnfFormula& cnf, const ValueMapping& map) {
  int reduced = map.reduced_features;
  CnfFormula out(reduced);
  for (const Clause& clause : cnf.payload_clauses()) {
    std::vector<Literal> lits;
    bool satisfied = false;
    for (const Literal& l : clause.lits) {
      Literal mapped{map.oldToNew(l.value), l.negated};
      if (mapped.feature() == reduced) { // the root pair
        if (mapped.asserts_selected()) {
          satisfied = true;
          break;
        }
        continue; // asserting root deselection is false: drop the literal
      }
      bool tautology = false;
      for (const Literal& e : lits)
        if (e.feature() == mapped.feature() &&
            e.asserts_selected() != mapped.asserts_selected()) {
          tautology = true;
          break;
        }
      if (tautology) {
        satisfied = true;
        break;
      }
      lits.push_back(mapped);
    }
    if (satisfied) continue;
    if (lits.empty())
      throw Error("clause became empty while adapting constraints: inconsistent model");
    Clause c(lits);
    if (!out.contains_clause(c)) out.add_clause(std::move(c));
  }
  return out;
}

/// Expand a reduced-space array back to the full feature space (one row at a
/// time): rewrite through newToOld, insert the root's selected value, then
/// give each mandatory child its parent's polarity; rows stay sorted.
inline CoveringArray expand(const CoveringArray& tca, const ValueMapping& map,
                            const ReductionSet& rset) {
  std::vector<std::vector<Value>> rows;
  rows.reserve(tca.rows.size());
  for (const auto& reduced_row : tca.rows) {
    std::vector<Value> row;
    row.reserve(map.full_features);
    for (Value v : reduced_row) row.push_back(map.newToOld(v));
    row.push_back(sel_value(rset.root));
    for (const auto& [child, parent] : rset.mandatories) {
      bool parent_selected =
          std::find(row.begin(), row.end(), sel_value(parent)) != row.end();
      row.push_back(parent_selected ? sel_value(child) : desel_value(child));
    }
    std::sort(row.begin(), row.end());
    rows.push_back(std::move(row));
  }
  return CoveringArray(tca.strength, map.full_features, std::move(rows));
}

/// Applying newToOld only -- the intermediate step of expand, exposed for
/// inspection.
inline std::vector<Value> map_row_to_old(const std::vector<Value>& reduced_row,
                                         const ValueMapping& map) {
  std::vector<Value> out;
  out.reserve(reduced_row.size());
  for (Value v : reduced_row) out.push_back(map.newToOld(v));
  return out;
}

struct ReductionReport {
  int n = 0;
  int m = 0;
  int strength = 0;
  std::vector<std::string> reduceable_names;
  unsigned long long tsets_full = 0;
  unsigned long long tsets_reduced = 0;

  double reduction_percent() const {
    if (tsets_full == 0) return 0.0;
    return 100.0 * (1.0 - static_cast<double>(tsets_reduced) / static_cast<double>(tsets_full));
  }
};

inline ReductionReport make_reduction_report(const ReductionSet& rset, int n, int t,
                                             const std::vector<std::string>& names = {}) {
  ReductionReport rep;
  rep.n = n;
  rep.m = rset.m();
  rep.strength = t;
  for (FeatureId f : rset.reduceable())
    rep.reduceable_names.push_back(f < static_cast<FeatureId>(names.size())
                                       ? names[f]
                                       : std::to_string(f));
  rep.tsets_full = count_tsets(n, t);
  rep.tsets_reduced = count_tsets(n - rep.m, t);
  return rep;
}

} // namespace twise

#pragma once

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "twise/cnf.hpp"
#include "twise/error.hpp"
#include "twise/sat.hpp"

namespace twise {

/// Partial configuration fixing the polarity of exactly t features.
/// Canonical storage: ascending feature index with a selected bit.
struct TSet {
  std::vector<std::pair<FeatureId, bool>> entries;

  int t() const { return static_cast<int>(entries.size()); }

  std::vector<FeatureId> sel() const {
    std::vector<FeatureId> out;
    for (const auto& [f, s] : entries)
      if (s) out.push_back(f);
    return out;
  }
  std::vector<FeatureId> desel() const {
    std::vector<FeatureId> out;
    for (const auto& [f, s] : entries)
      if (!s) out.push_back(f);
    return out;
  }

  Assumptions to_assumptions() const {
    Assumptions a;
    for (const auto& [f, s] : entries) a.push_back(pos(s ? sel_value(f) : desel_value(f)));
    return a;
  }

  bool operator==(const TSet& o) const { return entries == o.entries; }
};

inline std::string to_string(const TSet& ts, const std::vector<std::string>& names = {}) {
  auto name = [&](FeatureId f) {
    return f < static_cast<FeatureId>(names.size()) ? names[f] : std::to_string(f);
  };
  std::ostringstream out;
  out << "[{";
  bool first = true;
  for (const auto& [f, s] : ts.entries)
    if (s) out << (first ? "" : ", ") << name(f), first = false;
  out << "}, {";
  first = true;
  for (const auto& [f, s] : ts.entries)
    if (!s) out << (first ? "" : ", ") << name(f), first = false;
  out << "}]";
  return out.str();
}

inline unsigned long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  unsigned long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<unsigned long long>(n - k + i) / i;
  return r;
}

/// Number of distinct t-sets over n features: C(n,t) * 2^t.
inline unsigned long long count_tsets(int n, int t) {
  if (t < 0) throw Error("negative strength");
  return binomial(n, t) * (1ULL << t);
}

/// Visit every t-set over the non-excluded features: lexicographic order over
/// feature-index combinations, then binary polarity order (all-selected
/// first).
template <typename Fn>
inline void for_each_tset(int n, int t, const std::set<FeatureId>& excluded, Fn&& fn) {
  std::vector<FeatureId> pool;
  for (FeatureId f = 0; f < n; ++f)
    if (!excluded.count(f)) pool.push_back(f);
  int k = static_cast<int>(pool.size());
  if (t > k) return;

  std::vector<int> combo(t);
  for (int i = 0; i < t; ++i) combo[i] = i;
  while (true) {
    for (unsigned pol = 0; pol < (1u << t); ++pol) {
      TSet ts;
      ts.entries.reserve(t);
      for (int j = 0; j < t; ++j)
        ts.entries.emplace_back(pool[combo[j]], ((pol >> (t - 1 - j)) & 1) == 0);
      fn(ts);
    }
    int i = t - 1;
    while (i >= 0 && combo[i] == k - t + i) --i;
    if (i < 0) break;
    ++combo[i];
    for (int j = i + 1; j < t; ++j) combo[j] = combo[j - 1] + 1;
  }
}

inline std::vector<TSet> enumerate_tsets(int n, int t,
                                         const std::set<FeatureId>& excluded = {}) {
  std::vector<TSet> out;
  for_each_tset(n, t, excluded, [&](const TSet& ts) { out.push_back(ts); });
  return out;
}

inline bool is_valid_tset(const CnfFormula& cnf, const TSet& ts) {
  return Solver(cnf).solve(ts.to_assumptions()).has_value();
}

/// True when the row fixes every feature of ts to the polarity ts demands.
/// Rows are ascending value lists, so values[f] is feature f's value.
inline bool covers(const std::vector<Value>& row, const TSet& ts) {
  for (const auto& [f, s] : ts.entries)
    if (row[f] != (s ? sel_value(f) : desel_value(f))) return false;
  return true;
}

inline bool covers(const Assignment& a, const TSet& ts) {
  for (const auto& [f, s] : ts.entries)
    if (a.is_selected(f) != s) return false;
  return true;
}

/// Ordered set of full valid configurations in CASA value encoding.
struct CoveringArray {
  int strength = 0;
  int num_features = 0;
  std::vector<std::vector<Value>> rows;

  CoveringArray() = default;
  CoveringArray(int strength, int num_features, std::vector<std::vector<Value>> rows)
      : strength(strength), num_features(num_features), rows(std::move(rows)) {
    validate_shape();
  }

  void validate_shape() const {
    std::set<std::vector<Value>> seen;
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != num_features)
        throw Error("row width " + std::to_string(row.size()) + " does not match " +
                    std::to_string(num_features) + " features");
      for (FeatureId f = 0; f < num_features; ++f)
        if (row[f] != sel_value(f) && row[f] != desel_value(f))
          throw Error("row value " + std::to_string(row[f]) + " invalid at column " +
                      std::to_string(f));
      if (!seen.insert(row).second) throw Error("duplicate row in covering array");
    }
  }

  Assignment row_assignment(std::size_t i) const {
    Assignment a;
    a.selected.resize(num_features);
    for (FeatureId f = 0; f < num_features; ++f) a.selected[f] = row_selects(i, f);
    return a;
  }
  bool row_selects(std::size_t i, FeatureId f) const { return rows[i][f] == sel_value(f); }
};

struct CoverageReport {
  unsigned long long covered = 0;
  unsigned long long total = 0;
  std::vector<TSet> missing;

  bool full() const { return covered == total; }
  double percent() const { return total == 0 ? 100.0 : 100.0 * covered / total; }
};

/// The valid t-sets over the non-excluded features. A SAT witness pool
/// (seeded with `seed_pool`) short-circuits validity checks: a t-set covered
/// by a known model needs no solver call.
inline std::vector<TSet> valid_tsets(const CnfFormula& cnf, int t,
                                     const std::set<FeatureId>& excluded = {},
                                     std::vector<Assignment> seed_pool = {}) {
  Solver solver(cnf);
  std::vector<Assignment> pool = std::move(seed_pool);
  std::vector<TSet> out;
  for_each_tset(cnf.num_features(), t, excluded, [&](const TSet& ts) {
    for (const Assignment& a : pool)
      if (covers(a, ts)) {
        out.push_back(ts);
        return;
      }
    if (auto model = solver.solve(ts.to_assumptions())) {
      pool.push_back(std::move(*model));
      out.push_back(ts);
    }
  });
  return out;
}

/// Coverage of a known-valid t-set universe, no solver involved.
inline CoverageReport coverage_against(const std::vector<TSet>& universe,
                                       const CoveringArray& array,
                                       std::size_t missing_cap = 100) {
  CoverageReport rep;
  rep.total = universe.size();
  for (const TSet& ts : universe) {
    bool hit = false;
    for (const auto& row : array.rows)
      if (covers(row, ts)) {
        hit = true;
        break;
      }
    if (hit)
      ++rep.covered;
    else if (rep.missing.size() < missing_cap)
      rep.missing.push_back(ts);
  }
  return rep;
}

/// Full coverage check per Definition 5: every row must satisfy cnf (hard
/// error otherwise); totals count the valid t-sets over non-excluded
/// features.
inline CoverageReport verify_coverage(const CoveringArray& array, const CnfFormula& cnf,
                                      const std::set<FeatureId>& excluded = {},
                                      std::size_t missing_cap = 100) {
  if (array.num_features != cnf.num_features())
    throw Error("array width does not match formula feature count");
  std::vector<Assignment> pool;
  for (std::size_t i = 0; i < array.rows.size(); ++i) {
    Assignment a = array.row_assignment(i);
    if (!formula_holds(cnf, a))
      throw Error("row " + std::to_string(i) + " violates the model constraints");
    pool.push_back(std::move(a));
  }
  auto universe = valid_tsets(cnf, array.strength, excluded, std::move(pool));
  return coverage_against(universe, array, missing_cap);
}

} // namespace twise

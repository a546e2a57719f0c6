#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "twise/cnf.hpp"
#include "twise/error.hpp"
#include "twise/sat.hpp"
#include "twise/tsets.hpp"

namespace twise {

struct AnnealConfig {
  double initial_temperature = 0.5;
  double cooling_factor = 0.999999; // T *= factor, a 0.0001% decrease
  int iterations_per_temperature = 1;
  long long max_stagnation = 100000;
  long long max_iterations = 2000000; // per size probe
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (initial_temperature <= 0) throw Error("initial temperature must be > 0");
    if (cooling_factor <= 0 || cooling_factor >= 1)
      throw Error("cooling factor must be in (0, 1)");
    if (iterations_per_temperature < 1) throw Error("iterations per temperature must be >= 1");
  }
};

/// Deterministic RNG wrapper; bounded draws avoid std::distribution
/// implementation differences.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t below(std::uint64_t n) {
    std::uint64_t limit = ~0ULL - ~0ULL % n;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  double real() { return std::ldexp(static_cast<double>(eng_() >> 11), -53); } // [0,1)
  bool chance(double p) { return real() < p; }

  std::vector<bool> polarity_preferences(int n) {
    std::vector<bool> prefs(n);
    for (int i = 0; i < n; ++i) prefs[i] = chance(0.5);
    return prefs;
  }

private:
  std::mt19937_64 eng_;
};

/// Candidate array plus its bookkeeping. fitness = uncovered valid t-sets
/// + 10 * constraint violations summed over rows; fitness 0 with zero
/// violations means the candidate is a valid covering array.
struct SearchState {
  std::vector<std::vector<std::uint8_t>> rows; // rows[r][f] = selected
  std::vector<int> row_violations;
  long long uncovered = 0;
  long long total_violations = 0;

  long long fitness() const { return uncovered + kViolationPenalty * total_violations; }
  static constexpr int kViolationPenalty = 10;
};

inline double acceptance_probability(long long delta_fitness, double temperature) {
  if (delta_fitness <= 0) return 1.0;
  return std::exp(-static_cast<double>(delta_fitness) / temperature);
}

/// Simulated annealing over row assignments for a fixed universe of valid
/// t-sets. Moves: flip one (row, feature) polarity, or (p=0.1) replace a row
/// with a fresh SAT witness drawn under random polarity preferences.
class Annealer {
public:
  Annealer(const CnfFormula& cnf, std::vector<TSet> universe)
      : n_(cnf.num_features()), solver_(cnf), universe_(std::move(universe)) {
    by_feature_.resize(n_);
    clauses_of_feature_.resize(n_);
    for (std::size_t i = 0; i < universe_.size(); ++i)
      for (const auto& [f, s] : universe_[i].entries)
        by_feature_[f].push_back(static_cast<int>(i));

    for (const Clause& c : cnf.payload_clauses()) {
      std::vector<int> bl;
      bool tautology = false;
      for (const Literal& l : c.lits) {
        int lit = l.asserts_selected() ? l.feature() + 1 : -(l.feature() + 1);
        bool dup = false;
        for (int e : bl) {
          if (e == lit) dup = true;
          if (e == -lit) tautology = true;
        }
        if (!dup) bl.push_back(lit);
      }
      if (tautology) continue;
      int ci = static_cast<int>(bclauses_.size());
      bclauses_.push_back(std::move(bl));
      for (int lit : bclauses_.back()) clauses_of_feature_[std::abs(lit) - 1].push_back(ci);
    }
  }

  int num_features() const { return n_; }
  const std::vector<TSet>& universe() const { return universe_; }

  std::vector<std::uint8_t> witness_row(Rng& rng, const Assumptions& assumptions = {}) const {
    auto model = solver_.solve(assumptions, rng.polarity_preferences(n_));
    if (!model) throw Error("witness generation failed: formula unsatisfiable");
    std::vector<std::uint8_t> row(n_);
    for (int f = 0; f < n_; ++f) row[f] = model->selected[f] ? 1 : 0;
    return row;
  }

  /// One-pass greedy cover used as the outer search's upper bound: aim a
  /// bounded probe of witnesses at the first uncovered t-set, keep the one
  /// covering the most.
  std::vector<std::vector<std::uint8_t>> greedy_cover(Rng& rng) const {
    std::vector<std::vector<std::uint8_t>> rows;
    std::vector<char> covered(universe_.size(), 0);
    std::size_t remaining = universe_.size();
    while (remaining > 0) {
      std::size_t target = 0;
      while (covered[target]) ++target;
      Assumptions assume = universe_[target].to_assumptions();
      std::vector<std::uint8_t> best_row;
      std::size_t best_gain = 0;
      for (int probe = 0; probe < kGreedyProbes; ++probe) {
        auto row = witness_row(rng, assume);
        std::size_t gain = 0;
        for (std::size_t i = 0; i < universe_.size(); ++i)
          if (!covered[i] && row_covers(row, universe_[i])) ++gain;
        if (gain > best_gain) {
          best_gain = gain;
          best_row = std::move(row);
        }
      }
      for (std::size_t i = 0; i < universe_.size(); ++i)
        if (!covered[i] && row_covers(best_row, universe_[i])) {
          covered[i] = 1;
          --remaining;
        }
      rows.push_back(std::move(best_row));
    }
    return rows;
  }

  SearchState anneal_at_size(int num_rows, const AnnealConfig& cfg, Rng& rng) const {
    cfg.validate();
    if (num_rows < 1) throw Error("row count must be >= 1");
    SearchState st;
    for (int r = 0; r < num_rows; ++r) st.rows.push_back(witness_row(rng));
    std::vector<int> cover_count(universe_.size(), 0);
    for (const auto& row : st.rows)
      for (std::size_t i = 0; i < universe_.size(); ++i)
        if (row_covers(row, universe_[i])) ++cover_count[i];
    st.uncovered = static_cast<long long>(
        std::count(cover_count.begin(), cover_count.end(), 0));
    st.row_violations.assign(num_rows, 0); // SAT witnesses violate nothing

    SearchState best = st;
    double temperature = cfg.initial_temperature;
    long long stagnation = 0;
    std::vector<std::pair<int, bool>> toggles; // (t-set index, becomes covered)

    for (long long iter = 0; best.fitness() > 0 && iter < cfg.max_iterations &&
                             stagnation < cfg.max_stagnation;
         ++iter) {
      if (rng.chance(kReplaceProbability)) {
        int r = static_cast<int>(rng.below(num_rows));
        auto new_row = witness_row(rng);
        toggles.clear();
        long long delta_unc = 0;
        for (std::size_t i = 0; i < universe_.size(); ++i) {
          bool oc = row_covers(st.rows[r], universe_[i]);
          bool nc = row_covers(new_row, universe_[i]);
          if (oc == nc) continue;
          toggles.emplace_back(static_cast<int>(i), nc);
          if (oc && cover_count[i] == 1) ++delta_unc;
          if (nc && cover_count[i] == 0) --delta_unc;
        }
        long long delta_viol = -st.row_violations[r];
        long long delta = delta_unc + SearchState::kViolationPenalty * delta_viol;
        if (delta <= 0 || rng.real() < acceptance_probability(delta, temperature)) {
          for (auto [i, cov] : toggles) cover_count[i] += cov ? 1 : -1;
          st.uncovered += delta_unc;
          st.total_violations += delta_viol;
          st.row_violations[r] = 0;
          st.rows[r] = std::move(new_row);
        }
      } else {
        int r = static_cast<int>(rng.below(num_rows));
        int f = static_cast<int>(rng.below(n_));
        auto& row = st.rows[r];
        toggles.clear();
        long long delta_unc = 0;
        for (int i : by_feature_[f]) {
          const TSet& ts = universe_[i];
          if (!others_match(row, ts, f)) continue;
          bool before = row[f] == demanded_polarity(ts, f);
          toggles.emplace_back(i, !before);
          if (before && cover_count[i] == 1) ++delta_unc;
          if (!before && cover_count[i] == 0) --delta_unc;
        }
        int delta_viol = 0;
        for (int ci : clauses_of_feature_[f]) {
          bool before = clause_satisfied(bclauses_[ci], row, -1);
          bool after = clause_satisfied(bclauses_[ci], row, f);
          delta_viol += static_cast<int>(before) - static_cast<int>(after);
        }
        long long delta = delta_unc + SearchState::kViolationPenalty * delta_viol;
        if (delta <= 0 || rng.real() < acceptance_probability(delta, temperature)) {
          row[f] ^= 1;
          for (auto [i, cov] : toggles) cover_count[i] += cov ? 1 : -1;
          st.uncovered += delta_unc;
          st.row_violations[r] += delta_viol;
          st.total_violations += delta_viol;
        }
      }

      if ((iter + 1) % cfg.iterations_per_temperature == 0)
        temperature *= cfg.cooling_factor;
      if (st.fitness() < best.fitness()) {
        best = st;
        stagnation = 0;
      } else {
        ++stagnation;
      }
    }
    return best;
  }

  /// Smallest row count reaching fitness 0, by binary search below the
  /// greedy bound.
  std::vector<std::vector<std::uint8_t>> outer_size_search(const AnnealConfig& cfg,
                                                           Rng& rng) const {
    if (universe_.empty()) return {witness_row(rng)};
    std::vector<std::vector<std::uint8_t>> best = greedy_cover(rng);
    int lo = 1, hi = static_cast<int>(best.size()) - 1;
    while (lo <= hi) {
      int mid = lo + (hi - lo) / 2;
      SearchState probe = anneal_at_size(mid, cfg, rng);
      if (probe.fitness() == 0) {
        best = probe.rows;
        hi = mid - 1;
      } else {
        lo = mid + 1;
      }
    }
    return best;
  }

private:
  static bool row_covers(const std::vector<std::uint8_t>& row, const TSet& ts) {
    for (const auto& [f, s] : ts.entries)
      if ((row[f] != 0) != s) return false;
    return true;
  }

  static bool others_match(const std::vector<std::uint8_t>& row, const TSet& ts,
                           int skip_feature) {
    for (const auto& [f, s] : ts.entries) {
      if (f == skip_feature) continue;
      if ((row[f] != 0) != s) return false;
    }
    return true;
  }

  static bool demanded_polarity(const TSet& ts, int f) {
    for (const auto& [g, s] : ts.entries)
      if (g == f) return s;
    throw Error("t-set does not mention the feature");
  }

  // flipped = feature whose polarity is read inverted (-1 for none)
  static bool clause_satisfied(const std::vector<int>& clause,
                               const std::vector<std::uint8_t>& row, int flipped) {
    for (int lit : clause) {
      int v = std::abs(lit) - 1;
      bool sel = row[v] != 0;
      if (v == flipped) sel = !sel;
      if (sel == (lit > 0)) return true;
    }
    return false;
  }

  static constexpr double kReplaceProbability = 0.1;
  static constexpr int kGreedyProbes = 32;

  int n_;
  Solver solver_;
  std::vector<TSet> universe_;
  std::vector<std::vector<int>> by_feature_;
  std::vector<std::vector<int>> bclauses_;
  std::vector<std::vector<int>> clauses_of_feature_;
};

struct GenerationResult {
  CoveringArray array;
  bool complete = true;
};

inline CoveringArray rows_to_array(const std::vector<std::vector<std::uint8_t>>& rows,
                                   int strength, int n) {
  std::vector<std::vector<Value>> out;
  std::set<std::vector<Value>> seen;
  for (const auto& row : rows) {
    std::vector<Value> values;
    values.reserve(n);
    for (int f = 0; f < n; ++f) values.push_back(row[f] ? sel_value(f) : desel_value(f));
    if (seen.insert(values).second) out.push_back(std::move(values));
  }
  return CoveringArray(strength, n, std::move(out));
}

/// Best state for a fixed row count.
inline SearchState anneal_at_size(const CnfFormula& cnf, int t, int num_rows,
                                  const AnnealConfig& cfg) {
  int t_eff = std::min(t, cnf.num_features());
  Annealer annealer(cnf, valid_tsets(cnf, t_eff));
  Rng rng(cfg.rng_seed);
  return annealer.anneal_at_size(num_rows, cfg, rng);
}

/// Generate a t-wise covering array over the formula's own feature space.
/// Deterministic in cfg.rng_seed. When t exceeds the feature count the
/// effective strength drops to it, which covers every valid configuration.
inline GenerationResult generate_covering_array(const CnfFormula& cnf, int t,
                                                const AnnealConfig& cfg) {
  if (t < 1) throw Error("strength must be >= 1");
  cfg.validate();
  if (!Solver(cnf).solve()) throw Error("model is unsatisfiable: the product line is void");
  int t_eff = std::min(t, cnf.num_features());
  Annealer annealer(cnf, valid_tsets(cnf, t_eff));
  Rng rng(cfg.rng_seed);
  auto rows = annealer.outer_size_search(cfg, rng);
  return GenerationResult{rows_to_array(rows, t_eff, cnf.num_features()), true};
}

} // namespace twise

#pragma once

#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "twise/pipeline.hpp"
#include "twise/stats.hpp"

namespace twise {

inline constexpr const char* kReducedVariant = "reduced";
inline constexpr const char* kOriginalVariant = "original";

struct BenchModelInput {
  std::string name;
  CnfFormula cnf;
};

struct BenchRun {
  std::string model;
  std::string variant;
  std::uint64_t seed = 0;
  double elapsed_ms = 0.0;
  int rows = 0;
  int n = 0;
  int m = 0;
  unsigned long long tsets_full = 0;
  unsigned long long tsets_reduced = 0;
};

struct ModelSummary {
  std::string model;
  int n = 0;
  int m = 0;
  unsigned long long tsets_full = 0;
  unsigned long long tsets_reduced = 0;
  double tset_reduction_pct = 0.0;
  double median_ms_reduced = 0.0;
  double median_ms_original = 0.0;
  double speedup_pct = 0.0;
  double ranksum_p = 1.0; // time, H1: reduced < original
  double median_rows_reduced = 0.0;
  double median_rows_original = 0.0;
};

struct BenchReport {
  std::vector<BenchRun> runs;
  std::vector<ModelSummary> models;
  std::optional<TestResult> signed_rank_time; // across models, over median times
  std::optional<TestResult> signed_rank_size; // across models, over median sizes
  std::string size_test_note;
};

struct BenchOptions {
  int runs = 100;
  std::uint64_t seed_base = 1;
  int strength = 3;
  int jobs = 1;
};

/// Rank-sum with an automatic fall-back: exact enumeration when a sample is
/// too small for the normal approximation.
inline TestResult rank_sum_auto(const Sample& a, const Sample& b) {
  if (a.size() >= 5 && b.size() >= 5) return wilcoxon_rank_sum(a, b);
  return wilcoxon_rank_sum_exact(a, b);
}

inline std::optional<TestResult> signed_rank_auto(
    const std::vector<std::pair<double, double>>& pairs, std::string& note) {
  std::size_t nonzero = 0;
  for (const auto& [x, y] : pairs)
    if (x != y) ++nonzero;
  if (nonzero == 0) {
    note = "all paired differences are zero: no information";
    return std::nullopt;
  }
  if (nonzero >= 6) return wilcoxon_signed_rank(pairs);
  return wilcoxon_signed_rank_exact(pairs);
}

/// Per-model summaries plus the across-model signed-rank tests, computed
/// from raw runs (also the backend of the stats subcommand).
inline BenchReport summarize_runs(std::vector<BenchRun> runs) {
  BenchReport report;
  report.runs = std::move(runs);

  std::vector<std::string> order;
  std::map<std::string, std::vector<const BenchRun*>> by_model;
  for (const BenchRun& r : report.runs) {
    if (!by_model.count(r.model)) order.push_back(r.model);
    by_model[r.model].push_back(&r);
  }

  std::vector<std::pair<double, double>> time_pairs, size_pairs;
  for (const std::string& name : order) {
    Sample ms_reduced, ms_original, rows_reduced, rows_original;
    ModelSummary s;
    s.model = name;
    for (const BenchRun* r : by_model[name]) {
      s.n = r->n;
      s.tsets_full = r->tsets_full;
      if (r->variant == kReducedVariant) {
        s.m = r->m;
        s.tsets_reduced = r->tsets_reduced;
        ms_reduced.push_back(r->elapsed_ms);
        rows_reduced.push_back(r->rows);
      } else {
        ms_original.push_back(r->elapsed_ms);
        rows_original.push_back(r->rows);
      }
    }
    if (ms_reduced.empty() || ms_original.empty())
      throw Error("model " + name + " is missing runs for one variant");
    if (ms_reduced.size() != ms_original.size())
      throw Error("model " + name + " has unequal run counts across variants");
    s.tset_reduction_pct =
        s.tsets_full == 0
            ? 0.0
            : 100.0 * (1.0 - static_cast<double>(s.tsets_reduced) /
                                 static_cast<double>(s.tsets_full));
    s.median_ms_reduced = median(ms_reduced);
    s.median_ms_original = median(ms_original);
    s.speedup_pct = speedup_percent(s.median_ms_reduced, s.median_ms_original);
    s.ranksum_p = rank_sum_auto(ms_reduced, ms_original).p_value;
    s.median_rows_reduced = median(rows_reduced);
    s.median_rows_original = median(rows_original);
    report.models.push_back(s);

    time_pairs.emplace_back(s.median_ms_reduced, s.median_ms_original);
    size_pairs.emplace_back(s.median_rows_reduced, s.median_rows_original);
  }

  if (report.models.size() >= 2) {
    std::string note;
    report.signed_rank_time = signed_rank_auto(time_pairs, note);
    report.signed_rank_size = signed_rank_auto(size_pairs, report.size_test_note);
  }
  return report;
}

/// The 2R-runs-per-model protocol: both variants run with the same seed list
/// (seed_base .. seed_base+R-1) so the comparison isolates the reduction
/// effect. Every array is checked for 100% coverage of the full valid t-set
/// universe; a shortfall aborts with the offending seed.
inline BenchReport run_bench(const std::vector<BenchModelInput>& models,
                             const BenchOptions& opt) {
  if (opt.runs < 2) throw Error("bench needs at least 2 runs per variant");
  if (models.empty()) throw Error("bench needs at least one model");

  // Full-universe validity is seed-independent; compute it once per model.
  std::vector<std::vector<TSet>> universes;
  universes.reserve(models.size());
  for (const auto& m : models) {
    int t_eff = std::min(opt.strength, m.cnf.num_features());
    universes.push_back(valid_tsets(m.cnf, t_eff));
  }

  struct Task {
    std::size_t model_index;
    bool reduce;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t mi = 0; mi < models.size(); ++mi)
    for (bool reduce : {true, false})
      for (int r = 0; r < opt.runs; ++r)
        tasks.push_back(Task{mi, reduce, opt.seed_base + static_cast<std::uint64_t>(r)});

  std::vector<BenchRun> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) return;
      }
      try {
        const Task& task = tasks[i];
        const BenchModelInput& model = models[task.model_index];
        PipelineOptions popt;
        popt.strength = opt.strength;
        popt.reduce = task.reduce;
        popt.anneal.rng_seed = task.seed;
        PipelineResult res = run_generation(model.cnf, popt);

        auto coverage = coverage_against(universes[task.model_index], res.array);
        if (!coverage.full())
          throw Error("model " + model.name + " variant " +
                      (task.reduce ? kReducedVariant : kOriginalVariant) + " seed " +
                      std::to_string(task.seed) + " covered only " +
                      std::to_string(coverage.covered) + "/" +
                      std::to_string(coverage.total) + " t-sets");

        BenchRun run;
        run.model = model.name;
        run.variant = task.reduce ? kReducedVariant : kOriginalVariant;
        run.seed = task.seed;
        run.elapsed_ms = res.elapsed_ms;
        run.rows = static_cast<int>(res.array.rows.size());
        run.n = res.n;
        run.m = res.m;
        run.tsets_full = res.tsets_full;
        run.tsets_reduced = res.tsets_reduced;
        results[i] = std::move(run);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  return summarize_runs(std::move(results));
}

// ---------------------------------------------------------------------------
// CSV: one row per (model, variant, run)
// ---------------------------------------------------------------------------

inline constexpr const char* kRunsCsvHeader =
    "model,variant,seed,elapsed_ms,rows,n,m,tsets_full,tsets_reduced";

inline std::string write_runs_csv(const std::vector<BenchRun>& runs) {
  std::ostringstream out;
  out << kRunsCsvHeader << "\n";
  for (const BenchRun& r : runs)
    out << r.model << ',' << r.variant << ',' << r.seed << ',' << r.elapsed_ms << ','
        << r.rows << ',' << r.n << ',' << r.m << ',' << r.tsets_full << ','
        << r.tsets_reduced << "\n";
  return out.str();
}

inline std::vector<BenchRun> parse_runs_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV", 1);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  if (line != kRunsCsvHeader)
    throw ParseError("unexpected CSV header (want '" + std::string(kRunsCsvHeader) + "')", 1);

  std::vector<BenchRun> runs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 9) throw ParseError("expected 9 CSV fields", lineno);
    try {
      BenchRun r;
      r.model = fields[0];
      r.variant = fields[1];
      r.seed = std::stoull(fields[2]);
      r.elapsed_ms = std::stod(fields[3]);
      r.rows = std::stoi(fields[4]);
      r.n = std::stoi(fields[5]);
      r.m = std::stoi(fields[6]);
      r.tsets_full = std::stoull(fields[7]);
      r.tsets_reduced = std::stoull(fields[8]);
      runs.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ParseError("malformed CSV field", lineno);
    }
  }
  return runs;
}

inline std::string write_summary_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "model,n,m,tsets_full,tsets_reduced,tset_reduction_pct,median_ms_reduced,"
         "median_ms_original,speedup_pct,ranksum_p,median_rows_reduced,"
         "median_rows_original\n";
  for (const ModelSummary& s : report.models)
    out << s.model << ',' << s.n << ',' << s.m << ',' << s.tsets_full << ','
        << s.tsets_reduced << ',' << s.tset_reduction_pct << ',' << s.median_ms_reduced
        << ',' << s.median_ms_original << ',' << s.speedup_pct << ',' << s.ranksum_p
        << ',' << s.median_rows_reduced << ',' << s.median_rows_original << "\n";
  return out.str();
}

} // namespace twise

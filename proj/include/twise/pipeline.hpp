#pragma once

#include <chrono>

#include "twise/anneal.hpp"
#include "twise/cnf.hpp"
#include "twise/reduction.hpp"
#include "twise/sat.hpp"
#include "twise/tsets.hpp"

namespace twise {

struct PipelineOptions {
  int strength = 3;
  bool reduce = true;
  AnnealConfig anneal;
};

struct PipelineResult {
  CoveringArray array; // full width, strength as requested
  bool complete = true;
  int n = 0;
  int m = 0; // 0 when reduction is off
  ReductionSet rset;
  ValueMapping mapping;
  double elapsed_ms = 0.0;
  unsigned long long tsets_full = 0;
  unsigned long long tsets_reduced = 0;
};

/// The full generation procedure. With reduction on: find the root and
/// mandatory features, map values, adapt the constraints, anneal over the
/// reduced space, expand back. The timed region spans exactly those steps;
/// parsing and verification stay outside it.
inline PipelineResult run_generation(const CnfFormula& cnf, const PipelineOptions& opt) {
  PipelineResult res;
  res.n = cnf.num_features();
  res.tsets_full = count_tsets(res.n, opt.strength);

  auto start = std::chrono::steady_clock::now();
  if (opt.reduce) {
    res.rset = find_mand_and_root(cnf);
    res.m = res.rset.m();
    res.mapping = generate_mappings(res.rset, res.n);
    CnfFormula reduced = adapt_constraints(cnf, res.mapping);
    GenerationResult gen = generate_covering_array(reduced, opt.strength, opt.anneal);
    res.complete = gen.complete;
    res.array = expand(gen.array, res.mapping, res.rset);
  } else {
    GenerationResult gen = generate_covering_array(cnf, opt.strength, opt.anneal);
    res.complete = gen.complete;
    res.array = std::move(gen.array);
  }
  auto stop = std::chrono::steady_clock::now();
  res.elapsed_ms = std::chrono::duration<double, std::milli>(stop - start).count();

  res.array.strength = opt.strength;
  res.tsets_reduced = count_tsets(res.n - res.m, opt.strength);

  for (std::size_t i = 0; i < res.array.rows.size(); ++i)
    if (!formula_holds(cnf, res.array.row_assignment(i)))
      throw Error("generated row " + std::to_string(i) + " violates the original model");
  return res;
}

} // namespace twise

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "twise/error.hpp"

namespace twise {

using Sample = std::vector<double>;

/// Result of a one-sided (less) Wilcoxon test. statistic is the rank sum of
/// the first sample (rank-sum test) or R+ (signed-rank test).
struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double r_plus = 0.0;  // signed-rank only
  double r_minus = 0.0; // signed-rank only
  bool exact = false;
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace detail {

/// Ranks (1-based) with tied values receiving their average rank; also
/// accumulates sum(t^3 - t) over tie groups for variance corrections.
inline std::vector<double> average_ranks(const std::vector<double>& values,
                                         double& tie_correction) {
  std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  tie_correction = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    double t = static_cast<double>(j - i + 1);
    tie_correction += t * t * t - t;
    i = j + 1;
  }
  return ranks;
}

} // namespace detail

/// One-sided Wilcoxon rank-sum (Mann-Whitney) for H1: median(a) < median(b),
/// normal approximation with tie and continuity corrections.
inline TestResult wilcoxon_rank_sum(const Sample& a, const Sample& b) {
  if (a.size() < 5 || b.size() < 5)
    throw Error("samples below 5 observations: use wilcoxon_rank_sum_exact");
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  double tie_correction = 0.0;
  auto ranks = detail::average_ranks(pooled, tie_correction);

  double n1 = static_cast<double>(a.size());
  double n2 = static_cast<double>(b.size());
  double n = n1 + n2;
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w += ranks[i];

  double mean = n1 * (n + 1.0) / 2.0;
  double variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_correction / (n * (n - 1.0)));

  TestResult res;
  res.statistic = w;
  if (variance <= 0.0) {
    res.p_value = 1.0; // every observation tied: W always equals its mean
    return res;
  }
  res.p_value = normal_cdf((w - mean + 0.5) / std::sqrt(variance));
  return res;
}

/// Exact rank-sum tail P(W <= w_obs) by enumerating every n1-subset of the
/// pooled ranks. Tractable up to roughly 12-vs-12.
inline TestResult wilcoxon_rank_sum_exact(const Sample& a, const Sample& b) {
  if (a.empty() || b.empty()) throw Error("empty sample");
  std::size_t n1 = a.size(), n = a.size() + b.size();
  if (n > 28) throw Error("samples too large for exact enumeration");
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  double tie_correction = 0.0;
  auto ranks = detail::average_ranks(pooled, tie_correction);

  double w_obs = 0.0;
  for (std::size_t i = 0; i < n1; ++i) w_obs += ranks[i];

  std::vector<std::size_t> combo(n1);
  for (std::size_t i = 0; i < n1; ++i) combo[i] = i;
  unsigned long long le = 0, total = 0;
  while (true) {
    double w = 0.0;
    for (std::size_t i : combo) w += ranks[i];
    ++total;
    if (w <= w_obs + 1e-9) ++le;
    std::size_t i = n1;
    while (i > 0 && combo[i - 1] == n - n1 + i - 1) --i;
    if (i == 0) break;
    ++combo[i - 1];
    for (std::size_t j = i; j < n1; ++j) combo[j] = combo[j - 1] + 1;
  }

  TestResult res;
  res.statistic = w_obs;
  res.p_value = static_cast<double>(le) / static_cast<double>(total);
  res.exact = true;
  return res;
}

namespace detail {

struct SignedRankPrep {
  std::vector<double> ranks; // ranks of |d| over nonzero differences
  std::vector<bool> positive;
  double r_plus = 0.0, r_minus = 0.0;
  double tie_correction = 0.0;
};

inline SignedRankPrep prepare_signed_rank(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<double> abs_d;
  std::vector<bool> positive;
  for (const auto& [x, y] : pairs) {
    double d = x - y;
    if (d == 0.0) continue;
    abs_d.push_back(std::fabs(d));
    positive.push_back(d > 0.0);
  }
  if (abs_d.empty()) throw Error("no information: all differences are zero");
  SignedRankPrep prep;
  prep.ranks = average_ranks(abs_d, prep.tie_correction);
  prep.positive = std::move(positive);
  for (std::size_t i = 0; i < prep.ranks.size(); ++i)
    (prep.positive[i] ? prep.r_plus : prep.r_minus) += prep.ranks[i];
  return prep;
}

} // namespace detail

/// One-sided Wilcoxon signed-rank for H1: median(first - second) < 0 over
/// paired observations. Zero differences are dropped; ties in |d| share
/// average ranks. Normal approximation with tie and continuity corrections.
inline TestResult wilcoxon_signed_rank(const std::vector<std::pair<double, double>>& pairs) {
  auto prep = detail::prepare_signed_rank(pairs);
  double n = static_cast<double>(prep.ranks.size());
  if (n < 6)
    throw Error("fewer than 6 nonzero differences: use wilcoxon_signed_rank_exact");

  double mean = n * (n + 1.0) / 4.0;
  double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - prep.tie_correction / 48.0;

  TestResult res;
  res.statistic = prep.r_plus;
  res.r_plus = prep.r_plus;
  res.r_minus = prep.r_minus;
  if (variance <= 0.0) {
    res.p_value = 1.0;
    return res;
  }
  res.p_value = normal_cdf((prep.r_plus - mean + 0.5) / std::sqrt(variance));
  return res;
}

/// Exact signed-rank tail P(R+ <= obs) over all 2^n sign vectors.
inline TestResult wilcoxon_signed_rank_exact(
    const std::vector<std::pair<double, double>>& pairs) {
  auto prep = detail::prepare_signed_rank(pairs);
  std::size_t n = prep.ranks.size();
  if (n > 25) throw Error("too many nonzero differences for exact enumeration");

  unsigned long long le = 0;
  unsigned long long total = 1ULL << n;
  for (unsigned long long mask = 0; mask < total; ++mask) {
    double r_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1ULL << i)) r_plus += prep.ranks[i];
    if (r_plus <= prep.r_plus + 1e-9) ++le;
  }

  TestResult res;
  res.statistic = prep.r_plus;
  res.r_plus = prep.r_plus;
  res.r_minus = prep.r_minus;
  res.p_value = static_cast<double>(le) / static_cast<double>(total);
  res.exact = true;
  return res;
}

inline double median(Sample s) {
  if (s.empty()) throw Error("median of an empty sample");
  std::sort(s.begin(), s.end());
  std::size_t n = s.size();
  if (n % 2 == 1) return s[n / 2];
  return (s[n / 2 - 1] + s[n / 2]) / 2.0;
}

/// Percentage by which the adapted median undercuts the original one.
inline double speedup_percent(double adapted_median, double original_median) {
  if (original_median <= 0.0 || adapted_median <= 0.0)
    throw Error("speedup requires positive medians");
  return (original_median - adapted_median) / original_median * 100.0;
}

} // namespace twise

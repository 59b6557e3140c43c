/*
 * Copyright 2026 The editshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Meta-evaluation of attribution methods: consistency under grouping,
// agreement with reference-based labels, and sampling error and cost.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "editshap/attribution.hpp"
#include "editshap/core.hpp"
#include "editshap/edits.hpp"
#include "editshap/parallel.hpp"
#include "editshap/scorer.hpp"
#include "editshap/stats.hpp"

namespace editshap {

// Scorer to use for sentence i of a dataset. Oracle scorers are per sentence;
// model-backed scorers return the same instance for every i.
using ScorerFor = std::function<const Scorer&(std::size_t)>;

inline ScorerFor same_scorer(const Scorer& scorer) {
  return [&scorer](std::size_t) -> const Scorer& { return scorer; };
}

struct EvaluationOptions {
  SamplingConfig sampling;
  AttributionOptions attribution;
  std::size_t jobs = 1;
};

// ---------------------------------------------------------------------------
// Consistency
// ---------------------------------------------------------------------------

struct ConsistencyRecord {
  std::size_t sentence = 0;
  // Positive-sign group first, then negative; masks over the original edits.
  std::vector<SubsetMask> group_masks;
  std::vector<double> predicted_group_scores;  // sum of member attributions
  std::vector<double> observed_group_scores;   // attribution of the merged group
  std::vector<bool> signs_agree;
};

struct ConsistencyReport {
  Method method = Method::kShapley;
  std::vector<ConsistencyRecord> records;
  double sign_agreement_ratio = std::numeric_limits<double>::quiet_NaN();
  double pearson = std::numeric_limits<double>::quiet_NaN();
  double spearman = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_sentences = 0;  // sentences contributing records
  std::size_t n_groups = 0;
  // Every edit landed in one sign group, so the comparison is trivial.
  std::size_t n_skipped_single_group = 0;
  // Fewer than two edits, or no nonzero attribution.
  std::size_t n_skipped_precondition = 0;
  // Correlations left undefined (zero variance) are reported as NaN.
  std::size_t n_undefined_correlations = 0;
};

// Recomputes the corpus aggregates from `records`.
inline void recompute_consistency_aggregates(ConsistencyReport& report) {
  std::vector<double> predicted, observed;
  std::size_t agree = 0;
  for (const auto& r : report.records) {
    predicted.insert(predicted.end(), r.predicted_group_scores.begin(),
                     r.predicted_group_scores.end());
    observed.insert(observed.end(), r.observed_group_scores.begin(),
                    r.observed_group_scores.end());
    agree += static_cast<std::size_t>(std::count(r.signs_agree.begin(), r.signs_agree.end(), true));
  }
  report.n_sentences = report.records.size();
  report.n_groups = predicted.size();
  report.sign_agreement_ratio = predicted.empty()
                                    ? std::numeric_limits<double>::quiet_NaN()
                                    : static_cast<double>(agree) / static_cast<double>(predicted.size());
  report.pearson = stats::pearson(predicted, observed);
  report.spearman = stats::spearman(predicted, observed);
  report.n_undefined_correlations =
      static_cast<std::size_t>(std::isnan(report.pearson)) +
      static_cast<std::size_t>(std::isnan(report.spearman));
}

// Attributes each sentence, merges its positive edits into one player and its
// negative edits into another (zero-attribution edits stay singletons and are
// not compared), re-attributes, and compares each merged player's score with
// the sum of its members' individual scores.
inline ConsistencyReport evaluate_consistency(const ScorerFor& scorer_for, Method method,
                                              std::span<const EditSet> dataset,
                                              const EvaluationOptions& opt = {}) {
  enum class Outcome { kRecord, kSingleGroup, kPrecondition };
  struct Item {
    Outcome outcome = Outcome::kPrecondition;
    ConsistencyRecord record;
  };

  auto items = parallel_map(dataset.size(), opt.jobs, [&](std::size_t idx) {
    Item item;
    const EditSet& es = dataset[idx];
    if (es.size() < 2) return item;
    const Scorer& scorer = scorer_for(idx);
    const auto base = attribute(method, scorer, es, opt.sampling, opt.attribution);

    std::vector<std::size_t> pos, neg, zero;
    for (std::size_t i = 0; i < es.size(); ++i) {
      switch (sign_of(base.raw[i])) {
        case 1: pos.push_back(i); break;
        case -1: neg.push_back(i); break;
        default: zero.push_back(i);
      }
    }
    if (pos.empty() && neg.empty()) return item;
    if ((pos.empty() || neg.empty()) && zero.empty()) {
      item.outcome = Outcome::kSingleGroup;
      return item;
    }

    std::vector<std::vector<std::size_t>> partition;
    for (const auto* g : {&pos, &neg}) {
      if (!g->empty()) partition.push_back(*g);
    }
    const std::size_t compared = partition.size();
    for (std::size_t z : zero) partition.push_back({z});
    const EditSet grouped = group_edits(es, partition);
    const auto observed = attribute(method, scorer, grouped, opt.sampling, opt.attribution);

    item.outcome = Outcome::kRecord;
    item.record.sentence = idx;
    for (std::size_t g = 0; g < compared; ++g) {
      SubsetMask mask = 0;
      double predicted = 0.0;
      for (std::size_t i : partition[g]) {
        mask |= SubsetMask{1} << i;
        predicted += base.raw[i];
      }
      item.record.group_masks.push_back(mask);
      item.record.predicted_group_scores.push_back(predicted);
      item.record.observed_group_scores.push_back(observed.raw[g]);
      item.record.signs_agree.push_back(sign_of(predicted) == sign_of(observed.raw[g]));
    }
    return item;
  });

  ConsistencyReport report;
  report.method = method;
  for (auto& item : items) {
    switch (item.outcome) {
      case Outcome::kRecord: report.records.push_back(std::move(item.record)); break;
      case Outcome::kSingleGroup: ++report.n_skipped_single_group; break;
      case Outcome::kPrecondition: ++report.n_skipped_precondition; break;
    }
  }
  recompute_consistency_aggregates(report);
  return report;
}

// ---------------------------------------------------------------------------
// Agreement with reference-based labels
// ---------------------------------------------------------------------------

// Which edits a threshold t admits:
//   kBelow  |phi_norm| <= t
//   kAbove  |phi_norm| >= 1 - t
// Both admit every edit at t = 1.
enum class ThresholdMode { kBelow, kAbove };

inline std::string_view threshold_mode_name(ThresholdMode m) {
  return m == ThresholdMode::kBelow ? "below" : "above";
}

inline ThresholdMode parse_threshold_mode(std::string_view s) {
  if (s == "below") return ThresholdMode::kBelow;
  if (s == "above") return ThresholdMode::kAbove;
  throw Error("unknown threshold mode '" + std::string(s) + "'");
}

struct AgreementEdit {
  std::size_t sentence = 0;
  std::size_t edit = 0;
  int attribution_sign = 0;  // +1 or -1
  bool reference_correct = false;
  double abs_normalized = 0.0;
  std::size_t reference = 0;  // index of the chosen reference
  bool agrees() const { return (attribution_sign > 0) == reference_correct; }
};

struct ThresholdPoint {
  double threshold = 0.0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_edits = 0;
};

struct AgreementReport {
  Method method = Method::kShapley;
  ThresholdMode mode = ThresholdMode::kBelow;
  std::vector<AgreementEdit> edits;
  std::vector<ThresholdPoint> curve;
  std::size_t n_sentences = 0;
  std::size_t n_skipped_few_edits = 0;
  std::size_t n_zero_excluded = 0;  // zero attributions carry no label
};

// Tolerance on threshold comparisons so that 0.1 * k lands on its grid point.
inline constexpr double kThresholdSlack = 1e-12;

inline bool admitted(double abs_norm, double threshold, ThresholdMode mode) {
  return mode == ThresholdMode::kBelow ? abs_norm <= threshold + kThresholdSlack
                                       : abs_norm >= 1.0 - threshold - kThresholdSlack;
}

inline std::vector<ThresholdPoint> threshold_curve(std::span<const AgreementEdit> edits,
                                                   ThresholdMode mode) {
  std::vector<ThresholdPoint> curve;
  for (int k = 1; k <= 10; ++k) {
    ThresholdPoint pt;
    pt.threshold = k / 10.0;
    std::size_t hit = 0;
    for (const auto& e : edits) {
      if (!admitted(e.abs_normalized, pt.threshold, mode)) continue;
      ++pt.n_edits;
      hit += e.agrees() ? 1 : 0;
    }
    if (pt.n_edits) pt.accuracy = static_cast<double>(hit) / static_cast<double>(pt.n_edits);
    curve.push_back(pt);
  }
  return curve;
}

// Labels each edit correct iff the same (span, replacement) is extracted
// between the source and a reference; per sentence keeps the reference with
// the most sign/label matches (first on ties). Sentences with fewer than two
// edits are skipped.
inline AgreementReport evaluate_agreement(const ScorerFor& scorer_for, Method method,
                                          std::span<const EditSet> dataset,
                                          std::span<const std::vector<Sentence>> references,
                                          ThresholdMode mode = ThresholdMode::kBelow,
                                          const EvaluationOptions& opt = {}) {
  if (references.size() != dataset.size()) {
    throw MissingReferenceError("got references for " + std::to_string(references.size()) +
                                " of " + std::to_string(dataset.size()) + " sentences");
  }
  struct Item {
    bool skipped = true;
    std::size_t zero = 0;
    std::vector<AgreementEdit> edits;
  };
  auto items = parallel_map(dataset.size(), opt.jobs, [&](std::size_t idx) {
    Item item;
    const EditSet& es = dataset[idx];
    if (es.size() < 2) return item;
    if (es.is_grouped()) throw Error("agreement needs ungrouped edit sets");
    if (references[idx].empty()) {
      throw MissingReferenceError("sentence " + std::to_string(idx) + " has no reference");
    }
    const auto r = attribute(method, scorer_for(idx), es, opt.sampling, opt.attribution);
    item.skipped = false;

    std::size_t best_hits = 0;
    for (std::size_t ref = 0; ref < references[idx].size(); ++ref) {
      const EditSet gold = extract_edits(es.source(), references[idx][ref]);
      std::vector<AgreementEdit> labeled;
      std::size_t hits = 0;
      std::size_t zero = 0;
      for (std::size_t i = 0; i < es.size(); ++i) {
        const int s = sign_of(r.raw[i]);
        if (s == 0) {
          ++zero;
          continue;
        }
        AgreementEdit e;
        e.sentence = idx;
        e.edit = i;
        e.attribution_sign = s;
        e.abs_normalized = std::abs(r.normalized[i]);
        e.reference = ref;
        e.reference_correct = std::any_of(
            gold.edits().begin(), gold.edits().end(),
            [&](const Edit& g) { return g.same_correction(es.edits()[i]); });
        hits += e.agrees() ? 1 : 0;
        labeled.push_back(e);
      }
      if (ref == 0 || hits > best_hits) {
        best_hits = hits;
        item.edits = std::move(labeled);
        item.zero = zero;
      }
    }
    return item;
  });

  AgreementReport report;
  report.method = method;
  report.mode = mode;
  for (auto& item : items) {
    if (item.skipped) {
      ++report.n_skipped_few_edits;
      continue;
    }
    ++report.n_sentences;
    report.n_zero_excluded += item.zero;
    report.edits.insert(report.edits.end(), item.edits.begin(), item.edits.end());
  }
  report.curve = threshold_curve(report.edits, mode);
  return report;
}

// ---------------------------------------------------------------------------
// Sampling error and cost
// ---------------------------------------------------------------------------

struct SamplingErrorReport {
  std::uint64_t t = 0;
  std::uint64_t seed = 0;
  std::size_t n_sentences = 0;
  std::size_t n_edits = 0;
  double mean_abs_error = 0.0;  // mean over edits of |sampled - exact|
  double mean_time_exact_s = 0.0;
  double mean_time_sampling_s = 0.0;
  double mean_abs_shapley = 0.0;  // distribution of |exact|
  double std_abs_shapley = 0.0;
  std::uint64_t scorer_calls_exact = 0;
  std::uint64_t scorer_calls_sampling = 0;
};

// Sentence i is sampled with seed cfg.seed + i. Sentences without edits are
// ignored.
inline SamplingErrorReport evaluate_sampling_error(const ScorerFor& scorer_for,
                                                   std::span<const EditSet> dataset,
                                                   const SamplingConfig& cfg,
                                                   const EvaluationOptions& opt = {}) {
  struct Item {
    std::vector<double> abs_err, abs_exact;
    double t_exact = 0.0, t_sampling = 0.0;
    std::uint64_t calls_exact = 0, calls_sampling = 0;
  };
  auto items = parallel_map(dataset.size(), opt.jobs, [&](std::size_t idx) {
    Item item;
    const EditSet& es = dataset[idx];
    if (es.size() == 0) return item;
    const Scorer& scorer = scorer_for(idx);
    const auto exact = shapley_exact(scorer, es, opt.attribution);
    SamplingConfig c = cfg;
    c.seed = cfg.seed + idx;
    const auto sampled = shapley_sampling(scorer, es, c, opt.attribution);
    for (std::size_t i = 0; i < es.size(); ++i) {
      item.abs_err.push_back(std::abs(sampled.raw[i] - exact.raw[i]));
      item.abs_exact.push_back(std::abs(exact.raw[i]));
    }
    item.t_exact = exact.wall_time_s;
    item.t_sampling = sampled.wall_time_s;
    item.calls_exact = exact.scorer_calls;
    item.calls_sampling = sampled.scorer_calls;
    return item;
  });

  SamplingErrorReport rep;
  rep.t = cfg.t;
  rep.seed = cfg.seed;
  std::vector<double> errs, mags;
  double t_exact = 0.0, t_sampling = 0.0;
  for (const auto& item : items) {
    if (item.abs_err.empty()) continue;
    ++rep.n_sentences;
    errs.insert(errs.end(), item.abs_err.begin(), item.abs_err.end());
    mags.insert(mags.end(), item.abs_exact.begin(), item.abs_exact.end());
    t_exact += item.t_exact;
    t_sampling += item.t_sampling;
    rep.scorer_calls_exact += item.calls_exact;
    rep.scorer_calls_sampling += item.calls_sampling;
  }
  rep.n_edits = errs.size();
  if (rep.n_sentences) {
    rep.mean_abs_error = stats::mean(errs);
    rep.mean_abs_shapley = stats::mean(mags);
    rep.std_abs_shapley = stats::stddev(mags);
    rep.mean_time_exact_s = t_exact / static_cast<double>(rep.n_sentences);
    rep.mean_time_sampling_s = t_sampling / static_cast<double>(rep.n_sentences);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Exact Shapley cost versus N
// ---------------------------------------------------------------------------

struct TimingPoint {
  std::size_t n = 0;
  double mean_s = 0.0;
  double std_s = 0.0;
  std::uint64_t scorer_calls = 0;
  std::size_t repetitions = 0;
};

struct BenchmarkOptions {
  std::size_t min_repetitions = 3;
  std::size_t max_repetitions = 1000;
  // Keep repeating small N until this much time has been measured.
  double min_total_s = 0.05;
};

// "t0 t1 ... t{n-1} ." with every word token replaced: n one-token edits.
inline EditSet synthetic_edit_set(std::size_t n) {
  std::vector<Token> src;
  std::vector<Edit> edits;
  for (std::size_t i = 0; i < n; ++i) {
    src.push_back("t" + std::to_string(i));
    edits.push_back(Edit{i, i + 1, {"u" + std::to_string(i)}, std::nullopt});
  }
  src.push_back(".");
  return validate_edit_set(Sentence(std::move(src)), std::move(edits));
}

inline std::vector<TimingPoint> benchmark_timing(const Scorer& scorer,
                                                 std::span<const std::size_t> n_values,
                                                 const BenchmarkOptions& bench = {},
                                                 const AttributionOptions& opt = {}) {
  std::vector<TimingPoint> out;
  for (std::size_t n : n_values) {
    const EditSet es = synthetic_edit_set(n);
    TimingPoint pt;
    pt.n = n;
    std::vector<double> times;
    double total = 0.0;
    while (times.size() < bench.min_repetitions ||
           (total < bench.min_total_s && times.size() < bench.max_repetitions)) {
      const auto r = shapley_exact(scorer, es, opt);
      times.push_back(r.wall_time_s);
      total += r.wall_time_s;
      pt.scorer_calls = r.scorer_calls;
    }
    pt.mean_s = stats::mean(times);
    pt.std_s = stats::stddev(times);
    pt.repetitions = times.size();
    out.push_back(pt);
  }
  return out;
}

}  // namespace editshap

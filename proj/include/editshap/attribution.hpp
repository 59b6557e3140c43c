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

// Attribution of a score difference dM(H|S) to the edits that turn S into H.
//
// Four methods share one memoized subset game:
//   shapley           exact Shapley values over all 2^N subsets
//   shapley_sampling  mean marginal contribution over T sampled orderings
//   add               dM({e_i}), rescaled so the values sum to dM(full)
//   sub               dM(full) - dM(full \ {e_i}), rescaled likewise

#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "editshap/cache.hpp"
#include "editshap/core.hpp"
#include "editshap/edits.hpp"
#include "editshap/scorer.hpp"

namespace editshap {

struct AttributionOptions {
  // Largest N accepted by exact Shapley.
  std::size_t max_exact_edits = 20;
  bool use_cache = true;
  // Masks handed to Scorer::batch_score at once.
  std::size_t batch_size = 4096;
};

struct SamplingConfig {
  std::uint64_t t = 64;
  std::uint64_t seed = 0;
  bool without_replacement = true;
};

// Sign-preserving L1 normalization. All-zero input stays all-zero.
inline std::vector<double> normalize(std::span<const double> raw) {
  double l1 = 0.0;
  for (double x : raw) l1 += std::abs(x);
  std::vector<double> out(raw.size(), 0.0);
  if (l1 == 0.0) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / l1;
  return out;
}

// n!, or 0 when it does not fit in 64 bits (n > 20).
inline std::uint64_t factorial_u64(std::size_t n) {
  if (n > 20) return 0;
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

// Shapley weight |e'|! (N - |e'| - 1)! / N! for every coalition size
// |e'| = 0..N-1. Integer ratios up to N = 15, log-gamma above.
inline std::vector<double> shapley_weights(std::size_t n) {
  std::vector<double> w(n, 0.0);
  if (n == 0) return w;
  if (n <= 15) {
    const std::uint64_t denom = factorial_u64(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint64_t num = factorial_u64(k) * factorial_u64(n - k - 1);
      w[k] = static_cast<double>(num) / static_cast<double>(denom);
    }
  } else {
    const double log_denom = std::lgamma(static_cast<double>(n) + 1.0);
    for (std::size_t k = 0; k < n; ++k) {
      w[k] = std::exp(std::lgamma(static_cast<double>(k) + 1.0) +
                      std::lgamma(static_cast<double>(n - k)) - log_denom);
    }
  }
  return w;
}

namespace attribution_detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void check_width(const EditSet& es) {
  if (es.size() > kMaxMaskWidth) {
    throw TooManyEditsError(std::to_string(es.size()) + " edits exceed the supported " +
                            std::to_string(kMaxMaskWidth));
  }
}

inline void prefetch_chunked(const Scorer& scorer, const EditSet& es,
                             std::span<const SubsetMask> masks, SubsetCache& cache,
                             std::size_t batch_size) {
  batch_size = std::max<std::size_t>(batch_size, 1);
  for (std::size_t i = 0; i < masks.size(); i += batch_size) {
    prefetch_delta_m(scorer, es, masks.subspan(i, std::min(batch_size, masks.size() - i)),
                     cache);
  }
}

inline AttributionResult finish(AttributionResult r, const SubsetCache& cache,
                                std::uint64_t calls_before, const Stopwatch& clock) {
  r.normalized = normalize(r.raw);
  r.scorer_calls = cache.evaluations() - calls_before;
  r.wall_time_s = clock.seconds();
  return r;
}

// Add/Sub share the rescaling onto dM(full).
inline void rescale(AttributionResult& r) {
  r.unscaled = r.raw;
  const double sum = std::accumulate(r.raw.begin(), r.raw.end(), 0.0);
  if (std::abs(sum) <= 1e-12) {
    r.non_effective = !r.raw.empty();
    return;
  }
  const double factor = r.delta_m / sum;
  for (double& x : r.raw) x *= factor;
}

}  // namespace attribution_detail

// Exact Shapley values from a single pass over all 2^N subsets:
// phi_i = sum over e' not containing i of w(|e'|) (dM(e' + i) - dM(e')).
inline AttributionResult shapley_exact(const Scorer& scorer, const EditSet& es,
                                       SubsetCache& cache,
                                       const AttributionOptions& opt = {}) {
  using namespace attribution_detail;
  Stopwatch clock;
  const std::uint64_t calls_before = cache.evaluations();
  const std::size_t n = es.size();
  if (n > opt.max_exact_edits) {
    throw TooManyEditsError("exact Shapley limited to " + std::to_string(opt.max_exact_edits) +
                            " edits, got " + std::to_string(n));
  }
  check_width(es);

  const SubsetMask full = full_mask(n);
  if (cache.enabled()) {
    std::vector<SubsetMask> all(std::size_t{1} << n);
    std::iota(all.begin(), all.end(), SubsetMask{0});
    prefetch_chunked(scorer, es, all, cache, opt.batch_size);
  }

  const auto weights = shapley_weights(n);
  AttributionResult r;
  r.method = Method::kShapley;
  r.raw.assign(n, 0.0);
  for (std::uint64_t m = 0; m <= full; ++m) {
    const auto mask = static_cast<SubsetMask>(m);
    const double without = delta_m(scorer, es, mask, cache);
    const double w = weights.empty() ? 0.0 : weights[std::popcount(mask)];
    for (std::size_t i = 0; i < n; ++i) {
      const SubsetMask bit = SubsetMask{1} << i;
      if (mask & bit) continue;
      r.raw[i] += w * (delta_m(scorer, es, mask | bit, cache) - without);
    }
  }
  r.delta_m = delta_m(scorer, es, full, cache);
  return finish(std::move(r), cache, calls_before, clock);
}

inline AttributionResult shapley_exact(const Scorer& scorer, const EditSet& es,
                                       const AttributionOptions& opt = {}) {
  SubsetCache cache(es.size(), opt.use_cache);
  return shapley_exact(scorer, es, cache, opt);
}

// Shapley sampling values over T orderings of the players.
//
// Orderings are drawn by Fisher-Yates shuffles from a generator seeded with
// cfg.seed; without replacement, repeats are rejected. When T reaches N!
// (without replacement, or for N <= 5 in any mode) all orderings are
// enumerated instead, which reproduces the exact values; T above N! is
// capped and flagged.
inline AttributionResult shapley_sampling(const Scorer& scorer, const EditSet& es,
                                          const SamplingConfig& cfg, SubsetCache& cache,
                                          [[maybe_unused]] const AttributionOptions& opt = {}) {
  using namespace attribution_detail;
  Stopwatch clock;
  const std::uint64_t calls_before = cache.evaluations();
  check_width(es);
  if (cfg.t == 0) throw Error("sampling needs at least one permutation");
  const std::size_t n = es.size();

  AttributionResult r;
  r.method = Method::kShapleySampling;
  r.seed = cfg.seed;
  r.raw.assign(n, 0.0);

  const std::uint64_t n_fact = factorial_u64(n);  // 0 means "astronomical"
  const bool enumerate =
      n_fact != 0 && cfg.t >= n_fact && (cfg.without_replacement || n <= 5);

  std::vector<std::uint8_t> order(n);
  std::iota(order.begin(), order.end(), std::uint8_t{0});
  std::vector<SubsetMask> prefixes(n);

  auto accumulate_order = [&] {
    SubsetMask mask = 0;
    for (std::size_t j = 0; j < n; ++j) {
      mask |= SubsetMask{1} << order[j];
      prefixes[j] = mask;
    }
    prefetch_delta_m(scorer, es, prefixes, cache);
    double prev = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double cur = delta_m(scorer, es, prefixes[j], cache);
      r.raw[order[j]] += cur - prev;
      prev = cur;
    }
  };

  std::uint64_t used = 0;
  if (enumerate) {
    do {
      accumulate_order();
      ++used;
    } while (std::next_permutation(order.begin(), order.end()));
    r.sampling_exhaustive = true;
    r.sampling_capped = cfg.t > n_fact && n > 5;
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::unordered_set<std::string> seen;
    while (used < cfg.t) {
      for (std::size_t j = n; j > 1; --j) {
        std::uniform_int_distribution<std::size_t> pick(0, j - 1);
        std::swap(order[j - 1], order[pick(rng)]);
      }
      if (cfg.without_replacement &&
          !seen.emplace(reinterpret_cast<const char*>(order.data()), n).second) {
        continue;
      }
      accumulate_order();
      ++used;
    }
  }
  if (n > 0) {
    for (double& x : r.raw) x /= static_cast<double>(used);
  }
  r.sampling_t = used;
  r.delta_m = delta_m(scorer, es, full_mask(n), cache);
  return finish(std::move(r), cache, calls_before, clock);
}

inline AttributionResult shapley_sampling(const Scorer& scorer, const EditSet& es,
                                          const SamplingConfig& cfg,
                                          const AttributionOptions& opt = {}) {
  SubsetCache cache(es.size(), opt.use_cache);
  return shapley_sampling(scorer, es, cfg, cache, opt);
}

// Add: each edit applied alone to the source.
inline AttributionResult attribute_add(const Scorer& scorer, const EditSet& es,
                                       SubsetCache& cache, const AttributionOptions& opt = {}) {
  using namespace attribution_detail;
  Stopwatch clock;
  const std::uint64_t calls_before = cache.evaluations();
  check_width(es);
  const std::size_t n = es.size();
  const SubsetMask full = full_mask(n);

  std::vector<SubsetMask> masks{full};
  for (std::size_t i = 0; i < n; ++i) masks.push_back(SubsetMask{1} << i);
  prefetch_chunked(scorer, es, masks, cache, opt.batch_size);

  AttributionResult r;
  r.method = Method::kAdd;
  r.delta_m = delta_m(scorer, es, full, cache);
  for (std::size_t i = 0; i < n; ++i) {
    r.raw.push_back(delta_m(scorer, es, SubsetMask{1} << i, cache));
  }
  rescale(r);
  return finish(std::move(r), cache, calls_before, clock);
}

inline AttributionResult attribute_add(const Scorer& scorer, const EditSet& es,
                                       const AttributionOptions& opt = {}) {
  SubsetCache cache(es.size(), opt.use_cache);
  return attribute_add(scorer, es, cache, opt);
}

// Sub: each edit removed alone from the hypothesis.
inline AttributionResult attribute_sub(const Scorer& scorer, const EditSet& es,
                                       SubsetCache& cache, const AttributionOptions& opt = {}) {
  using namespace attribution_detail;
  Stopwatch clock;
  const std::uint64_t calls_before = cache.evaluations();
  check_width(es);
  const std::size_t n = es.size();
  const SubsetMask full = full_mask(n);

  std::vector<SubsetMask> masks{full};
  for (std::size_t i = 0; i < n; ++i) masks.push_back(full & ~(SubsetMask{1} << i));
  prefetch_chunked(scorer, es, masks, cache, opt.batch_size);

  AttributionResult r;
  r.method = Method::kSub;
  r.delta_m = delta_m(scorer, es, full, cache);
  for (std::size_t i = 0; i < n; ++i) {
    r.raw.push_back(r.delta_m - delta_m(scorer, es, full & ~(SubsetMask{1} << i), cache));
  }
  rescale(r);
  return finish(std::move(r), cache, calls_before, clock);
}

inline AttributionResult attribute_sub(const Scorer& scorer, const EditSet& es,
                                       const AttributionOptions& opt = {}) {
  SubsetCache cache(es.size(), opt.use_cache);
  return attribute_sub(scorer, es, cache, opt);
}

// Dispatches on `method`; `sampling` is used only for shapley_sampling.
inline AttributionResult attribute(Method method, const Scorer& scorer, const EditSet& es,
                                   const SamplingConfig& sampling = {},
                                   const AttributionOptions& opt = {}) {
  switch (method) {
    case Method::kShapley: return shapley_exact(scorer, es, opt);
    case Method::kShapleySampling: return shapley_sampling(scorer, es, sampling, opt);
    case Method::kAdd: return attribute_add(scorer, es, opt);
    case Method::kSub: return attribute_sub(scorer, es, opt);
  }
  throw Error("unknown attribution method");
}

}  // namespace editshap

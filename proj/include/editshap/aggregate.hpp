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

// Corpus-level summaries of normalized attributions per error type.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "editshap/core.hpp"

namespace editshap {

inline constexpr const char* kUnknownType = "UNK";

// One attributed sentence; players must be the individual edits.
struct AttributedSentence {
  EditSet edits;
  AttributionResult result;
};

inline const std::string& type_of(const Edit& e) {
  static const std::string unk = kUnknownType;
  return e.error_type ? *e.error_type : unk;
}

struct TypeMean {
  double mean = 0.0;
  std::size_t count = 0;
  bool low_support = false;
};

struct TypePrecision {
  double positive = 0.0;      // sum of positive normalized attributions
  double negative_abs = 0.0;  // sum of |negative normalized attributions|
  std::optional<double> precision() const {
    const double denom = positive + negative_abs;
    if (denom == 0.0) return std::nullopt;
    return positive / denom;
  }
};

// Running per-type sums. Partial accumulators over disjoint slices of a
// corpus merge into the accumulator of the whole corpus.
class ErrorTypeAccumulator {
 public:
  void add(const EditSet& es, const AttributionResult& r) {
    if (es.is_grouped()) throw Error("per-type aggregation needs ungrouped edit sets");
    if (r.normalized.size() != es.edit_count()) {
      throw Error("attribution result does not match its edit set");
    }
    for (std::size_t i = 0; i < es.edit_count(); ++i) {
      Slot& s = slots_[type_of(es.edits()[i])];
      const double phi = r.normalized[i];
      s.sum += phi;
      ++s.count;
      if (phi > 0.0) s.positive += phi;
      if (phi < 0.0) s.negative_abs -= phi;
    }
  }

  void merge(const ErrorTypeAccumulator& other) {
    for (const auto& [type, o] : other.slots_) {
      Slot& s = slots_[type];
      s.sum += o.sum;
      s.count += o.count;
      s.positive += o.positive;
      s.negative_abs += o.negative_abs;
    }
  }

  // Types seen fewer than `min_count` times are flagged, not dropped.
  std::map<std::string, TypeMean> means(std::size_t min_count = 30) const {
    std::map<std::string, TypeMean> out;
    for (const auto& [type, s] : slots_) {
      out[type] = TypeMean{s.sum / static_cast<double>(s.count), s.count, s.count < min_count};
    }
    return out;
  }

  // Types whose positive and negative sums are both zero are absent.
  std::map<std::string, double> precision() const {
    std::map<std::string, double> out;
    for (const auto& [type, s] : slots_) {
      if (auto p = TypePrecision{s.positive, s.negative_abs}.precision()) out[type] = *p;
    }
    return out;
  }

  std::map<std::string, TypePrecision> precision_sums() const {
    std::map<std::string, TypePrecision> out;
    for (const auto& [type, s] : slots_) out[type] = TypePrecision{s.positive, s.negative_abs};
    return out;
  }

 private:
  struct Slot {
    double sum = 0.0;
    std::size_t count = 0;
    double positive = 0.0;
    double negative_abs = 0.0;
  };
  std::map<std::string, Slot> slots_;
};

inline ErrorTypeAccumulator accumulate_types(std::span<const AttributedSentence> results) {
  ErrorTypeAccumulator acc;
  for (const auto& r : results) acc.add(r.edits, r.result);
  return acc;
}

// Mean normalized attribution per error type, averaged over edits.
inline std::map<std::string, TypeMean> error_type_means(std::span<const AttributedSentence> results,
                                                        std::size_t min_count = 30) {
  return accumulate_types(results).means(min_count);
}

// phi+ / (phi+ + |phi-|) per error type over the pooled normalized scores.
inline std::map<std::string, double> precision_by_type(std::span<const AttributedSentence> results) {
  return accumulate_types(results).precision();
}

// Rows are systems (or metrics), columns the union of error types in sorted
// order; missing cells are left empty.
inline void write_type_matrix_csv(
    std::ostream& out, const std::vector<std::pair<std::string, std::map<std::string, double>>>& rows) {
  std::set<std::string> columns;
  for (const auto& [_, row] : rows) {
    for (const auto& [type, __] : row) columns.insert(type);
  }
  out << "row";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  out.precision(17);
  for (const auto& [name, row] : rows) {
    out << name;
    for (const auto& c : columns) {
      out << ',';
      if (auto it = row.find(c); it != row.end()) out << it->second;
    }
    out << '\n';
  }
}

}  // namespace editshap

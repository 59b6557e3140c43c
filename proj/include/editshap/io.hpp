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

// JSON-lines datasets, attribution records, and report serialization.
//
// Dataset line:
//   {"source": str, "hypothesis": str,
//    "edits": [{"start": int, "end": int, "replacement": str, "type": str}],
//    "references": [str, ...]}
// "edits" is optional (extracted from the sentence pair when absent), as are
// "hypothesis" (when edits are given) and "references".
//
// Attribution record (schema_version 1):
//   {"schema_version": 1, "source": str, "hypothesis": str, "method": str,
//    "delta_m": real, "edits": [{"span": [start, end], "replacement": str,
//    "type": str|null, "phi": real, "phi_norm": real}], "scorer_calls": int,
//    "wall_time_s": real, "seed": int|null, "sampling_t": int|null,
//    "flags": {"non_effective": bool, "sampling_capped": bool,
//              "sampling_exhaustive": bool}}

#pragma once

#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "editshap/aggregate.hpp"
#include "editshap/core.hpp"
#include "editshap/edits.hpp"
#include "editshap/evaluation.hpp"
#include "editshap/m2.hpp"

namespace editshap {

inline constexpr int kSchemaVersion = 1;

// Malformed input file.
class InputError : public Error {
  using Error::Error;
};

struct DatasetEntry {
  EditSet edits;
  Sentence hypothesis;
  std::vector<Sentence> references;
};

inline DatasetEntry parse_dataset_entry(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("source")) throw InputError("entry without \"source\"");
  DatasetEntry entry;
  Sentence source = parse_sentence(j.at("source").get<std::string>());
  if (j.contains("edits") && !j["edits"].is_null()) {
    std::vector<Edit> edits;
    for (const auto& e : j["edits"]) {
      const auto start = e.at("start").get<long long>();
      const auto end = e.at("end").get<long long>();
      if (start < 0 || end < 0) throw OutOfBoundsError("negative edit span");
      Edit edit{static_cast<std::size_t>(start), static_cast<std::size_t>(end),
                split_tokens(e.value("replacement", "")), std::nullopt};
      if (e.contains("type") && e["type"].is_string()) edit.error_type = e["type"].get<std::string>();
      edits.push_back(std::move(edit));
    }
    if (j.contains("hypothesis")) {
      entry.hypothesis = parse_sentence(j["hypothesis"].get<std::string>());
      entry.edits = make_edit_set(std::move(source), std::move(edits), entry.hypothesis);
    } else {
      entry.edits = validate_edit_set(std::move(source), std::move(edits));
      entry.hypothesis = apply_all(entry.edits);
    }
  } else {
    if (!j.contains("hypothesis")) throw InputError("entry needs \"hypothesis\" or \"edits\"");
    entry.hypothesis = parse_sentence(j["hypothesis"].get<std::string>());
    entry.edits = extract_edits(source, entry.hypothesis);
  }
  if (j.contains("references")) {
    for (const auto& r : j["references"]) entry.references.push_back(parse_sentence(r.get<std::string>()));
  }
  return entry;
}

// Blank lines are skipped. Errors carry the 1-based line number.
inline std::vector<DatasetEntry> read_jsonl_dataset(std::istream& in) {
  std::vector<DatasetEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (split_tokens(line).empty()) continue;
    try {
      out.push_back(parse_dataset_entry(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw InputError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<DatasetEntry> dataset_from_m2(const std::vector<M2Sentence>& m2, int annotator = 0) {
  std::vector<DatasetEntry> out;
  for (std::size_t i = 0; i < m2.size(); ++i) {
    const EditSet* es = m2[i].find(annotator);
    DatasetEntry entry;
    entry.edits = es ? *es : validate_edit_set(m2[i].source, {});
    entry.hypothesis = apply_all(entry.edits);
    out.push_back(std::move(entry));
  }
  return out;
}

inline nlohmann::json edit_to_json(const Edit& e) {
  nlohmann::json j{{"start", e.start}, {"end", e.end}, {"replacement", join_tokens(e.replacement)}};
  if (e.error_type) j["type"] = *e.error_type;
  return j;
}

inline nlohmann::json dataset_entry_to_json(const DatasetEntry& entry) {
  nlohmann::json j{{"source", entry.edits.source().str()}, {"hypothesis", entry.hypothesis.str()}};
  j["edits"] = nlohmann::json::array();
  for (const auto& e : entry.edits.edits()) j["edits"].push_back(edit_to_json(e));
  if (!entry.references.empty()) {
    j["references"] = nlohmann::json::array();
    for (const auto& r : entry.references) j["references"].push_back(r.str());
  }
  return j;
}

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

// With `timing` false, wall_time_s is written as 0 so that reruns are
// byte-identical.
inline nlohmann::json attribution_record(const EditSet& es, const AttributionResult& r,
                                         bool timing = true) {
  if (es.is_grouped()) throw Error("records are written for ungrouped edit sets");
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["source"] = es.source().str();
  j["hypothesis"] = apply_all(es).str();
  j["method"] = method_name(r.method);
  j["delta_m"] = r.delta_m;
  j["edits"] = nlohmann::json::array();
  for (std::size_t i = 0; i < es.edit_count(); ++i) {
    const Edit& e = es.edits()[i];
    j["edits"].push_back({{"span", {e.start, e.end}},
                          {"replacement", join_tokens(e.replacement)},
                          {"type", optional_json(e.error_type)},
                          {"phi", r.raw[i]},
                          {"phi_norm", r.normalized[i]}});
  }
  j["scorer_calls"] = r.scorer_calls;
  j["wall_time_s"] = timing ? r.wall_time_s : 0.0;
  j["seed"] = optional_json(r.seed);
  j["sampling_t"] = optional_json(r.sampling_t);
  j["flags"] = {{"non_effective", r.non_effective},
                {"sampling_capped", r.sampling_capped},
                {"sampling_exhaustive", r.sampling_exhaustive}};
  return j;
}

inline AttributedSentence parse_attribution_record(const nlohmann::json& j) {
  const int version = j.value("schema_version", 0);
  if (version != kSchemaVersion) {
    throw InputError("unsupported attribution schema_version " + std::to_string(version));
  }
  AttributedSentence out;
  std::vector<Edit> edits;
  for (const auto& e : j.at("edits")) {
    Edit edit{e.at("span").at(0).get<std::size_t>(), e.at("span").at(1).get<std::size_t>(),
              split_tokens(e.at("replacement").get<std::string>()), std::nullopt};
    if (e.contains("type") && e["type"].is_string()) edit.error_type = e["type"].get<std::string>();
    edits.push_back(std::move(edit));
    out.result.raw.push_back(e.at("phi").get<double>());
    out.result.normalized.push_back(e.at("phi_norm").get<double>());
  }
  out.edits = make_edit_set(parse_sentence(j.at("source").get<std::string>()), std::move(edits),
                            parse_sentence(j.at("hypothesis").get<std::string>()));
  out.result.method = parse_method(j.at("method").get<std::string>());
  out.result.delta_m = j.at("delta_m").get<double>();
  out.result.scorer_calls = j.value("scorer_calls", std::uint64_t{0});
  out.result.wall_time_s = j.value("wall_time_s", 0.0);
  if (j.contains("seed") && !j["seed"].is_null()) out.result.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("sampling_t") && !j["sampling_t"].is_null()) {
    out.result.sampling_t = j["sampling_t"].get<std::uint64_t>();
  }
  if (j.contains("flags")) {
    const auto& f = j["flags"];
    out.result.non_effective = f.value("non_effective", false);
    out.result.sampling_capped = f.value("sampling_capped", false);
    out.result.sampling_exhaustive = f.value("sampling_exhaustive", false);
  }
  return out;
}

inline std::vector<AttributedSentence> read_attribution_records(std::istream& in) {
  std::vector<AttributedSentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (split_tokens(line).empty()) continue;
    try {
      out.push_back(parse_attribution_record(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw InputError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ConsistencyReport& r) {
  nlohmann::json j;
  j["method"] = method_name(r.method);
  j["sign_agreement_ratio"] = r.sign_agreement_ratio;
  j["pearson"] = r.pearson;
  j["spearman"] = r.spearman;
  j["n_sentences"] = r.n_sentences;
  j["n_groups"] = r.n_groups;
  j["n_skipped_single_group"] = r.n_skipped_single_group;
  j["n_skipped_precondition"] = r.n_skipped_precondition;
  j["n_undefined_correlations"] = r.n_undefined_correlations;
  j["records"] = nlohmann::json::array();
  for (const auto& rec : r.records) {
    j["records"].push_back({{"sentence", rec.sentence},
                            {"group_masks", rec.group_masks},
                            {"predicted_group_scores", rec.predicted_group_scores},
                            {"observed_group_scores", rec.observed_group_scores},
                            {"signs_agree", rec.signs_agree}});
  }
  return j;
}

inline void write_consistency_csv(std::ostream& out, const ConsistencyReport& r) {
  out.precision(17);
  out << "sentence,group,mask,predicted,observed,sign_agree\n";
  for (const auto& rec : r.records) {
    for (std::size_t g = 0; g < rec.group_masks.size(); ++g) {
      out << rec.sentence << ',' << g << ',' << rec.group_masks[g] << ','
          << rec.predicted_group_scores[g] << ',' << rec.observed_group_scores[g] << ','
          << (rec.signs_agree[g] ? 1 : 0) << '\n';
    }
  }
}

inline nlohmann::json to_json(const AgreementReport& r) {
  nlohmann::json j;
  j["method"] = method_name(r.method);
  j["threshold_mode"] = threshold_mode_name(r.mode);
  j["n_sentences"] = r.n_sentences;
  j["n_skipped_few_edits"] = r.n_skipped_few_edits;
  j["n_zero_excluded"] = r.n_zero_excluded;
  j["curve"] = nlohmann::json::array();
  for (const auto& p : r.curve) {
    j["curve"].push_back({{"threshold", p.threshold}, {"accuracy", p.accuracy}, {"n_edits", p.n_edits}});
  }
  j["edits"] = nlohmann::json::array();
  for (const auto& e : r.edits) {
    j["edits"].push_back({{"sentence", e.sentence},
                          {"edit", e.edit},
                          {"attribution_sign", e.attribution_sign},
                          {"reference_correct", e.reference_correct},
                          {"abs_normalized", e.abs_normalized},
                          {"reference", e.reference}});
  }
  return j;
}

inline void write_threshold_csv(std::ostream& out, const AgreementReport& r) {
  out.precision(17);
  out << "threshold,accuracy,n_edits\n";
  for (const auto& p : r.curve) {
    out << p.threshold << ',';
    if (!std::isnan(p.accuracy)) out << p.accuracy;
    out << ',' << p.n_edits << '\n';
  }
}

inline nlohmann::json to_json(const SamplingErrorReport& r) {
  return {{"t", r.t},
          {"seed", r.seed},
          {"n_sentences", r.n_sentences},
          {"n_edits", r.n_edits},
          {"mean_abs_error", r.mean_abs_error},
          {"mean_time_exact_s", r.mean_time_exact_s},
          {"mean_time_sampling_s", r.mean_time_sampling_s},
          {"mean_abs_shapley", r.mean_abs_shapley},
          {"std_abs_shapley", r.std_abs_shapley},
          {"scorer_calls_exact", r.scorer_calls_exact},
          {"scorer_calls_sampling", r.scorer_calls_sampling}};
}

inline void write_sampling_error_csv(std::ostream& out, const SamplingErrorReport& r) {
  out.precision(17);
  out << "t,seed,n_sentences,n_edits,mean_abs_error,mean_time_exact_s,mean_time_sampling_s,"
         "mean_abs_shapley,std_abs_shapley\n";
  out << r.t << ',' << r.seed << ',' << r.n_sentences << ',' << r.n_edits << ','
      << r.mean_abs_error << ',' << r.mean_time_exact_s << ',' << r.mean_time_sampling_s << ','
      << r.mean_abs_shapley << ',' << r.std_abs_shapley << '\n';
}

inline nlohmann::json to_json(const std::vector<TimingPoint>& points) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : points) {
    j.push_back({{"n", p.n},
                 {"mean_s", p.mean_s},
                 {"std_s", p.std_s},
                 {"scorer_calls", p.scorer_calls},
                 {"repetitions", p.repetitions}});
  }
  return j;
}

inline void write_timing_csv(std::ostream& out, const std::vector<TimingPoint>& points) {
  out.precision(17);
  out << "n,mean_s,std_s,scorer_calls,repetitions\n";
  for (const auto& p : points) {
    out << p.n << ',' << p.mean_s << ',' << p.std_s << ',' << p.scorer_calls << ','
        << p.repetitions << '\n';
  }
}

}  // namespace editshap

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

// editshap command-line tool.
//
// Exit codes: 0 ok, 1 input error, 2 scorer or bridge error, 3 edit count
// above the exact-Shapley cap.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "editshap/aggregate.hpp"
#include "editshap/attribution.hpp"
#include "editshap/evaluation.hpp"
#include "editshap/external.hpp"
#include "editshap/io.hpp"
#include "editshap/m2.hpp"
#include "editshap/parallel.hpp"
#include "editshap/scorer.hpp"

namespace es = editshap;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Options
// ---------------------------------------------------------------------------

struct InputOptions {
  std::string input;
  std::string m2;
  int annotator = 0;
  std::string source;
  std::string hyp;
  std::vector<std::string> refs;
};

struct RunOptions {
  std::string scorer = "stub";
  std::string method = "shapley";
  std::uint64_t t = 64;
  std::uint64_t seed = 0;
  std::size_t max_edits = 10;
  bool auto_sampling = false;
  bool normalize = false;
  std::size_t jobs = 1;
  bool no_timing = false;
  std::string threshold_mode = "below";
  std::string out;
  std::string out_json;
  std::string out_csv;
};

std::string env_name(const std::string& long_name) {
  std::string s = "ESH_" + long_name;
  for (char& c : s) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Adds --name with an ESH_NAME fallback.
template <typename T>
CLI::Option* add(CLI::App* app, const std::string& name, T& target, const std::string& help) {
  return app->add_option("--" + name, target, help)->envname(env_name(name));
}

CLI::Option* add_flag(CLI::App* app, const std::string& name, bool& target, const std::string& help) {
  return app->add_flag("--" + name, target, help)->envname(env_name(name));
}

void add_input_options(CLI::App* app, InputOptions& in) {
  app->add_option("--input", in.input, "JSONL dataset")->check(CLI::ExistingFile);
  app->add_option("--m2", in.m2, "M2 file (sources and annotator edits)")->check(CLI::ExistingFile);
  app->add_option("--annotator", in.annotator, "M2 annotator id used for edits");
  app->add_option("--source", in.source, "plain-text sources, one per line")->check(CLI::ExistingFile);
  app->add_option("--hyp", in.hyp, "plain-text hypotheses, one per line")->check(CLI::ExistingFile);
  app->add_option("--refs", in.refs, "plain-text references, one per line (repeatable)")
      ->check(CLI::ExistingFile);
}

void add_scorer_options(CLI::App* app, RunOptions& run) {
  add(app, "scorer", run.scorer, "stub[:SCALE,OFFSET] | ngram:PATH | additive:PATH | external:CMD-or-HOST:PORT");
  add(app, "jobs", run.jobs, "worker threads across sentences")->check(CLI::PositiveNumber);
}

void add_method_options(CLI::App* app, RunOptions& run) {
  add(app, "method", run.method, "shapley | sampling | add | sub");
  add(app, "t", run.t, "sampled permutations")->check(CLI::PositiveNumber);
  add(app, "seed", run.seed, "sampling seed");
  add(app, "max-edits", run.max_edits, "largest N attributed exactly");
}

void add_report_options(CLI::App* app, RunOptions& run) {
  app->add_option("--out-json", run.out_json, "JSON report path");
  app->add_option("--out-csv", run.out_csv, "CSV report path");
}

// Flags > ESH_ environment > defaults; records where each value came from.
json describe_config(const CLI::App& app, const std::vector<std::string>& argv) {
  json config = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string lname = opt->get_lnames().front();
    if (lname == "help") continue;
    std::string source = "default";
    const bool on_command_line = std::any_of(argv.begin(), argv.end(), [&](const std::string& a) {
      return a == "--" + lname || a.rfind("--" + lname + "=", 0) == 0;
    });
    if (on_command_line) {
      source = "flag";
    } else if (!opt->get_envname().empty() && std::getenv(opt->get_envname().c_str())) {
      source = "env";
    }
    json value;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      value = results.size() == 1 ? json(results.front()) : json(results);
    } else {
      value = opt->get_default_str();
    }
    config[lname] = {{"value", value}, {"source", source}};
  }
  return config;
}

// ---------------------------------------------------------------------------
// Input
// ---------------------------------------------------------------------------

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw es::InputError("cannot read " + path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

// Copies the error type of any annotator edit making the same correction.
void type_from_annotations(std::vector<es::Edit>& edits, const es::M2Sentence& m2) {
  for (auto& e : edits) {
    for (const auto& a : m2.annotations) {
      for (const auto& g : a.edits.edits()) {
        if (e.same_correction(g) && g.error_type) e.error_type = g.error_type;
      }
    }
  }
}

std::vector<es::DatasetEntry> load_dataset(const InputOptions& in) {
  std::vector<es::DatasetEntry> data;
  if (!in.input.empty()) {
    std::ifstream f(in.input);
    data = es::read_jsonl_dataset(f);
  } else if (!in.m2.empty()) {
    std::ifstream f(in.m2);
    const auto m2 = es::parse_m2(f);
    if (in.hyp.empty()) {
      data = es::dataset_from_m2(m2, in.annotator);
    } else {
      const auto hyps = read_lines(in.hyp);
      if (hyps.size() != m2.size()) {
        throw es::InputError(in.hyp + " has " + std::to_string(hyps.size()) + " lines, " + in.m2 +
                             " has " + std::to_string(m2.size()) + " sentences");
      }
      for (std::size_t i = 0; i < m2.size(); ++i) {
        es::DatasetEntry e;
        e.hypothesis = es::parse_sentence(hyps[i]);
        auto extracted = es::extract_edits(m2[i].source, e.hypothesis);
        std::vector<es::Edit> edits = extracted.edits();
        type_from_annotations(edits, m2[i]);
        e.edits = es::validate_edit_set(m2[i].source, std::move(edits));
        data.push_back(std::move(e));
      }
    }
    for (std::size_t i = 0; i < m2.size(); ++i) {
      for (const auto& a : m2[i].annotations) data[i].references.push_back(es::apply_all(a.edits));
    }
  } else if (!in.source.empty() && !in.hyp.empty()) {
    const auto src = read_lines(in.source);
    const auto hyp = read_lines(in.hyp);
    if (src.size() != hyp.size()) throw es::InputError("--source and --hyp differ in line count");
    for (std::size_t i = 0; i < src.size(); ++i) {
      es::DatasetEntry e;
      e.hypothesis = es::parse_sentence(hyp[i]);
      e.edits = es::extract_edits(es::parse_sentence(src[i]), e.hypothesis);
      data.push_back(std::move(e));
    }
  } else {
    throw es::InputError("no input: give --input, --m2, or --source with --hyp");
  }
  for (const auto& path : in.refs) {
    const auto lines = read_lines(path);
    if (lines.size() != data.size()) {
      throw es::InputError(path + " has " + std::to_string(lines.size()) + " lines, expected " +
                           std::to_string(data.size()));
    }
    for (std::size_t i = 0; i < lines.size(); ++i) data[i].references.push_back(es::parse_sentence(lines[i]));
  }
  return data;
}

// ---------------------------------------------------------------------------
// Scorers
// ---------------------------------------------------------------------------

struct Scorers {
  std::vector<std::unique_ptr<es::Scorer>> owned;
  bool per_sentence = false;

  const es::Scorer& at(std::size_t i) const { return *owned[per_sentence ? i : 0]; }
};

std::pair<std::string, std::string> split_kind(const std::string& desc) {
  const auto colon = desc.find(':');
  if (colon == std::string::npos) return {desc, ""};
  return {desc.substr(0, colon), desc.substr(colon + 1)};
}

std::vector<es::Interaction> parse_interactions(const json& j) {
  std::vector<es::Interaction> out;
  if (!j.is_array()) return out;
  for (const auto& it : j) {
    out.push_back({it.at(0).get<std::size_t>(), it.at(1).get<std::size_t>(), it.at(2).get<double>()});
  }
  return out;
}

// `data` is needed only by the per-sentence additive oracle.
Scorers make_scorers(const std::string& desc, const std::vector<es::DatasetEntry>* data) {
  const auto [kind, arg] = split_kind(desc);
  Scorers s;
  try {
    if (kind == "stub") {
      double scale = 1.0, offset = 0.0;
      if (!arg.empty()) {
        char comma = 0;
        std::istringstream in(arg);
        if (!(in >> scale >> comma >> offset) || comma != ',') throw es::ScorerError("bad stub scorer " + desc);
      }
      s.owned.push_back(std::make_unique<es::LengthScorer>(scale, offset));
    } else if (kind == "ngram") {
      auto lm = std::make_shared<const es::NGramLM>(es::NGramLM::load(arg));
      s.owned.push_back(std::make_unique<es::NGramScorer>(std::move(lm)));
    } else if (kind == "additive") {
      if (!data) throw es::ScorerError("the additive oracle needs a dataset");
      const auto lines = read_lines(arg);
      if (lines.size() != data->size()) {
        throw es::ScorerError(arg + " has " + std::to_string(lines.size()) +
                              " lines, dataset has " + std::to_string(data->size()));
      }
      s.per_sentence = true;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto j = json::parse(lines[i]);
        s.owned.push_back(std::make_unique<es::AdditiveOracleScorer>(
            (*data)[i].edits, j.at("bonuses").get<std::vector<double>>(),
            parse_interactions(j.value("interactions", json::array()))));
      }
    } else if (kind == "external") {
      s.owned.push_back(std::make_unique<es::ExternalScorerClient>(es::make_transport(arg)));
    } else {
      throw es::ScorerError("unknown scorer '" + desc + "'");
    }
  } catch (const es::ScorerError&) {
    throw;
  } catch (const std::exception& e) {
    throw es::ScorerError("scorer " + desc + ": " + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw es::InputError("cannot write " + path);
  out << text;
}

template <typename WriteCsv>
void emit_reports(const RunOptions& run, const std::string& command, const json& config,
                  const json& report, WriteCsv&& write_csv) {
  if (!run.out_json.empty()) {
    json doc{{"schema_version", es::kSchemaVersion}, {"command", command}, {"config", config},
             {"report", report}};
    write_file(run.out_json, doc.dump(2) + "\n");
  }
  if (!run.out_csv.empty()) {
    std::ostringstream csv;
    write_csv(csv);
    write_file(run.out_csv, csv.str());
  }
}

std::string fmt(double x, int precision = 4) {
  if (std::isnan(x)) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << x;
  return s.str();
}

// Keeps entries with at most `max_edits` players; returns kept indices.
std::vector<std::size_t> within_cap(const std::vector<es::DatasetEntry>& data, std::size_t max_edits) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].edits.size() <= max_edits) kept.push_back(i);
  }
  return kept;
}

struct Subset {
  std::vector<es::EditSet> sets;
  std::vector<std::vector<es::Sentence>> refs;
  es::ScorerFor scorer_for;
  std::size_t dropped = 0;
};

Subset evaluation_subset(const std::vector<es::DatasetEntry>& data, const Scorers& scorers,
                         std::size_t max_edits) {
  Subset s;
  auto kept = within_cap(data, max_edits);
  s.dropped = data.size() - kept.size();
  for (std::size_t i : kept) {
    s.sets.push_back(data[i].edits);
    s.refs.push_back(data[i].references);
  }
  s.scorer_for = [&scorers, kept](std::size_t i) -> const es::Scorer& { return scorers.at(kept[i]); };
  return s;
}

es::EvaluationOptions evaluation_options(const RunOptions& run) {
  es::EvaluationOptions opt;
  opt.sampling = es::SamplingConfig{run.t, run.seed, true};
  opt.attribution.max_exact_edits = std::max<std::size_t>(run.max_edits, 20);
  opt.jobs = run.jobs;
  return opt;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_attribute(const InputOptions& in, const RunOptions& run) {
  const auto data = load_dataset(in);
  const auto scorers = make_scorers(run.scorer, &data);
  const es::Method method = es::parse_method(run.method);
  es::AttributionOptions opt;
  opt.max_exact_edits = run.max_edits;

  if (method == es::Method::kShapley && !run.auto_sampling) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].edits.size() > run.max_edits) {
        throw es::TooManyEditsError("sentence " + std::to_string(i + 1) + " has " +
                                    std::to_string(data[i].edits.size()) + " edits, above --max-edits " +
                                    std::to_string(run.max_edits) + " (use --auto-sampling)");
      }
    }
  }

  const auto results = es::parallel_map(data.size(), run.jobs, [&](std::size_t i) {
    const auto& edits = data[i].edits;
    es::Method m = method;
    if (m == es::Method::kShapley && edits.size() > run.max_edits) m = es::Method::kShapleySampling;
    return es::attribute(m, scorers.at(i), edits, es::SamplingConfig{run.t, run.seed + i, true}, opt);
  });

  std::ofstream file;
  if (!run.out.empty()) {
    file.open(run.out);
    if (!file) throw es::InputError("cannot write " + run.out);
  }
  std::ostream& out = run.out.empty() ? std::cout : file;
  std::uint64_t calls = 0;
  std::size_t sampled = 0, non_effective = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << es::attribution_record(data[i].edits, results[i], !run.no_timing).dump() << '\n';
    calls += results[i].scorer_calls;
    sampled += results[i].method == es::Method::kShapleySampling && method != results[i].method;
    non_effective += results[i].non_effective;
  }
  out.flush();

  std::cerr << "attributed " << data.size() << " sentences with " << es::method_name(method)
            << " (" << scorers.owned.front()->name() << "), " << calls << " scorer calls";
  if (sampled) std::cerr << ", " << sampled << " routed to sampling";
  if (non_effective) std::cerr << ", " << non_effective << " non-effective";
  std::cerr << '\n';
  for (std::size_t i = 0; i < data.size() && i < 5; ++i) {
    const auto& r = results[i];
    const auto& values = run.normalize ? r.normalized : r.raw;
    std::cerr << "  [" << i + 1 << "] dM=" << fmt(r.delta_m);
    for (std::size_t k = 0; k < values.size(); ++k) {
      std::cerr << ' ' << es::describe(data[i].edits.edits()[k]) << '=' << fmt(values[k]);
    }
    std::cerr << '\n';
  }
  return 0;
}

int cmd_consistency(const InputOptions& in, const RunOptions& run, const json& config) {
  const auto data = load_dataset(in);
  const auto scorers = make_scorers(run.scorer, &data);
  const auto sub = evaluation_subset(data, scorers, run.max_edits);
  const es::Method method = es::parse_method(run.method);
  const auto report = es::evaluate_consistency(sub.scorer_for, method, sub.sets, evaluation_options(run));
  json j = es::to_json(report);
  j["n_dropped_above_cap"] = sub.dropped;
  emit_reports(run, "consistency", config, j, [&](std::ostream& o) { es::write_consistency_csv(o, report); });
  std::cout << "consistency (" << es::method_name(method) << ")\n"
            << "  sentences evaluated   " << report.n_sentences << '\n'
            << "  groups compared       " << report.n_groups << '\n'
            << "  skipped single group  " << report.n_skipped_single_group << '\n'
            << "  dropped above cap     " << sub.dropped << '\n'
            << "  sign agreement ratio  " << fmt(report.sign_agreement_ratio) << '\n'
            << "  pearson               " << fmt(report.pearson) << '\n'
            << "  spearman              " << fmt(report.spearman) << '\n';
  return 0;
}

int cmd_agreement(const InputOptions& in, const RunOptions& run, const json& config) {
  const auto data = load_dataset(in);
  const auto scorers = make_scorers(run.scorer, &data);
  const auto sub = evaluation_subset(data, scorers, run.max_edits);
  const es::Method method = es::parse_method(run.method);
  const auto mode = es::parse_threshold_mode(run.threshold_mode);
  const auto report =
      es::evaluate_agreement(sub.scorer_for, method, sub.sets, sub.refs, mode, evaluation_options(run));
  json j = es::to_json(report);
  j["n_dropped_above_cap"] = sub.dropped;
  emit_reports(run, "agreement", config, j, [&](std::ostream& o) { es::write_threshold_csv(o, report); });
  std::cout << "agreement (" << es::method_name(method) << ", threshold mode "
            << es::threshold_mode_name(mode) << ")\n"
            << "  sentences " << report.n_sentences << ", edits " << report.edits.size()
            << ", zero-attribution excluded " << report.n_zero_excluded << '\n'
            << "  threshold  accuracy  edits\n";
  for (const auto& p : report.curve) {
    std::cout << "  " << fmt(p.threshold, 1) << "        " << fmt(p.accuracy) << "    " << p.n_edits << '\n';
  }
  return 0;
}

int cmd_sampling_error(const InputOptions& in, const RunOptions& run, const json& config) {
  const auto data = load_dataset(in);
  const auto scorers = make_scorers(run.scorer, &data);
  const auto sub = evaluation_subset(data, scorers, run.max_edits);
  const auto opt = evaluation_options(run);
  const auto report = es::evaluate_sampling_error(sub.scorer_for, sub.sets, opt.sampling, opt);
  json j = es::to_json(report);
  j["n_dropped_above_cap"] = sub.dropped;
  emit_reports(run, "sampling-error", config, j,
               [&](std::ostream& o) { es::write_sampling_error_csv(o, report); });
  std::cout << "sampling error (T=" << report.t << ", seed " << report.seed << ")\n"
            << "  sentences " << report.n_sentences << ", edits " << report.n_edits << '\n'
            << "  mean |sampled - exact|  " << fmt(report.mean_abs_error, 6) << '\n'
            << "  mean |exact phi|        " << fmt(report.mean_abs_shapley, 6) << " (std "
            << fmt(report.std_abs_shapley, 6) << ")\n"
            << "  mean time exact         " << fmt(report.mean_time_exact_s, 6) << " s\n"
            << "  mean time sampling      " << fmt(report.mean_time_sampling_s, 6) << " s\n";
  return 0;
}

struct AggregateOptions {
  std::vector<std::string> records;
  std::vector<std::string> names;
  std::size_t min_count = 30;
};

std::vector<std::pair<std::string, std::vector<es::AttributedSentence>>> load_records(
    const AggregateOptions& agg) {
  if (!agg.names.empty() && agg.names.size() != agg.records.size()) {
    throw es::InputError("--name must be given once per records file");
  }
  std::vector<std::pair<std::string, std::vector<es::AttributedSentence>>> out;
  for (std::size_t i = 0; i < agg.records.size(); ++i) {
    std::ifstream f(agg.records[i]);
    if (!f) throw es::InputError("cannot read " + agg.records[i]);
    const std::string name =
        agg.names.empty() ? std::filesystem::path(agg.records[i]).stem().string() : agg.names[i];
    out.emplace_back(name, es::read_attribution_records(f));
  }
  return out;
}

int cmd_aggregate(const AggregateOptions& agg, const RunOptions& run, const json& config) {
  const auto rows = load_records(agg);
  json report = json::object();
  std::vector<std::pair<std::string, std::map<std::string, double>>> matrix;
  for (const auto& [name, records] : rows) {
    const auto means = es::error_type_means(records, agg.min_count);
    json row = json::object();
    std::map<std::string, double> cells;
    for (const auto& [type, m] : means) {
      row[type] = {{"mean", m.mean}, {"count", m.count}, {"low_support", m.low_support}};
      cells[type] = m.mean;
    }
    report[name] = row;
    matrix.emplace_back(name, cells);
  }
  emit_reports(run, "aggregate", config, report, [&](std::ostream& o) { es::write_type_matrix_csv(o, matrix); });
  for (const auto& [name, cells] : matrix) {
    std::cout << name << '\n';
    for (const auto& [type, v] : cells) {
      std::cout << "  " << std::left << std::setw(16) << type << fmt(v)
                << (report[name][type]["low_support"].get<bool>() ? "  (low support)" : "") << '\n';
    }
  }
  return 0;
}

int cmd_precision(const AggregateOptions& agg, const RunOptions& run, const json& config) {
  const auto rows = load_records(agg);
  json report = json::object();
  std::vector<std::pair<std::string, std::map<std::string, double>>> matrix;
  for (const auto& [name, records] : rows) {
    const auto acc = es::accumulate_types(records);
    json row = json::object();
    for (const auto& [type, p] : acc.precision_sums()) {
      row[type] = {{"precision", es::optional_json(p.precision())},
                   {"positive", p.positive},
                   {"negative_abs", p.negative_abs}};
    }
    report[name] = row;
    matrix.emplace_back(name, acc.precision());
  }
  emit_reports(run, "precision", config, report, [&](std::ostream& o) { es::write_type_matrix_csv(o, matrix); });
  for (const auto& [name, cells] : matrix) {
    std::cout << name << '\n';
    for (const auto& [type, v] : cells) std::cout << "  " << std::left << std::setw(16) << type << fmt(v) << '\n';
  }
  return 0;
}

// "2..8" or "2,4,6".
std::vector<std::size_t> parse_n_values(const std::string& desc) {
  std::vector<std::size_t> out;
  if (auto dots = desc.find(".."); dots != std::string::npos) {
    const std::size_t lo = std::stoul(desc.substr(0, dots));
    const std::size_t hi = std::stoul(desc.substr(dots + 2));
    for (std::size_t n = lo; n <= hi; ++n) out.push_back(n);
  } else {
    std::istringstream in(desc);
    for (std::string item; std::getline(in, item, ',');) out.push_back(std::stoul(item));
  }
  if (out.empty()) throw es::InputError("empty --n range '" + desc + "'");
  return out;
}

struct BenchOptions {
  std::string n = "2..10";
  std::size_t min_repetitions = 3;
  double min_total_s = 0.05;
};

int cmd_bench(const BenchOptions& bench, const RunOptions& run, const json& config) {
  std::vector<std::size_t> ns;
  try {
    ns = parse_n_values(bench.n);
  } catch (const std::logic_error&) {
    throw es::InputError("bad --n range '" + bench.n + "'");
  }
  const auto scorers = make_scorers(run.scorer, nullptr);
  es::BenchmarkOptions opt;
  opt.min_repetitions = bench.min_repetitions;
  opt.min_total_s = bench.min_total_s;
  es::AttributionOptions aopt;
  aopt.max_exact_edits = std::max<std::size_t>(run.max_edits, *std::max_element(ns.begin(), ns.end()));
  const auto points = es::benchmark_timing(scorers.at(0), ns, opt, aopt);
  emit_reports(run, "bench", config, es::to_json(points), [&](std::ostream& o) { es::write_timing_csv(o, points); });
  std::cout << "  N  scorer_calls  mean_s      std_s\n";
  for (const auto& p : points) {
    std::cout << std::right << std::setw(3) << p.n << "  " << std::setw(12) << p.scorer_calls << "  "
              << fmt(p.mean_s, 6) << "  " << fmt(p.std_s, 6) << '\n';
  }
  return 0;
}

struct TrainOptions {
  std::string corpus;
  std::string out;
  int order = 3;
  double alpha = 0.1;
};

int cmd_train_lm(const TrainOptions& tr) {
  std::vector<es::Sentence> corpus;
  for (const auto& line : read_lines(tr.corpus)) corpus.push_back(es::parse_sentence(line));
  const auto lm = es::NGramLM::train(corpus, tr.order, tr.alpha);
  lm.save(tr.out);
  std::cout << "trained order-" << tr.order << " model on " << corpus.size() << " sentences, vocabulary "
            << lm.vocab_size() << ", written to " << tr.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribute sentence-level metric differences to GEC edits."};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  InputOptions in;
  RunOptions run;
  AggregateOptions agg;
  BenchOptions bench;
  TrainOptions train;

  auto* attribute = app.add_subcommand("attribute", "attribute dM to edits, one JSONL record per sentence");
  add_input_options(attribute, in);
  add_scorer_options(attribute, run);
  add_method_options(attribute, run);
  add_flag(attribute, "auto-sampling", run.auto_sampling, "route sentences above --max-edits to sampling");
  add_flag(attribute, "normalize", run.normalize, "show normalized values in the summary");
  add_flag(attribute, "no-timing", run.no_timing, "write wall_time_s as 0 for byte-identical reruns");
  attribute->add_option("--out", run.out, "output JSONL (default stdout)");

  auto* consistency = app.add_subcommand("consistency", "grouped-edit consistency check");
  auto* agreement = app.add_subcommand("agreement", "agreement of attribution signs with references");
  auto* sampling = app.add_subcommand("sampling-error", "sampled versus exact Shapley values");
  for (auto* sub : {consistency, agreement, sampling}) {
    add_input_options(sub, in);
    add_scorer_options(sub, run);
    add_method_options(sub, run);
    add_report_options(sub, run);
  }
  add(agreement, "threshold-mode", run.threshold_mode, "below: |phi_norm| <= t; above: |phi_norm| >= 1 - t")
      ->check(CLI::IsMember({"below", "above"}));

  auto* aggregate = app.add_subcommand("aggregate", "mean normalized attribution per error type");
  auto* precision = app.add_subcommand("precision", "attribution-weighted precision per error type");
  for (auto* sub : {aggregate, precision}) {
    sub->add_option("records", agg.records, "attribution JSONL files, one row each")->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--name", agg.names, "row names, one per file (default: file stem)");
    add_report_options(sub, run);
    add(sub, "seed", run.seed, "recorded for reproducibility");
  }
  aggregate->add_option("--min-count", agg.min_count, "types seen fewer times are flagged");

  auto* benchmark = app.add_subcommand("bench", "exact Shapley wall time and call budget by N");
  benchmark->add_option("--n", bench.n, "N values, \"lo..hi\" or comma separated");
  benchmark->add_option("--min-reps", bench.min_repetitions, "repetitions per N");
  benchmark->add_option("--min-total", bench.min_total_s, "minimum measured seconds per N");
  add(benchmark, "scorer", run.scorer, "stub[:SCALE,OFFSET] | ngram:PATH | external:CMD-or-HOST:PORT");
  add(benchmark, "max-edits", run.max_edits, "exact cap (raised to the largest N)");
  add(benchmark, "seed", run.seed, "recorded for reproducibility");
  add_report_options(benchmark, run);

  auto* train_lm = app.add_subcommand("train-lm", "train the n-gram scorer model");
  train_lm->add_option("--corpus", train.corpus, "one tokenized sentence per line")->required()
      ->check(CLI::ExistingFile);
  train_lm->add_option("--out", train.out, "model file")->required();
  train_lm->add_option("--order", train.order, "2 or 3");
  train_lm->add_option("--alpha", train.alpha, "add-alpha smoothing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (auto* sub : app.get_subcommands()) {
      const json config = describe_config(*sub, args);
      if (sub == attribute) return cmd_attribute(in, run);
      if (sub == consistency) return cmd_consistency(in, run, config);
      if (sub == agreement) return cmd_agreement(in, run, config);
      if (sub == sampling) return cmd_sampling_error(in, run, config);
      if (sub == aggregate) return cmd_aggregate(agg, run, config);
      if (sub == precision) return cmd_precision(agg, run, config);
      if (sub == benchmark) return cmd_bench(bench, run, config);
      if (sub == train_lm) return cmd_train_lm(train);
    }
  } catch (const es::TooManyEditsError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const es::ScorerError& e) {
    std::cerr << "scorer error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

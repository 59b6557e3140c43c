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

// Sentence-level scorers M(H|S). Higher is better for every scorer.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "editshap/core.hpp"
#include "editshap/edits.hpp"

namespace editshap {

struct SentencePair {
  Sentence source;
  Sentence hypothesis;
};

// Deterministic sentence-level metric. Implementations must be safe to call
// concurrently through the const interface.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual double score(const Sentence& source, const Sentence& hypothesis) const = 0;

  // Element-wise score(), in input order.
  virtual std::vector<double> batch_score(std::span<const SentencePair> pairs) const {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(score(p.source, p.hypothesis));
    return out;
  }

  virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Stub scorer: a * |H| + b.
// ---------------------------------------------------------------------------

class LengthScorer final : public Scorer {
 public:
  explicit LengthScorer(double scale = 1.0, double offset = 0.0)
      : scale_(scale), offset_(offset) {}

  double score(const Sentence&, const Sentence& hypothesis) const override {
    return scale_ * static_cast<double>(hypothesis.size()) + offset_;
  }
  std::string name() const override { return "length_stub"; }

 private:
  double scale_;
  double offset_;
};

// ---------------------------------------------------------------------------
// a1 * M1 + a2 * M2 + ...
// ---------------------------------------------------------------------------

class LinearCombinationScorer final : public Scorer {
 public:
  struct Term {
    double weight;
    std::shared_ptr<const Scorer> scorer;
  };

  explicit LinearCombinationScorer(std::vector<Term> terms) : terms_(std::move(terms)) {}

  double score(const Sentence& source, const Sentence& hypothesis) const override {
    double total = 0.0;
    for (const auto& t : terms_) total += t.weight * t.scorer->score(source, hypothesis);
    return total;
  }
  std::string name() const override { return "linear"; }

 private:
  std::vector<Term> terms_;
};

// ---------------------------------------------------------------------------
// Scorers defined directly on subsets of a known edit set. The hypothesis is
// decoded back into the subset of players that produced it.
// ---------------------------------------------------------------------------

class SubsetGameScorer : public Scorer {
 public:
  explicit SubsetGameScorer(EditSet edits) : edits_(std::move(edits)) {}

  double score(const Sentence& source, const Sentence& hypothesis) const override {
    if (!(source == edits_.source())) {
      throw UnrecognizedEditError("source differs from the registered edit set");
    }
    auto mask = recognize_subset(edits_, hypothesis);
    if (!mask) {
      throw UnrecognizedEditError("hypothesis \"" + hypothesis.str() +
                                  "\" is not reachable by the registered edits");
    }
    return value(*mask);
  }

  const EditSet& edits() const { return edits_; }

 protected:
  virtual double value(SubsetMask mask) const = 0;

 private:
  EditSet edits_;
};

class FunctionGameScorer final : public SubsetGameScorer {
 public:
  FunctionGameScorer(EditSet edits, std::function<double(SubsetMask)> fn,
                     std::string name = "game")
      : SubsetGameScorer(std::move(edits)), fn_(std::move(fn)), name_(std::move(name)) {}

  std::string name() const override { return name_; }

 protected:
  double value(SubsetMask mask) const override { return fn_(mask); }

 private:
  std::function<double(SubsetMask)> fn_;
  std::string name_;
};

// Pairwise term added when both players are applied.
struct Interaction {
  std::size_t first;
  std::size_t second;
  double bonus;
};

// Ground-truth scorer: base 0, plus one bonus per applied player, plus
// optional pairwise interaction bonuses.
class AdditiveOracleScorer final : public SubsetGameScorer {
 public:
  AdditiveOracleScorer(EditSet edits, std::vector<double> bonuses,
                       std::vector<Interaction> interactions = {})
      : SubsetGameScorer(std::move(edits)),
        bonuses_(std::move(bonuses)),
        interactions_(std::move(interactions)) {
    if (bonuses_.size() != this->edits().size()) {
      throw Error("additive oracle needs one bonus per edit (" +
                  std::to_string(this->edits().size()) + "), got " +
                  std::to_string(bonuses_.size()));
    }
    for (const auto& it : interactions_) {
      if (it.first >= bonuses_.size() || it.second >= bonuses_.size() ||
          it.first == it.second) {
        throw Error("invalid interaction between players " + std::to_string(it.first) +
                    " and " + std::to_string(it.second));
      }
    }
  }

  std::string name() const override { return "additive_oracle"; }
  const std::vector<double>& bonuses() const { return bonuses_; }

 protected:
  double value(SubsetMask mask) const override {
    double total = 0.0;
    for (std::size_t i = 0; i < bonuses_.size(); ++i) {
      if (mask >> i & 1u) total += bonuses_[i];
    }
    for (const auto& it : interactions_) {
      if ((mask >> it.first & 1u) && (mask >> it.second & 1u)) total += it.bonus;
    }
    return total;
  }

 private:
  std::vector<double> bonuses_;
  std::vector<Interaction> interactions_;
};

// ---------------------------------------------------------------------------
// Word n-gram language model with add-alpha smoothing.
// ---------------------------------------------------------------------------

// Score returned for an empty hypothesis in place of -infinity.
inline constexpr double kEmptyHypothesisScore = -1e9;

class NGramLM {
 public:
  static constexpr std::string_view kBos = "<s>";
  static constexpr std::string_view kEos = "</s>";
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr int kFormatVersion = 1;

  NGramLM() = default;

  // Corpus tokens spelled like the reserved markers map onto the markers.
  static NGramLM train(std::span<const Sentence> corpus, int order = 3, double alpha = 0.1) {
    if (order < 2 || order > 3) throw Error("n-gram order must be 2 or 3");
    if (!(alpha > 0.0)) throw Error("smoothing alpha must be positive");
    NGramLM lm;
    lm.order_ = order;
    lm.alpha_ = alpha;
    lm.trained_ = true;
    lm.intern(std::string(kBos));
    lm.intern(std::string(kEos));
    lm.intern(std::string(kUnk));
    for (const auto& s : corpus) {
      for (const auto& t : s.tokens()) lm.intern(t);
    }
    for (const auto& s : corpus) {
      auto ids = lm.padded_ids(s);
      for (std::size_t i = static_cast<std::size_t>(order - 1); i < ids.size(); ++i) {
        lm.add_count(std::span<const std::uint32_t>(ids).subspan(i + 1 - order, order), 1);
      }
    }
    return lm;
  }

  bool trained() const { return trained_; }
  int order() const { return order_; }
  double alpha() const { return alpha_; }

  // Vocabulary size V used by the smoothing denominator: training words plus
  // </s> and <unk>. <s> is never predicted.
  std::size_t vocab_size() const { return trained_ ? vocab_.size() - 1 : 0; }

  // Natural-log probability of every predicted position (words then </s>).
  std::vector<double> log_probs(const Sentence& s) const {
    require_trained();
    auto ids = padded_ids(s);
    std::vector<double> out;
    const double v = static_cast<double>(vocab_size());
    for (std::size_t i = static_cast<std::size_t>(order_ - 1); i < ids.size(); ++i) {
      auto gram = std::span<const std::uint32_t>(ids).subspan(i + 1 - order_, order_);
      const double c_gram = lookup(ngrams_, gram);
      const double c_ctx = lookup(contexts_, gram.first(order_ - 1));
      out.push_back(std::log((c_gram + alpha_) / (c_ctx + alpha_ * v)));
    }
    return out;
  }

  double perplexity(const Sentence& s) const {
    auto lp = log_probs(s);
    double sum = 0.0;
    for (double x : lp) sum += x;
    return std::exp(-sum / static_cast<double>(lp.size()));
  }

  // -perplexity, or kEmptyHypothesisScore for an empty sentence.
  double score(const Sentence& s) const {
    require_trained();
    if (s.empty()) return kEmptyHypothesisScore;
    return -perplexity(s);
  }

  // JSON model file:
  //   {"format": "editshap.ngram", "version": 1, "order": k, "alpha": a,
  //    "vocab": [words...], "ngrams": [[[w1, ..., wk], count], ...]}
  // "vocab" excludes the three markers; n-grams are sorted.
  nlohmann::json to_json() const {
    require_trained();
    nlohmann::json j;
    j["format"] = "editshap.ngram";
    j["version"] = kFormatVersion;
    j["order"] = order_;
    j["alpha"] = alpha_;
    std::vector<std::string> words(vocab_.begin() + 3, vocab_.end());
    j["vocab"] = words;
    std::vector<std::pair<std::vector<std::string>, std::uint64_t>> grams;
    for (const auto& [key, count] : ngrams_) {
      std::vector<std::string> toks;
      for (std::uint32_t id : unpack(key)) toks.push_back(vocab_[id]);
      grams.emplace_back(std::move(toks), count);
    }
    std::sort(grams.begin(), grams.end());
    j["ngrams"] = nlohmann::json::array();
    for (auto& [toks, count] : grams) j["ngrams"].push_back({toks, count});
    return j;
  }

  static NGramLM from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "editshap.ngram") throw Error("not an editshap n-gram model");
    if (j.value("version", 0) != kFormatVersion) {
      throw Error("unsupported n-gram model version " + std::to_string(j.value("version", 0)));
    }
    NGramLM lm;
    lm.order_ = j.at("order").get<int>();
    lm.alpha_ = j.at("alpha").get<double>();
    if (lm.order_ < 2 || lm.order_ > 3 || !(lm.alpha_ > 0.0)) {
      throw Error("invalid n-gram model parameters");
    }
    lm.trained_ = true;
    lm.intern(std::string(kBos));
    lm.intern(std::string(kEos));
    lm.intern(std::string(kUnk));
    for (const auto& w : j.at("vocab")) lm.intern(w.get<std::string>());
    for (const auto& entry : j.at("ngrams")) {
      const auto toks = entry.at(0).get<std::vector<std::string>>();
      if (toks.size() != static_cast<std::size_t>(lm.order_)) {
        throw Error("n-gram of wrong order in model file");
      }
      std::vector<std::uint32_t> ids;
      for (const auto& t : toks) {
        auto it = lm.ids_.find(t);
        if (it == lm.ids_.end()) throw Error("n-gram token '" + t + "' not in vocabulary");
        ids.push_back(it->second);
      }
      lm.add_count(ids, entry.at(1).get<std::uint64_t>());
    }
    return lm;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << to_json().dump() << '\n';
  }

  static NGramLM load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    return from_json(nlohmann::json::parse(in));
  }

 private:
  void require_trained() const {
    if (!trained_) throw UntrainedModelError("n-gram model has not been trained");
  }

  std::uint32_t intern(const std::string& w) {
    auto [it, inserted] = ids_.try_emplace(w, static_cast<std::uint32_t>(vocab_.size()));
    if (inserted) vocab_.push_back(w);
    return it->second;
  }

  std::uint32_t id_of(const std::string& w) const {
    auto it = ids_.find(w);
    return it == ids_.end() ? 2u : it->second;
  }

  std::vector<std::uint32_t> padded_ids(const Sentence& s) const {
    std::vector<std::uint32_t> ids(static_cast<std::size_t>(order_ - 1), 0u);
    for (const auto& t : s.tokens()) ids.push_back(id_of(t));
    ids.push_back(1u);
    return ids;
  }

  static std::string pack(std::span<const std::uint32_t> ids) {
    return std::string(reinterpret_cast<const char*>(ids.data()),
                       ids.size() * sizeof(std::uint32_t));
  }
  static std::vector<std::uint32_t> unpack(const std::string& key) {
    std::vector<std::uint32_t> ids(key.size() / sizeof(std::uint32_t));
    std::memcpy(ids.data(), key.data(), key.size());
    return ids;
  }

  void add_count(std::span<const std::uint32_t> gram, std::uint64_t c) {
    ngrams_[pack(gram)] += c;
    contexts_[pack(gram.first(gram.size() - 1))] += c;
  }

  static double lookup(const std::unordered_map<std::string, std::uint64_t>& table,
                       std::span<const std::uint32_t> key) {
    auto it = table.find(pack(key));
    return it == table.end() ? 0.0 : static_cast<double>(it->second);
  }

  int order_ = 0;
  double alpha_ = 0.1;
  bool trained_ = false;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::unordered_map<std::string, std::uint64_t> ngrams_;
  std::unordered_map<std::string, std::uint64_t> contexts_;
};

// Quality-only metric: ignores the source.
class NGramScorer final : public Scorer {
 public:
  explicit NGramScorer(std::shared_ptr<const NGramLM> model) : model_(std::move(model)) {
    if (!model_ || !model_->trained()) {
      throw UntrainedModelError("n-gram scorer needs a trained model");
    }
  }

  double score(const Sentence&, const Sentence& hypothesis) const override {
    return model_->score(hypothesis);
  }
  std::string name() const override { return "ngram_lm"; }

  const NGramLM& model() const { return *model_; }

 private:
  std::shared_ptr<const NGramLM> model_;
};

}  // namespace editshap

// Copyright 2026 The wop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wop/explain.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "wop/error.h"
#include "wop/random.h"
#include "wop/text.h"

namespace wop {

namespace {

std::string MaskKey(const Mask& m) {
  std::string key(m.size(), '0');
  for (size_t i = 0; i < m.size(); ++i) key[i] = m[i] ? '1' : '0';
  return key;
}

bool AnySet(const Mask& m) {
  return std::any_of(m.begin(), m.end(), [](bool b) { return b; });
}

// Evaluates f over distinct masks in batches. The empty rendering is never
// sent to the classifier; it scores as the uninformed baseline.
class MaskOracle {
 public:
  MaskOracle(Classifier& clf, const TaskSpec& spec, const Example& ex,
             size_t field, const TokenSentence& ts, size_t batch_size)
      : clf_(clf), spec_(spec), ex_(ex), field_(field), ts_(ts),
        batch_size_(std::max<size_t>(batch_size, 1)) {
    if (spec.is_regression()) {
      baseline_ = 0.5 * (spec.label_domain.lo + spec.label_domain.hi);
    } else {
      baseline_ = 1.0 / static_cast<double>(spec.label_domain.labels.size());
    }
  }

  // Queries the full text and fixes the label being explained.
  void Anchor() {
    const auto preds = Predict(clf_, spec_, std::span<const Example>(&ex_, 1));
    predicted_ = preds[0].label;
    cache_[MaskKey(Mask(ts_.tokens.size(), true))] = Value(preds[0]);
  }

  const Label& predicted() const { return predicted_; }

  void Require(const std::vector<Mask>& masks) {
    std::vector<std::string> keys;
    std::vector<Example> batch;
    auto flush = [&] {
      if (batch.empty()) return;
      const auto preds = Predict(clf_, spec_, batch);
      for (size_t i = 0; i < preds.size(); ++i) cache_[keys[i]] = Value(preds[i]);
      keys.clear();
      batch.clear();
    };
    for (const auto& m : masks) {
      std::string key = MaskKey(m);
      if (cache_.count(key)) continue;
      if (!AnySet(m)) {
        cache_[key] = baseline_;
        continue;
      }
      Example q = ex_;
      q.id = ex_.id + "#" + key;
      q.fields[field_] = RenderMasked(ts_, m);
      cache_[key] = 0.0;  // placeholder so duplicates are sent once
      keys.push_back(std::move(key));
      batch.push_back(std::move(q));
      if (batch.size() == batch_size_) flush();
    }
    flush();
  }

  double operator()(const Mask& m) const { return cache_.at(MaskKey(m)); }

 private:
  double Value(const PredictionRecord& pred) const {
    if (spec_.is_regression()) return std::get<double>(pred.label);
    return ProbabilityOf(pred, std::get<std::string>(predicted_));
  }

  Classifier& clf_;
  const TaskSpec& spec_;
  const Example& ex_;
  size_t field_;
  const TokenSentence& ts_;
  size_t batch_size_;
  double baseline_ = 0.0;
  Label predicted_;
  std::map<std::string, double> cache_;
};

double Clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

std::string AttributionModeName(AttributionMode mode) {
  return mode == AttributionMode::kLime ? "lime" : "occlusion";
}

AttributionMode ParseAttributionMode(const std::string& name) {
  if (name == "lime") return AttributionMode::kLime;
  if (name == "occlusion") return AttributionMode::kOcclusion;
  throw UsageError("unknown attribution mode '" + name + "'");
}

Json AttributionMap::ToJson() const {
  Json j;
  j["id"] = example_id;
  j["field"] = field;
  j["tokens"] = tokens;
  j["scores"] = token_scores;
  j["predicted_label"] = predicted_label;
  j["n_samples"] = n_samples;
  j["mode"] = AttributionModeName(mode);
  return j;
}

AttributionMap AttributionMap::FromJson(const Json& j) {
  AttributionMap m;
  m.example_id = j.at("id").get<std::string>();
  m.field = j.value("field", size_t{0});
  m.tokens = j.at("tokens").get<std::vector<std::string>>();
  m.token_scores = j.at("scores").get<std::vector<double>>();
  m.predicted_label = j.value("predicted_label", std::string());
  m.n_samples = j.value("n_samples", size_t{0});
  m.mode = ParseAttributionMode(j.value("mode", std::string("lime")));
  if (m.tokens.size() != m.token_scores.size()) {
    throw DataError("attribution map '" + m.example_id +
                    "': tokens and scores differ in length");
  }
  return m;
}

std::vector<Mask> SampleMasks(size_t num_tokens, const AttributionConfig& cfg) {
  if (num_tokens == 0) throw UsageError("cannot attribute an empty field");
  std::vector<Mask> masks;
  if (num_tokens <= cfg.exhaustive_max_tokens && num_tokens < 63) {
    const uint64_t total = uint64_t{1} << num_tokens;
    masks.reserve(total - 1);
    // All-ones first, then the rest in descending bit order.
    for (uint64_t bits = total - 1; bits >= 1; --bits) {
      Mask m(num_tokens);
      for (size_t i = 0; i < num_tokens; ++i) m[i] = (bits >> i) & 1u;
      masks.push_back(std::move(m));
    }
    return masks;
  }
  if (cfg.n_samples < 2) throw UsageError("need at least 2 samples");
  Rng rng(cfg.seed);
  masks.emplace_back(num_tokens, true);
  while (masks.size() < cfg.n_samples) {
    Mask m(num_tokens);
    for (size_t i = 0; i < num_tokens; ++i) m[i] = rng.Uniform(2) == 1;
    if (AnySet(m)) masks.push_back(std::move(m));
  }
  return masks;
}

double MaskDistance(const Mask& mask) {
  const double on = static_cast<double>(std::count(mask.begin(), mask.end(), true));
  if (on == 0.0) throw UsageError("distance of the empty mask is undefined");
  // cos(m, 1) = |m| / sqrt(|m| * T)
  const double cos = std::sqrt(on / static_cast<double>(mask.size()));
  return 100.0 * (1.0 - cos);
}

double KernelWeight(double distance, double width) {
  return std::exp(-(distance * distance) / (width * width));
}

Eigen::VectorXd FitWeightedLeastSquares(const std::vector<Mask>& masks,
                                        const std::vector<double>& values,
                                        const std::vector<double>& weights) {
  if (masks.empty() || masks.size() != values.size() ||
      masks.size() != weights.size()) {
    throw UsageError("surrogate fit needs equal, non-empty inputs");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(masks.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(masks[0].size()) + 1;
  Eigen::MatrixXd x(rows, cols);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double sw = std::sqrt(weights[r]);
    x(r, 0) = sw;
    for (Eigen::Index c = 1; c < cols; ++c) x(r, c) = masks[r][c - 1] ? sw : 0.0;
    y(r) = sw * values[r];
  }
  return x.colPivHouseholderQr().solve(y);
}

std::string RenderMasked(const TokenSentence& ts, const Mask& mask) {
  std::vector<std::string> kept;
  for (size_t i = 0; i < ts.tokens.size(); ++i) {
    if (mask[i]) kept.push_back(ts.tokens[i]);
  }
  return Join(kept, " ") + ts.terminal_punct;
}

AttributionMap Attribute(Classifier& clf, const TaskSpec& spec,
                         const Example& ex, size_t field,
                         const AttributionConfig& cfg) {
  if (field >= ex.fields.size()) {
    throw UsageError("field index " + std::to_string(field) + " out of range");
  }
  if (SplitWhitespace(ex.fields[field]).empty()) {
    throw UsageError("cannot attribute an empty field in example '" + ex.id + "'");
  }
  const TokenSentence ts = Tokenize(ex.fields[field]);
  const size_t t = ts.tokens.size();
  const std::vector<Mask> masks = SampleMasks(t, cfg);

  MaskOracle f(clf, spec, ex, field, ts, cfg.batch_size);
  f.Anchor();

  AttributionMap out;
  out.example_id = ex.id;
  out.field = field;
  out.tokens = ts.tokens;
  out.predicted_label = LabelToString(f.predicted());
  out.n_samples = masks.size();
  out.mode = cfg.mode;
  out.token_scores.assign(t, 0.0);

  if (cfg.mode == AttributionMode::kLime) {
    f.Require(masks);
    std::vector<double> values;
    std::vector<double> weights;
    values.reserve(masks.size());
    weights.reserve(masks.size());
    for (const auto& m : masks) {
      values.push_back(f(m));
      weights.push_back(KernelWeight(MaskDistance(m), cfg.kernel_width));
    }
    const Eigen::VectorXd beta = FitWeightedLeastSquares(masks, values, weights);
    for (size_t i = 0; i < t; ++i) out.token_scores[i] = Clamp1(beta(i + 1));
    return out;
  }

  // Occlusion: for each mask containing i, the drop from removing i.
  std::vector<Mask> queries = masks;
  for (const auto& m : masks) {
    for (size_t i = 0; i < t; ++i) {
      if (!m[i]) continue;
      Mask without = m;
      without[i] = false;
      queries.push_back(std::move(without));
    }
  }
  f.Require(queries);
  std::vector<double> sum(t, 0.0);
  std::vector<size_t> count(t, 0);
  for (const auto& m : masks) {
    const double full = f(m);
    for (size_t i = 0; i < t; ++i) {
      if (!m[i]) continue;
      Mask without = m;
      without[i] = false;
      sum[i] += full - f(without);
      ++count[i];
    }
  }
  for (size_t i = 0; i < t; ++i) {
    if (count[i] > 0) {
      out.token_scores[i] = Clamp1(sum[i] / static_cast<double>(count[i]));
    }
  }
  return out;
}

AttributionMap Realign(const AttributionMap& shuffled,
                       const ShuffleResult& perm) {
  const std::vector<size_t> src = perm.SourcePositions();
  if (shuffled.token_scores.size() != src.size()) {
    throw DataError("length mismatch: map has " +
                    std::to_string(shuffled.token_scores.size()) +
                    " scores, shuffle has " + std::to_string(src.size()) +
                    " tokens");
  }
  AttributionMap out = shuffled;
  for (size_t pos = 0; pos < src.size(); ++pos) {
    out.token_scores[src[pos]] = shuffled.token_scores[pos];
    if (shuffled.tokens.size() == src.size()) {
      out.tokens[src[pos]] = shuffled.tokens[pos];
    }
  }
  return out;
}

double HeatmapSimilarity(const AttributionMap& a, const AttributionMap& b,
                         bool use_abs) {
  if (a.token_scores.size() != b.token_scores.size()) {
    throw DataError("length mismatch between heatmaps of '" + a.example_id + "'");
  }
  const auto n = static_cast<Eigen::Index>(a.token_scores.size());
  Eigen::Map<const Eigen::VectorXd> va(a.token_scores.data(), n);
  Eigen::Map<const Eigen::VectorXd> vb(b.token_scores.data(), n);
  const Eigen::VectorXd x = use_abs ? Eigen::VectorXd(va.cwiseAbs()) : Eigen::VectorXd(va);
  const Eigen::VectorXd y = use_abs ? Eigen::VectorXd(vb.cwiseAbs()) : Eigen::VectorXd(vb);
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) throw DataError("degenerate heatmap");
  return std::clamp(x.dot(y) / (nx * ny), -1.0, 1.0);
}

namespace {

double MeanAbs(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s / static_cast<double>(v.size());
}

}  // namespace

double ImportanceDelta(const std::vector<AttributionMap>& before,
                       const std::vector<AttributionMap>& after) {
  if (before.size() != after.size()) {
    throw DataError("unpaired ids: " + std::to_string(before.size()) +
                    " vs " + std::to_string(after.size()) + " maps");
  }
  if (before.empty()) throw DataError("importance delta of an empty set");
  std::map<std::string, const AttributionMap*> by_id;
  for (const auto& m : after) {
    if (!by_id.emplace(m.example_id, &m).second) {
      throw DataError("duplicate id '" + m.example_id + "'");
    }
  }
  double total = 0.0;
  for (const auto& b : before) {
    auto it = by_id.find(b.example_id);
    if (it == by_id.end()) throw DataError("unpaired id '" + b.example_id + "'");
    total += MeanAbs(it->second->token_scores) - MeanAbs(b.token_scores);
  }
  return total / static_cast<double>(before.size());
}

size_t TopTokenIndex(const AttributionMap& map) {
  if (map.token_scores.empty()) throw DataError("empty attribution map");
  size_t best = 0;
  for (size_t i = 1; i < map.token_scores.size(); ++i) {
    if (std::abs(map.token_scores[i]) > std::abs(map.token_scores[best])) best = i;
  }
  return best;
}

namespace {

std::optional<double> Ratio(size_t num, size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

Json RateJson(size_t num, size_t den) {
  Json j;
  j["num"] = num;
  j["den"] = den;
  const auto r = Ratio(num, den);
  j["rate"] = r ? Json(*r) : Json(nullptr);
  return j;
}

}  // namespace

std::optional<double> LexiconAnalysis::found_rate() const {
  return Ratio(found, examples);
}
std::optional<double> LexiconAnalysis::p_pos_given_pos() const {
  return Ratio(pos_given_pos_num, pos_given_pos_den);
}
std::optional<double> LexiconAnalysis::p_neg_given_neg() const {
  return Ratio(neg_given_neg_num, neg_given_neg_den);
}

Json LexiconAnalysis::ToJson() const {
  Json j;
  j["examples"] = examples;
  j["found"] = RateJson(found, examples);
  j["pos_given_pos"] = RateJson(pos_given_pos_num, pos_given_pos_den);
  j["neg_given_neg"] = RateJson(neg_given_neg_num, neg_given_neg_den);
  return j;
}

LexiconAnalysis AnalyzeTopWords(const std::vector<AttributionMap>& maps,
                                const Dataset& ds, const TaskSpec& spec,
                                const PolarityLexicon& lex) {
  if (spec.is_regression()) {
    throw UsageError("lexicon analysis needs a binary task");
  }
  std::map<std::string, const Example*> gold;
  for (const auto& ex : ds.examples) gold[ex.id] = &ex;
  LexiconAnalysis out;
  for (const auto& m : maps) {
    auto it = gold.find(m.example_id);
    if (it == gold.end()) throw DataError("no example with id '" + m.example_id + "'");
    if (m.tokens.size() != m.token_scores.size()) {
      throw DataError("attribution map '" + m.example_id + "' has no tokens");
    }
    ++out.examples;
    const auto polarity = lex.Lookup(m.tokens[TopTokenIndex(m)]);
    if (!polarity || *polarity == 0.0) continue;
    ++out.found;
    const bool gold_pos =
        LabelToString(it->second->gold_label) == spec.positive_label();
    if (*polarity > 0.0) {
      ++out.pos_given_pos_den;
      out.pos_given_pos_num += gold_pos ? 1 : 0;
    } else {
      ++out.neg_given_neg_den;
      out.neg_given_neg_num += gold_pos ? 0 : 1;
    }
  }
  return out;
}

std::vector<AttributionMap> ReadAttributionMaps(std::istream& in) {
  std::vector<AttributionMap> maps;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      maps.push_back(AttributionMap::FromJson(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return maps;
}

std::vector<AttributionMap> LoadAttributionMaps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return ReadAttributionMaps(in);
}

void WriteAttributionMaps(std::ostream& out,
                          const std::vector<AttributionMap>& maps) {
  for (const auto& m : maps) out << m.ToJson().dump() << '\n';
}

}  // namespace wop

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

#include "wop/gateway.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "wop/error.h"
#include "wop/protocol.h"
#include "wop/text.h"

namespace wop {

void AblationPlan::Validate(int layers, int heads_per_layer) const {
  std::set<std::pair<int, int>> seen;
  for (const auto& [l, h] : heads) {
    if (!seen.insert({l, h}).second) {
      throw UsageError("duplicate head (" + std::to_string(l) + ", " +
                       std::to_string(h) + ") in ablation plan");
    }
    const bool out_of_range =
        l < 0 || h < 0 || (layers > 0 && l >= layers) ||
        (heads_per_layer > 0 && h >= heads_per_layer);
    if (out_of_range) {
      throw UsageError("head (" + std::to_string(l) + ", " + std::to_string(h) +
                       ") out of range");
    }
  }
}

AttentionRecord Classifier::AttendOne(const TaskSpec&, const Example&) {
  throw GatewayError(GatewayError::Kind::kNoAttention, "no attention support");
}

std::vector<PredictionRecord> Predict(Classifier& clf, const TaskSpec& spec,
                                      std::span<const Example> batch,
                                      const AblationPlan* ablation) {
  if (batch.empty()) throw UsageError("predict needs a non-empty batch");
  if (ablation != nullptr) ablation->Validate();
  auto records = clf.PredictBatch(spec, batch, ablation);
  if (records.size() != batch.size()) {
    throw GatewayError(GatewayError::Kind::kIdMismatch,
                       "id mismatch: sent " + std::to_string(batch.size()) +
                           " examples, got " + std::to_string(records.size()) +
                           " predictions");
  }
  for (size_t i = 0; i < batch.size(); ++i) {
    if (records[i].example_id != batch[i].id) {
      throw GatewayError(GatewayError::Kind::kIdMismatch,
                         "id mismatch: expected '" + batch[i].id + "', got '" +
                             records[i].example_id + "'");
    }
  }
  return records;
}

std::vector<PredictionRecord> PredictDataset(Classifier& clf,
                                             const TaskSpec& spec,
                                             const Dataset& ds,
                                             size_t batch_size,
                                             const AblationPlan* ablation) {
  std::vector<PredictionRecord> out;
  out.reserve(ds.size());
  batch_size = std::max<size_t>(1, batch_size);
  std::span<const Example> all(ds.examples);
  for (size_t at = 0; at < all.size(); at += batch_size) {
    auto part = Predict(clf, spec,
                        all.subspan(at, std::min(batch_size, all.size() - at)),
                        ablation);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

AttentionRecord Attend(Classifier& clf, const TaskSpec& spec,
                       const Example& ex) {
  if (!clf.supports_attention()) {
    throw GatewayError(GatewayError::Kind::kNoAttention, "no attention support");
  }
  AttentionRecord rec = clf.AttendOne(spec, ex);
  if (rec.example_id != ex.id) {
    throw GatewayError(GatewayError::Kind::kIdMismatch,
                       "id mismatch: expected '" + ex.id + "', got '" +
                           rec.example_id + "'");
  }
  rec.Validate();
  return rec;
}

bool IsCorrect(const PredictionRecord& pred, const Example& ex) {
  return LabelsEqual(pred.label, ex.gold_label);
}

double ProbabilityOf(const PredictionRecord& pred, const std::string& label) {
  if (!pred.confidence) {
    throw GatewayError(GatewayError::Kind::kMalformedResponse,
                       "prediction for '" + pred.example_id +
                           "' has no confidence");
  }
  const auto* predicted = std::get_if<std::string>(&pred.label);
  if (predicted != nullptr && *predicted == label) return *pred.confidence;
  return 1.0 - *pred.confidence;
}

double Logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

void RequireText(const Example& ex) {
  for (const auto& f : ex.fields) {
    if (Trim(f).empty()) {
      throw GatewayError(GatewayError::Kind::kEmptyInput,
                         "empty input in example '" + ex.id + "'");
    }
  }
}

void WarnAblation(const AblationPlan* ablation, const std::string& name,
                  bool& warned) {
  if (ablation != nullptr && !ablation->empty() && !warned) {
    spdlog::warn("{} ignores head ablation", name);
    warned = true;
  }
}

void RequireBinary(const TaskSpec& spec, const std::string& name) {
  if (spec.is_regression()) {
    throw UsageError(name + " only serves binary tasks");
  }
}

PredictionRecord BinaryRecord(const TaskSpec& spec, const Example& ex,
                              bool positive, double confidence) {
  return PredictionRecord{
      ex.id, positive ? spec.positive_label() : spec.negative_label(),
      confidence};
}

std::set<std::string> NormalizedTokenSet(std::string_view text) {
  std::set<std::string> out;
  for (const auto& t : SplitWhitespace(text)) {
    std::string w = NormalizeWord(t);
    if (!w.empty()) out.insert(std::move(w));
  }
  return out;
}

}  // namespace

LexiconClassifier::LexiconClassifier(PolarityLexicon lexicon)
    : lexicon_(std::move(lexicon)) {
  if (lexicon_.empty()) throw UsageError("lexicon classifier needs a lexicon");
}

double LexiconClassifier::Score(const Example& ex) const {
  double score = 0.0;
  for (const auto& field : ex.fields) {
    for (const auto& token : SplitWhitespace(field)) {
      score += lexicon_.Lookup(token).value_or(0.0);
    }
  }
  return score;
}

std::vector<PredictionRecord> LexiconClassifier::PredictBatch(
    const TaskSpec& spec, std::span<const Example> batch,
    const AblationPlan* ablation) {
  RequireBinary(spec, name());
  WarnAblation(ablation, name(), warned_);
  std::vector<PredictionRecord> out;
  for (const auto& ex : batch) {
    RequireText(ex);
    const double score = Score(ex);
    out.push_back(BinaryRecord(spec, ex, score > 0.0, Logistic(std::abs(score))));
  }
  return out;
}

OverlapClassifier::OverlapClassifier(double threshold) : threshold_(threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw UsageError("overlap threshold must be in (0, 1)");
  }
}

double OverlapClassifier::Jaccard(std::string_view a, std::string_view b) {
  const auto sa = NormalizedTokenSet(a);
  const auto sb = NormalizedTokenSet(b);
  if (sa.empty() && sb.empty()) return 1.0;
  size_t common = 0;
  for (const auto& w : sa) common += sb.count(w);
  return static_cast<double>(common) /
         static_cast<double>(sa.size() + sb.size() - common);
}

std::vector<PredictionRecord> OverlapClassifier::PredictBatch(
    const TaskSpec& spec, std::span<const Example> batch,
    const AblationPlan* ablation) {
  if (spec.field_names.size() != 2) {
    throw UsageError(name() + " needs a sequence-pair task");
  }
  WarnAblation(ablation, name(), warned_);
  std::vector<PredictionRecord> out;
  for (const auto& ex : batch) {
    RequireText(ex);
    const double j = Jaccard(ex.fields[0], ex.fields[1]);
    if (spec.is_regression()) {
      const auto& d = spec.label_domain;
      out.push_back(PredictionRecord{ex.id, d.lo + (d.hi - d.lo) * j,
                                     std::nullopt});
    } else {
      out.push_back(BinaryRecord(spec, ex, j >= threshold_,
                                 Logistic(std::abs(j - threshold_))));
    }
  }
  return out;
}

FirstTokenClassifier::FirstTokenClassifier(PolarityLexicon lexicon)
    : lexicon_(std::move(lexicon)) {
  if (lexicon_.empty()) throw UsageError("first-token classifier needs a lexicon");
}

bool FirstTokenClassifier::IsPositiveWord(std::string_view token) const {
  return lexicon_.Lookup(token).value_or(0.0) > 0.0;
}

std::vector<PredictionRecord> FirstTokenClassifier::PredictBatch(
    const TaskSpec& spec, std::span<const Example> batch,
    const AblationPlan* ablation) {
  RequireBinary(spec, name());
  WarnAblation(ablation, name(), warned_);
  std::vector<PredictionRecord> out;
  for (const auto& ex : batch) {
    RequireText(ex);
    const auto tokens = SplitWhitespace(ex.target(spec));
    const double polarity = lexicon_.Lookup(tokens.front()).value_or(0.0);
    out.push_back(BinaryRecord(spec, ex, polarity > 0.0,
                               Logistic(std::abs(polarity))));
  }
  return out;
}

TableClassifier::TableClassifier(std::vector<PredictionRecord> records) {
  for (auto& r : records) {
    const std::string id = r.example_id;
    by_id_.emplace(id, std::move(r));
  }
}

std::vector<PredictionRecord> TableClassifier::PredictBatch(
    const TaskSpec&, std::span<const Example> batch,
    const AblationPlan* ablation) {
  WarnAblation(ablation, name(), warned_);
  std::vector<PredictionRecord> out;
  for (const auto& ex : batch) {
    auto it = by_id_.find(ex.id);
    if (it == by_id_.end()) {
      throw GatewayError(GatewayError::Kind::kRemote,
                         "no stored prediction for '" + ex.id + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<PredictionRecord> ReadPredictions(std::istream& in, const std::string& source) {
  std::vector<PredictionRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      const Json j = Json::parse(line);
      PredictionRecord r;
      r.example_id = j.at("id").get<std::string>();
      const auto& label = j.at("label");
      if (label.is_string()) {
        r.label = label.get<std::string>();
      } else {
        r.label = label.get<double>();
      }
      if (auto c = j.find("confidence"); c != j.end() && !c->is_null()) {
        r.confidence = c->get<double>();
      }
      out.push_back(std::move(r));
    } catch (const Json::exception& e) {
      throw DataError(source + ": line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return out;
}


std::vector<PredictionRecord> LoadPredictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return ReadPredictions(in, path);
}

Json PredictionToJson(const PredictionRecord& pred) {
  Json j;
  j["id"] = pred.example_id;
  if (const auto* s = std::get_if<std::string>(&pred.label)) {
    j["label"] = *s;
  } else {
    j["label"] = std::get<double>(pred.label);
  }
  if (pred.confidence) j["confidence"] = *pred.confidence;
  return j;
}

void WritePredictions(std::ostream& out,
                      const std::vector<PredictionRecord>& preds) {
  for (const auto& p : preds) out << PredictionToJson(p).dump() << '\n';
}

std::unique_ptr<Classifier> MakeClassifier(const std::string& uri) {
  auto rest_after = [&](std::string_view prefix) -> std::optional<std::string> {
    if (uri == prefix) return std::string();
    if (uri.starts_with(std::string(prefix) + ":")) {
      return uri.substr(prefix.size() + 1);
    }
    return std::nullopt;
  };
  if (auto arg = rest_after("builtin:lexicon")) {
    return std::make_unique<LexiconClassifier>(
        arg->empty() ? DefaultLexicon() : LoadLexicon(*arg));
  }
  if (auto arg = rest_after("builtin:first-token")) {
    return std::make_unique<FirstTokenClassifier>(
        arg->empty() ? DefaultLexicon() : LoadLexicon(*arg));
  }
  if (auto arg = rest_after("builtin:overlap")) {
    double threshold = 0.5;
    if (!arg->empty()) {
      try {
        threshold = std::stod(*arg);
      } catch (const std::exception&) {
        throw UsageError("bad overlap threshold '" + *arg + "'");
      }
    }
    return std::make_unique<OverlapClassifier>(threshold);
  }
  if (auto arg = rest_after("builtin:table"); arg && !arg->empty()) {
    return std::make_unique<TableClassifier>(LoadPredictions(*arg));
  }
  if (uri.starts_with("exec:") && uri.size() > 5) {
    return std::make_unique<protocol::RemoteClassifier>(
        protocol::MakeExecTransport(uri.substr(5)), uri);
  }
  if (uri.starts_with("tcp:")) {
    const std::string hostport = uri.substr(4);
    const size_t colon = hostport.rfind(':');
    if (colon == std::string::npos || colon == 0) {
      throw UsageError("tcp gateway needs tcp:<host>:<port>");
    }
    int port = 0;
    try {
      port = std::stoi(hostport.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("bad port in '" + uri + "'");
    }
    return std::make_unique<protocol::RemoteClassifier>(
        protocol::MakeTcpTransport(hostport.substr(0, colon), port), uri);
  }
  throw UsageError("unknown gateway '" + uri + "'");
}

std::string GatewayUriFromEnv(const std::string& fallback) {
  const char* v = std::getenv("WOP_GATEWAY");
  return (v != nullptr && *v != '\0') ? std::string(v) : fallback;
}

}  // namespace wop

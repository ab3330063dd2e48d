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

// The classifier boundary. Everything that needs model outputs goes through
// a Classifier: either one of the pure built-ins below or a remote model
// speaking the JSON-lines protocol (see protocol.h).

#ifndef WOP_GATEWAY_H_
#define WOP_GATEWAY_H_

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wop/attention.h"
#include "wop/corpus.h"
#include "wop/json.h"
#include "wop/lexicon.h"

namespace wop {

struct PredictionRecord {
  std::string example_id;
  Label label;
  // Probability of the predicted label; absent for regression.
  std::optional<double> confidence;

  bool operator==(const PredictionRecord&) const = default;
};

// Heads whose attention output is zeroed during the forward pass.
struct AblationPlan {
  std::vector<std::pair<int, int>> heads;  // (layer, head)

  bool empty() const { return heads.empty(); }
  // Pairs must be unique; when layers/heads > 0 they must also be in range.
  void Validate(int layers = 0, int heads_per_layer = 0) const;
};

class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string name() const = 0;

  // One record per example, in order. Callers go through Predict() below,
  // which checks the contract.
  virtual std::vector<PredictionRecord> PredictBatch(
      const TaskSpec& spec, std::span<const Example> batch,
      const AblationPlan* ablation) = 0;

  virtual bool supports_attention() const { return false; }
  virtual AttentionRecord AttendOne(const TaskSpec& spec, const Example& ex);
};

// Checks: batch non-empty, one record per example, ids in order.
std::vector<PredictionRecord> Predict(Classifier& clf, const TaskSpec& spec,
                                      std::span<const Example> batch,
                                      const AblationPlan* ablation = nullptr);

// Predict over a whole dataset in batches of batch_size.
std::vector<PredictionRecord> PredictDataset(
    Classifier& clf, const TaskSpec& spec, const Dataset& ds,
    size_t batch_size = 64, const AblationPlan* ablation = nullptr);

AttentionRecord Attend(Classifier& clf, const TaskSpec& spec,
                       const Example& ex);

// Whether the prediction matches the gold label exactly.
bool IsCorrect(const PredictionRecord& pred, const Example& ex);

// Probability the record assigns to `label`, derived from (label,
// confidence) for binary tasks.
double ProbabilityOf(const PredictionRecord& pred, const std::string& label);

double Logistic(double x);

// score = sum of token polarities over all fields; positive iff score > 0;
// confidence = logistic(|score|). Invariant to any reordering of tokens.
class LexiconClassifier : public Classifier {
 public:
  explicit LexiconClassifier(PolarityLexicon lexicon);
  std::string name() const override { return "builtin:lexicon"; }
  std::vector<PredictionRecord> PredictBatch(
      const TaskSpec& spec, std::span<const Example> batch,
      const AblationPlan* ablation) override;

  double Score(const Example& ex) const;

 private:
  PolarityLexicon lexicon_;
  bool warned_ = false;
};

// Jaccard similarity of the normalized token sets of the two fields;
// positive iff >= threshold, confidence = logistic(|jaccard - threshold|).
class OverlapClassifier : public Classifier {
 public:
  explicit OverlapClassifier(double threshold);
  std::string name() const override { return "builtin:overlap"; }
  std::vector<PredictionRecord> PredictBatch(
      const TaskSpec& spec, std::span<const Example> batch,
      const AblationPlan* ablation) override;

  static double Jaccard(std::string_view a, std::string_view b);

 private:
  double threshold_;
  bool warned_ = false;
};

// Position-sensitive counterpart of LexiconClassifier: positive iff the first
// token of the target field has polarity > 0.
class FirstTokenClassifier : public Classifier {
 public:
  explicit FirstTokenClassifier(PolarityLexicon lexicon);
  std::string name() const override { return "builtin:first-token"; }
  std::vector<PredictionRecord> PredictBatch(
      const TaskSpec& spec, std::span<const Example> batch,
      const AblationPlan* ablation) override;

  bool IsPositiveWord(std::string_view token) const;

 private:
  PolarityLexicon lexicon_;
  bool warned_ = false;
};

// Replays stored predictions by example id.
class TableClassifier : public Classifier {
 public:
  explicit TableClassifier(std::vector<PredictionRecord> records);
  std::string name() const override { return "builtin:table"; }
  std::vector<PredictionRecord> PredictBatch(
      const TaskSpec& spec, std::span<const Example> batch,
      const AblationPlan* ablation) override;

 private:
  std::map<std::string, PredictionRecord> by_id_;
  bool warned_ = false;
};

// Gateway URIs: "builtin:lexicon[:<lexicon file>]",
// "builtin:overlap[:<threshold>]", "builtin:first-token[:<lexicon file>]",
// "builtin:table:<predictions.jsonl>", "exec:<command>", "tcp:<host>:<port>".
// Prediction tables: JSONL {"id", "label", "confidence"?} per line.
std::vector<PredictionRecord> ReadPredictions(std::istream& in,
                                              const std::string& source);
std::vector<PredictionRecord> LoadPredictions(const std::string& path);
Json PredictionToJson(const PredictionRecord& pred);
void WritePredictions(std::ostream& out,
                      const std::vector<PredictionRecord>& preds);

std::unique_ptr<Classifier> MakeClassifier(const std::string& uri);

// Reads WOP_GATEWAY; falls back to `fallback` when unset.
std::string GatewayUriFromEnv(const std::string& fallback = "builtin:lexicon");

}  // namespace wop

#endif  // WOP_GATEWAY_H_

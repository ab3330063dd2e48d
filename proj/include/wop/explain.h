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

// Token attribution against a black-box classifier.
//
// Masks are over the whitespace tokens of one field. A masked-out token is
// deleted from the rendered text, terminal punctuation always stays. The
// explained quantity f(mask) is the probability the classifier assigns to the
// label it predicts for the unmasked text (the raw score for regression).

#ifndef WOP_EXPLAIN_H_
#define WOP_EXPLAIN_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wop/corpus.h"
#include "wop/gateway.h"
#include "wop/json.h"
#include "wop/lexicon.h"
#include "wop/perturb.h"

namespace wop {

enum class AttributionMode { kLime, kOcclusion };

std::string AttributionModeName(AttributionMode mode);
AttributionMode ParseAttributionMode(const std::string& name);

struct AttributionConfig {
  AttributionMode mode = AttributionMode::kLime;
  size_t n_samples = 1000;
  double kernel_width = 25.0;
  uint64_t seed = 0;
  // Enumerate every nonzero mask when the field has at most this many tokens.
  size_t exhaustive_max_tokens = 12;
  size_t batch_size = 256;
};

struct AttributionMap {
  std::string example_id;
  size_t field = 0;
  std::vector<std::string> tokens;
  std::vector<double> token_scores;
  std::string predicted_label;
  size_t n_samples = 0;
  AttributionMode mode = AttributionMode::kLime;

  Json ToJson() const;
  static AttributionMap FromJson(const Json& j);
  bool operator==(const AttributionMap&) const = default;
};

using Mask = std::vector<bool>;

// Masks the explainer queries for a T-token field: all 2^T - 1 nonzero masks
// when T <= cfg.exhaustive_max_tokens, else the all-ones mask followed by
// cfg.n_samples - 1 uniform nonzero masks.
std::vector<Mask> SampleMasks(size_t num_tokens, const AttributionConfig& cfg);

// 100 * (1 - cos(mask, ones)). Undefined for the all-zero mask.
double MaskDistance(const Mask& mask);

// exp(-d^2 / w^2).
double KernelWeight(double distance, double width);

// Weighted least squares with an intercept column. Returns
// [intercept, beta_1 .. beta_T].
Eigen::VectorXd FitWeightedLeastSquares(const std::vector<Mask>& masks,
                                        const std::vector<double>& values,
                                        const std::vector<double>& weights);

// Renders field tokens with the masked-out ones deleted.
std::string RenderMasked(const TokenSentence& ts, const Mask& mask);

// Attributes one field of ex. Throws UsageError on an empty field.
AttributionMap Attribute(Classifier& clf, const TaskSpec& spec,
                         const Example& ex, size_t field,
                         const AttributionConfig& cfg);

// Maps each shuffled-position score back to its original position.
AttributionMap Realign(const AttributionMap& shuffled,
                       const ShuffleResult& perm);

// Cosine of the two score vectors. use_abs compares |scores|.
double HeatmapSimilarity(const AttributionMap& a, const AttributionMap& b,
                         bool use_abs = false);

// Mean over paired ids of mean|after| - mean|before|.
double ImportanceDelta(const std::vector<AttributionMap>& before,
                       const std::vector<AttributionMap>& after);

// Index of the max-|score| token, leftmost on ties.
size_t TopTokenIndex(const AttributionMap& map);

struct LexiconAnalysis {
  size_t examples = 0;
  size_t found = 0;  // top-1 token has a nonzero polarity
  size_t pos_given_pos_num = 0;  // gold positive and top-1 positive
  size_t pos_given_pos_den = 0;  // top-1 positive
  size_t neg_given_neg_num = 0;
  size_t neg_given_neg_den = 0;

  std::optional<double> found_rate() const;
  std::optional<double> p_pos_given_pos() const;
  std::optional<double> p_neg_given_neg() const;

  Json ToJson() const;
};

LexiconAnalysis AnalyzeTopWords(const std::vector<AttributionMap>& maps,
                                const Dataset& ds, const TaskSpec& spec,
                                const PolarityLexicon& lex);

std::vector<AttributionMap> ReadAttributionMaps(std::istream& in);
std::vector<AttributionMap> LoadAttributionMaps(const std::string& path);
void WriteAttributionMaps(std::ostream& out,
                          const std::vector<AttributionMap>& maps);

}  // namespace wop

#endif  // WOP_EXPLAIN_H_

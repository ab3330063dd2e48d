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

// Word-matching head detection over exported self-attention.
//
// Sub-word attention is first collapsed to whitespace words. Each (layer,
// head) matrix then contributes its three strongest cross-segment cells; the
// head whose three word pairs are closest in edit distance wins.

#ifndef WOP_ATTNPROBE_H_
#define WOP_ATTNPROBE_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "wop/attention.h"
#include "wop/corpus.h"
#include "wop/gateway.h"
#include "wop/json.h"

namespace wop {

inline constexpr int kEditBudget = 4;

// Attention over whitespace words, one W x W matrix per (layer, head).
struct WordAttention {
  std::string example_id;
  std::vector<std::string> words;
  std::vector<int> segment_ids;
  int layers = 0;
  int heads = 0;
  std::vector<Eigen::MatrixXd> matrices;  // index l * heads + h

  int num_words() const { return static_cast<int>(words.size()); }
  const Eigen::MatrixXd& Head(int layer, int head) const {
    return matrices[static_cast<size_t>(layer * heads + head)];
  }
};

// Strips sub-word markers ("##", "Ġ", "▁", "</w>") and lowercases ASCII.
std::string NormalizePiece(std::string_view piece);

// Collapses model tokens onto the words of each field. Key pieces of a word
// are summed, query pieces averaged, special tokens dropped. Throws DataError
// naming the first token that does not align.
WordAttention WordLevelAttention(
    const AttentionRecord& rec,
    const std::vector<std::vector<std::string>>& field_words);

// Words of each field split on whitespace, as WordLevelAttention expects.
std::vector<std::vector<std::string>> FieldWords(const Example& ex);

enum class CrossDirection { kBoth, kFirstToSecond, kSecondToFirst };

CrossDirection ParseCrossDirection(const std::string& name);
std::string CrossDirectionName(CrossDirection d);

struct CrossCell {
  int query = 0;
  int key = 0;
  double weight = 0.0;

  bool operator==(const CrossCell&) const = default;
};

// The three heaviest cells whose query and key segments differ, heaviest
// first, lower (query, key) first on ties. Throws DataError when fewer than
// three such cells exist.
std::array<CrossCell, 3> Top3Cross(const Eigen::MatrixXd& matrix,
                                   const std::vector<int>& segment_ids,
                                   CrossDirection direction = CrossDirection::kBoth);

// Edit distance over UTF-8 code points, unit costs.
int Levenshtein(std::string_view a, std::string_view b);

struct WordPair {
  std::string query_word;
  std::string key_word;
  int query = 0;  // word positions
  int key = 0;
  double weight = 0.0;
  int edit = 0;

  bool operator==(const WordPair&) const = default;
};

struct MatchReport {
  std::string example_id;
  int layer = 0;
  int head = 0;
  std::array<WordPair, 3> top3;
  int total_edit = 0;
  bool within_budget = false;

  Json ToJson() const;
  static MatchReport FromJson(const Json& j);
  bool operator==(const MatchReport&) const = default;
};

// Picks the (layer, head) with the smallest summed edit distance over its
// top-3 cross pairs, lowest (layer, head) on ties.
MatchReport SelectMatrix(const WordAttention& wa,
                         CrossDirection direction = CrossDirection::kBoth);
MatchReport SelectMatrix(const AttentionRecord& rec,
                         const std::vector<std::vector<std::string>>& field_words,
                         CrossDirection direction = CrossDirection::kBoth);

// Fraction of a's pairs that can be matched one-to-one to b's, where two
// pairs match when both query words and both key words are within edit
// distance 1. Exact maximum matching, so the score is symmetric.
double OverlapScore(const MatchReport& a, const MatchReport& b);

struct HeadHistogram {
  std::map<std::pair<int, int>, size_t> counts;
  std::map<int, size_t> layer_marginals;
  size_t total = 0;  // within-budget reports counted

  Json ToJson() const;
};

HeadHistogram BuildHeadHistogram(const std::vector<MatchReport>& reports);

enum class AblationStrategy { kTopK, kRandom };

// top_k: the k most frequent heads (ties to lower (layer, head)).
// random: k distinct heads drawn uniformly from layers x heads_per_layer.
AblationPlan MakeAblationPlan(const HeadHistogram& hist, size_t k,
                              AblationStrategy strategy, uint64_t seed = 0,
                              int layers = 0, int heads_per_layer = 0);

Json AblationPlanToJson(const AblationPlan& plan);
AblationPlan AblationPlanFromJson(const Json& j);

struct AblationRow {
  std::string name;
  size_t heads = 0;
  double accuracy = 0.0;
  size_t n = 0;
};

// Baseline (no ablation) first, then one row per named plan.
std::vector<AblationRow> AblationEval(
    Classifier& clf, const TaskSpec& spec, const Dataset& ds,
    const std::vector<std::pair<std::string, AblationPlan>>& plans,
    size_t batch_size = 64);

void WriteMatchReportsTsv(std::ostream& out,
                          const std::vector<MatchReport>& reports);
void WriteHistogramTsv(std::ostream& out, const HeadHistogram& hist);
void WriteAblationTsv(std::ostream& out, const std::vector<AblationRow>& rows);

}  // namespace wop

#endif  // WOP_ATTNPROBE_H_

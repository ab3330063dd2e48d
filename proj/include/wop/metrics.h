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

#ifndef WOP_METRICS_H_
#define WOP_METRICS_H_

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wop/corpus.h"
#include "wop/gateway.h"
#include "wop/json.h"

namespace wop {

// Percentage of records whose label equals the gold label. Records and
// examples must line up by id, in order.
double Accuracy(std::span<const PredictionRecord> preds, const Dataset& gold);

// Mean of the record confidences, in [0, 1].
double MeanConfidence(std::span<const PredictionRecord> preds);

// Word-order sensitivity of a shuffled-set accuracy p (percent):
// s = (100 - p) / 50. p below 50 clamps s to 1 with a warning.
struct WosScore {
  double p = 0.0;
  double s = 0.0;

  // s rounded to two decimals, the precision reports use.
  double rounded() const;
};

WosScore Wos(double p);

// Spearman rank correlation times 100, ties get average ranks.
double Spearman(std::span<const double> xs, std::span<const double> ys);

// Average (1-based) ranks with ties sharing the mean of their positions.
std::vector<double> AverageRanks(std::span<const double> xs);

// Counts over [0,1), [1,2), [2,3), [3,4), [4,5), [5, inf).
std::array<size_t, 6> BinScores(std::span<const double> scores);

struct ConsistencyGroups {
  int k = 5;
  // groups[m] = ids misclassified in exactly m of the k runs.
  std::map<int, std::vector<std::string>> groups;

  Json ToJson() const;
};

// k independent 1-gram shuffles of ds (run r uses DeriveRunSeed(run_seed, r)),
// each classified; counts the runs in which every example flips. Examples
// that cannot be shuffled in a run count as not misclassified in it.
ConsistencyGroups ComputeConsistencyGroups(const Dataset& ds,
                                           const TaskSpec& spec,
                                           Classifier& clf, int k,
                                           uint64_t run_seed,
                                           size_t batch_size = 64);

}  // namespace wop

#endif  // WOP_METRICS_H_

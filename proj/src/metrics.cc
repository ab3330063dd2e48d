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

#include "wop/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "wop/error.h"
#include "wop/perturb.h"
#include "wop/random.h"

namespace wop {

double Accuracy(std::span<const PredictionRecord> preds, const Dataset& gold) {
  if (preds.size() != gold.size()) {
    throw DataError("id mismatch: " + std::to_string(preds.size()) +
                    " predictions for " + std::to_string(gold.size()) +
                    " examples");
  }
  if (preds.empty()) throw DataError("accuracy of an empty set");
  size_t correct = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].example_id != gold.examples[i].id) {
      throw DataError("id mismatch: prediction '" + preds[i].example_id +
                      "' vs example '" + gold.examples[i].id + "'");
    }
    correct += IsCorrect(preds[i], gold.examples[i]) ? 1 : 0;
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(preds.size());
}

double MeanConfidence(std::span<const PredictionRecord> preds) {
  if (preds.empty()) throw DataError("mean confidence of an empty set");
  double sum = 0.0;
  for (const auto& p : preds) {
    if (!p.confidence) {
      throw DataError("prediction '" + p.example_id + "' has no confidence");
    }
    sum += *p.confidence;
  }
  return sum / static_cast<double>(preds.size());
}

double WosScore::rounded() const { return std::round(s * 100.0) / 100.0; }

WosScore Wos(double p) {
  if (!(p >= 0.0 && p <= 100.0)) {
    throw DataError("accuracy " + std::to_string(p) + " outside [0, 100]");
  }
  double s = (100.0 - p) / 50.0;
  if (p < 50.0) {
    spdlog::warn("accuracy {} is below chance; clamping WOS to 1", p);
    s = 1.0;
  }
  return WosScore{p, s};
}

std::vector<double> AverageRanks(std::span<const double> xs) {
  std::vector<size_t> order(xs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean(i+1 .. j+1).
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double Spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DataError("length mismatch");
  if (xs.size() < 2) throw DataError("spearman needs at least 2 pairs");
  const auto rx = AverageRanks(xs);
  const auto ry = AverageRanks(ys);
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("undefined correlation");
  return 100.0 * sxy / std::sqrt(sxx * syy);
}

std::array<size_t, 6> BinScores(std::span<const double> scores) {
  std::array<size_t, 6> counts{};
  for (double s : scores) {
    if (!(s >= 0.0)) throw DataError("negative score " + std::to_string(s));
    const double bin = std::floor(s);
    counts[bin >= 5.0 ? 5 : static_cast<size_t>(bin)]++;
  }
  return counts;
}

Json ConsistencyGroups::ToJson() const {
  Json j;
  j["k"] = k;
  Json g = Json::object();
  for (const auto& [m, ids] : groups) {
    g[std::to_string(m) + "/" + std::to_string(k)] = ids;
  }
  j["groups"] = std::move(g);
  return j;
}

ConsistencyGroups ComputeConsistencyGroups(const Dataset& ds,
                                           const TaskSpec& spec,
                                           Classifier& clf, int k,
                                           uint64_t run_seed,
                                           size_t batch_size) {
  if (k < 1) throw UsageError("consistency groups need k >= 1");
  std::map<std::string, int> flips;
  for (const auto& ex : ds.examples) flips[ex.id] = 0;
  for (int r = 0; r < k; ++r) {
    const ShuffledDataset run =
        ShuffleDataset(ds, spec, 1, DeriveRunSeed(run_seed, r));
    if (run.dataset.empty()) continue;
    const auto preds = PredictDataset(clf, spec, run.dataset, batch_size);
    for (size_t i = 0; i < preds.size(); ++i) {
      if (!IsCorrect(preds[i], run.dataset.examples[i])) {
        ++flips[run.dataset.examples[i].id];
      }
    }
  }
  ConsistencyGroups out;
  out.k = k;
  for (int m = 0; m <= k; ++m) out.groups[m];
  for (const auto& ex : ds.examples) out.groups[flips[ex.id]].push_back(ex.id);
  return out;
}

}  // namespace wop

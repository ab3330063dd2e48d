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

#include "wop/filter.h"

#include <algorithm>

#include "wop/random.h"

namespace wop {

namespace {

constexpr const char* kAllClasses = "all";

std::string ClassOf(const Example& ex, const TaskSpec& spec) {
  return spec.is_regression() ? kAllClasses : LabelToString(ex.gold_label);
}

}  // namespace

Json FilterTrace::ToJson() const {
  Json j;
  Json c = Json::object();
  for (const auto& [label, n] : counts) {
    c[label] = {{"raw", n[0]}, {"step1", n[1]}, {"step2", n[2]}, {"step3", n[3]}};
  }
  j["counts"] = std::move(c);
  j["dropped_ids"] = {{"step1", dropped_ids[0]},
                      {"step2", dropped_ids[1]},
                      {"step3", dropped_ids[2]}};
  return j;
}

bool PassesSentenceFilter(std::string_view text) {
  return SplitSentences(text).size() == 1 && CountWhitespaceTokens(text) > 3;
}

FilterResult FilterExamples(const Dataset& ds, const TaskSpec& spec,
                            Classifier& clf, uint64_t seed,
                            size_t batch_size) {
  FilterResult result;
  FilterTrace& trace = result.trace;
  if (spec.is_regression()) {
    trace.counts[kAllClasses] = {0, 0, 0, 0};
  } else {
    for (const auto& label : spec.label_domain.labels) {
      trace.counts[label] = {0, 0, 0, 0};
    }
  }
  auto bump = [&](const std::vector<Example>& exs, size_t step) {
    for (const auto& ex : exs) ++trace.counts[ClassOf(ex, spec)][step];
  };

  bump(ds.examples, 0);
  Dataset step1;
  for (const auto& ex : ds.examples) {
    if (PassesSentenceFilter(ex.target(spec))) {
      step1.examples.push_back(ex);
    } else {
      trace.dropped_ids[0].push_back(ex.id);
    }
  }
  bump(step1.examples, 1);

  if (spec.is_regression()) {
    bump(step1.examples, 2);
    bump(step1.examples, 3);
    result.dataset = std::move(step1);
    return result;
  }

  Dataset step2;
  if (!step1.empty()) {
    const auto preds = PredictDataset(clf, spec, step1, batch_size);
    for (size_t i = 0; i < step1.size(); ++i) {
      if (IsCorrect(preds[i], step1.examples[i])) {
        step2.examples.push_back(step1.examples[i]);
      } else {
        trace.dropped_ids[1].push_back(step1.examples[i].id);
      }
    }
  }
  bump(step2.examples, 2);

  // Indices of each class in step2 order.
  std::map<std::string, std::vector<size_t>> by_class;
  for (const auto& label : spec.label_domain.labels) by_class[label];
  for (size_t i = 0; i < step2.size(); ++i) {
    by_class[ClassOf(step2.examples[i], spec)].push_back(i);
  }
  size_t target = SIZE_MAX;
  for (const auto& [label, idx] : by_class) target = std::min(target, idx.size());

  std::vector<bool> keep(step2.size(), false);
  Rng rng(seed);
  for (const auto& label : spec.label_domain.labels) {
    const auto& idx = by_class[label];
    if (idx.size() == target) {
      for (size_t i : idx) keep[i] = true;
      continue;
    }
    for (size_t pick : rng.SampleWithoutReplacement(idx.size(), target)) {
      keep[idx[pick]] = true;
    }
  }
  for (size_t i = 0; i < step2.size(); ++i) {
    if (keep[i]) {
      result.dataset.examples.push_back(step2.examples[i]);
    } else {
      trace.dropped_ids[2].push_back(step2.examples[i].id);
    }
  }
  bump(result.dataset.examples, 3);
  return result;
}

}  // namespace wop

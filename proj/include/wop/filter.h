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

// Three-step selection of "real" examples:
//   1. the target field is exactly one sentence with more than 3 whitespace
//      tokens;
//   2. the classifier labels the example correctly;
//   3. the larger class is down-sampled (seeded, without replacement) to the
//      size of the smaller one.
// Regression tasks only run step 1.

#ifndef WOP_FILTER_H_
#define WOP_FILTER_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wop/corpus.h"
#include "wop/gateway.h"
#include "wop/json.h"

namespace wop {

struct FilterTrace {
  // Per class label ("all" for regression): raw, step1, step2, step3.
  std::map<std::string, std::array<size_t, 4>> counts;
  // Ids removed by step 1, 2 and 3.
  std::array<std::vector<std::string>, 3> dropped_ids;

  Json ToJson() const;
};

struct FilterResult {
  Dataset dataset;
  FilterTrace trace;
};

// Step 1 on a single text.
bool PassesSentenceFilter(std::string_view text);

FilterResult FilterExamples(const Dataset& ds, const TaskSpec& spec,
                            Classifier& clf, uint64_t seed,
                            size_t batch_size = 64);

}  // namespace wop

#endif  // WOP_FILTER_H_

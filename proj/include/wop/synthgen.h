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

// Real/fake word-order datasets: every source sentence yields itself
// ("real") and a copy with two unequal words transposed ("fake").

#ifndef WOP_SYNTHGEN_H_
#define WOP_SYNTHGEN_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wop/corpus.h"
#include "wop/json.h"

namespace wop {

inline constexpr const char* kRealLabel = "real";
inline constexpr const char* kFakeLabel = "fake";

struct SyntheticExample {
  std::string id;  // <source>:real or <source>:fake
  std::string text;
  std::string label;
  std::string source_id;
  std::string source_label;

  Json ToJson() const;
  bool operator==(const SyntheticExample&) const = default;
};

struct SwapRecord {
  size_t first = 0;
  size_t second = 0;
  // Pinned sentence-final punctuation, needed to undo the swap exactly.
  std::string terminal;

  bool operator==(const SwapRecord&) const = default;
};

struct SyntheticSet {
  // Pairs in source order, real before fake.
  std::vector<SyntheticExample> examples;
  // Token positions swapped to make each fake, keyed by source id.
  std::map<std::string, SwapRecord> swaps;
  std::vector<std::string> dropped_ids;
  uint64_t seed = 0;

  Json ManifestJson() const;
  // As a dataset of the built-in "synthetic" task.
  Dataset ToDataset(Split split = Split::kDev) const;
  bool operator==(const SyntheticSet&) const = default;
};

// Source example i uses DeriveSeed(seed, id). Sources whose target field
// fails the single-sentence filter, or cannot be swapped, are dropped and
// logged.
SyntheticSet BuildSyntheticSplit(const Dataset& ds, const TaskSpec& spec,
                                 uint64_t seed);

std::pair<SyntheticSet, SyntheticSet> BuildSynthetic(const Dataset& train,
                                                     const Dataset& dev,
                                                     const TaskSpec& spec,
                                                     uint64_t seed);

// Swaps whitespace tokens first and second of text, whose sentence-final
// punctuation is `terminal` and stays put. Applying a fake's record to the
// fake recovers the real text byte-exactly.
std::string ApplyTransposition(const std::string& text, const SwapRecord& swap);

void WriteSyntheticJsonl(std::ostream& out, const SyntheticSet& set);

}  // namespace wop

#endif  // WOP_SYNTHGEN_H_

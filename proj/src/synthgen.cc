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

#include "wop/synthgen.h"

#include <ostream>

#include <spdlog/spdlog.h>

#include "wop/error.h"
#include "wop/filter.h"
#include "wop/perturb.h"
#include "wop/random.h"
#include "wop/text.h"

namespace wop {

Json SyntheticExample::ToJson() const {
  Json j;
  j["id"] = id;
  j["text"] = text;
  j["label"] = label;
  j["source_id"] = source_id;
  j["source_label"] = source_label;
  return j;
}

Json SyntheticSet::ManifestJson() const {
  Json j;
  j["seed"] = seed;
  Json s = Json::object();
  for (const auto& [id, sw] : swaps) {
    s[id] = {{"first", sw.first}, {"second", sw.second}, {"terminal", sw.terminal}};
  }
  j["swaps"] = std::move(s);
  j["dropped"] = dropped_ids;
  return j;
}

Dataset SyntheticSet::ToDataset(Split split) const {
  Dataset ds;
  for (const auto& e : examples) {
    ds.examples.push_back(Example{e.id, {e.text}, e.label, split});
  }
  return ds;
}

SyntheticSet BuildSyntheticSplit(const Dataset& ds, const TaskSpec& spec,
                                 uint64_t seed) {
  SyntheticSet out;
  out.seed = seed;
  for (const auto& ex : ds.examples) {
    const std::string& sentence = ex.target(spec);
    if (!PassesSentenceFilter(sentence)) {
      spdlog::warn("synth: dropping '{}': not a single sentence of 4+ tokens",
                   ex.id);
      out.dropped_ids.push_back(ex.id);
      continue;
    }
    const TokenSentence ts = Tokenize(sentence);
    SwapResult swap;
    try {
      swap = SwapTwoWords(ts, DeriveSeed(seed, ex.id));
    } catch (const PerturbError& e) {
      spdlog::warn("synth: dropping '{}': {}", ex.id, e.what());
      out.dropped_ids.push_back(ex.id);
      continue;
    }
    if (!out.swaps.emplace(ex.id, SwapRecord{swap.first, swap.second, ts.terminal_punct})
             .second) {
      throw DataError("duplicate source id '" + ex.id + "'");
    }
    const std::string source_label = LabelToString(ex.gold_label);
    out.examples.push_back(
        {ex.id + ":real", ts.Render(), kRealLabel, ex.id, source_label});
    out.examples.push_back({ex.id + ":fake", swap.sentence.Render(), kFakeLabel,
                            ex.id, source_label});
  }
  return out;
}

std::pair<SyntheticSet, SyntheticSet> BuildSynthetic(const Dataset& train,
                                                     const Dataset& dev,
                                                     const TaskSpec& spec,
                                                     uint64_t seed) {
  return {BuildSyntheticSplit(train, spec, seed),
          BuildSyntheticSplit(dev, spec, seed)};
}

std::string ApplyTransposition(const std::string& text, const SwapRecord& swap) {
  if (!text.ends_with(swap.terminal)) {
    throw DataError("text does not end with '" + swap.terminal + "'");
  }
  TokenSentence ts;
  ts.tokens = SplitWhitespace(
      std::string_view(text).substr(0, text.size() - swap.terminal.size()));
  ts.terminal_punct = swap.terminal;
  if (swap.first >= ts.tokens.size() || swap.second >= ts.tokens.size()) {
    throw DataError("transposition (" + std::to_string(swap.first) + ", " +
                    std::to_string(swap.second) + ") out of range");
  }
  std::swap(ts.tokens[swap.first], ts.tokens[swap.second]);
  return ts.Render();
}

void WriteSyntheticJsonl(std::ostream& out, const SyntheticSet& set) {
  for (const auto& e : set.examples) out << e.ToJson().dump() << '\n';
}

}  // namespace wop

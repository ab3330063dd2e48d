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

#include "wop/perturb.h"

#include <algorithm>
#include <numeric>
#include <optional>
#include <thread>

#include <spdlog/spdlog.h>

#include "wop/error.h"
#include "wop/random.h"
#include "wop/text.h"

namespace wop {

namespace {

constexpr std::string_view kEllipsis = "\xE2\x80\xA6";

// Length of the terminal punctuation mark ending s, or 0.
size_t TrailingMarkLength(std::string_view s) {
  if (s.ends_with(kEllipsis)) return kEllipsis.size();
  if (s.empty()) return 0;
  switch (s.back()) {
    case '.':
    case '?':
    case '!':
    case '"':
    case '\'':
    case ')':
      return 1;
    default:
      return 0;
  }
}

}  // namespace

std::string TokenSentence::Render() const {
  return Join(tokens, " ") + terminal_punct;
}

TokenSentence Tokenize(std::string_view sentence) {
  TokenSentence ts;
  ts.tokens = SplitWhitespace(sentence);
  if (ts.tokens.empty()) throw DataError("empty input");
  std::string_view last = ts.tokens.back();
  size_t cut = last.size();
  while (cut > 0) {
    const size_t m = TrailingMarkLength(last.substr(0, cut));
    if (m == 0) break;
    cut -= m;
  }
  // A punctuation-only final token stays a token.
  if (cut > 0 && cut < last.size()) {
    ts.terminal_punct = std::string(last.substr(cut));
    ts.tokens.back().resize(cut);
  }
  return ts;
}

std::vector<size_t> ChunkSizes(size_t token_count, size_t n) {
  if (n == 0) throw UsageError("n-gram size must be >= 1");
  std::vector<size_t> sizes;
  for (size_t at = 0; at < token_count; at += n) {
    sizes.push_back(std::min(n, token_count - at));
  }
  return sizes;
}

std::vector<std::vector<std::string>> ChunkNgrams(const TokenSentence& ts,
                                                  size_t n) {
  std::vector<std::vector<std::string>> chunks;
  size_t at = 0;
  for (size_t size : ChunkSizes(ts.tokens.size(), n)) {
    chunks.emplace_back(ts.tokens.begin() + at, ts.tokens.begin() + at + size);
    at += size;
  }
  return chunks;
}

TokenSentence ApplyChunkPermutation(const TokenSentence& ts, size_t n,
                                    const std::vector<size_t>& permutation) {
  const auto chunks = ChunkNgrams(ts, n);
  if (permutation.size() != chunks.size()) {
    throw DataError("permutation has " + std::to_string(permutation.size()) +
                    " entries for " + std::to_string(chunks.size()) +
                    " chunks");
  }
  std::vector<bool> seen(chunks.size(), false);
  TokenSentence out;
  out.terminal_punct = ts.terminal_punct;
  for (size_t src : permutation) {
    if (src >= chunks.size() || seen[src]) {
      throw DataError("chunk permutation is not a bijection");
    }
    seen[src] = true;
    out.tokens.insert(out.tokens.end(), chunks[src].begin(), chunks[src].end());
  }
  return out;
}

std::vector<size_t> ShuffleResult::SourcePositions() const {
  const auto sizes = ChunkSizes(sentence.tokens.size(), n);
  std::vector<size_t> starts(sizes.size(), 0);
  for (size_t c = 1; c < sizes.size(); ++c) {
    starts[c] = starts[c - 1] + sizes[c - 1];
  }
  if (permutation.size() != sizes.size()) {
    throw DataError("permutation does not match the sentence length");
  }
  std::vector<size_t> positions;
  positions.reserve(sentence.tokens.size());
  for (size_t src : permutation) {
    for (size_t k = 0; k < sizes.at(src); ++k) {
      positions.push_back(starts[src] + k);
    }
  }
  return positions;
}

ShuffleResult ShuffleNgrams(const TokenSentence& ts, size_t n, uint64_t seed,
                            int max_attempts) {
  const auto chunks = ChunkNgrams(ts, n);
  if (chunks.size() < 2) throw PerturbError("unshufflable");
  if (std::all_of(chunks.begin(), chunks.end(),
                  [&](const auto& c) { return c == chunks.front(); })) {
    throw PerturbError("no distinct permutation");
  }
  Rng rng(seed);
  std::vector<size_t> perm(chunks.size());
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    std::iota(perm.begin(), perm.end(), size_t{0});
    rng.Shuffle(perm);
    TokenSentence out = ApplyChunkPermutation(ts, n, perm);
    if (out.tokens != ts.tokens) {
      return ShuffleResult{std::move(out), perm, n, seed, attempt};
    }
  }
  throw PerturbError("no distinct permutation");
}

SwapResult SwapTwoWords(const TokenSentence& ts, uint64_t seed) {
  const auto& tokens = ts.tokens;
  const bool any_unequal =
      std::any_of(tokens.begin(), tokens.end(),
                  [&](const std::string& t) { return t != tokens.front(); });
  if (tokens.size() < 2 || !any_unequal) throw PerturbError("unswappable");
  // Rejection over ordered pairs is uniform over unordered unequal pairs.
  Rng rng(seed);
  while (true) {
    const size_t i = rng.Uniform(tokens.size());
    const size_t j = rng.Uniform(tokens.size());
    if (i == j || tokens[i] == tokens[j]) continue;
    SwapResult r{ts, std::min(i, j), std::max(i, j)};
    std::swap(r.sentence.tokens[r.first], r.sentence.tokens[r.second]);
    return r;
  }
}

Json ShuffledDataset::ManifestJson() const {
  Json j;
  j["run_seed"] = run_seed;
  j["n"] = n;
  Json perms = Json::object();
  for (const auto& [id, perm] : permutations) perms[id] = perm;
  j["permutations"] = std::move(perms);
  j["dropped"] = dropped_ids;
  return j;
}

ShuffledDataset ShuffleDataset(const Dataset& ds, const TaskSpec& spec,
                               size_t n, uint64_t run_seed, size_t jobs) {
  struct Outcome {
    std::optional<ShuffleResult> result;
    std::string error;
  };
  std::vector<Outcome> outcomes(ds.size());
  auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const Example& ex = ds.examples[i];
      try {
        outcomes[i].result = ShuffleNgrams(Tokenize(ex.target(spec)), n,
                                           DeriveSeed(run_seed, ex.id));
      } catch (const PerturbError& e) {
        outcomes[i].error = e.what();
      } catch (const DataError& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  jobs = std::clamp<size_t>(jobs, 1, std::max<size_t>(1, ds.size()));
  if (jobs == 1) {
    work(0, ds.size());
  } else {
    std::vector<std::thread> threads;
    const size_t per = (ds.size() + jobs - 1) / jobs;
    for (size_t b = 0; b < ds.size(); b += per) {
      threads.emplace_back(work, b, std::min(ds.size(), b + per));
    }
    for (auto& t : threads) t.join();
  }

  ShuffledDataset out;
  out.run_seed = run_seed;
  out.n = n;
  for (size_t i = 0; i < ds.size(); ++i) {
    const Example& ex = ds.examples[i];
    if (!outcomes[i].result) {
      spdlog::warn("dropping example '{}' from {}-gram shuffle: {}", ex.id, n,
                   outcomes[i].error);
      out.dropped_ids.push_back(ex.id);
      continue;
    }
    Example shuffled = ex;
    shuffled.fields[spec.target_field] = outcomes[i].result->sentence.Render();
    out.permutations[ex.id] = outcomes[i].result->permutation;
    out.dataset.examples.push_back(std::move(shuffled));
  }
  return out;
}

}  // namespace wop

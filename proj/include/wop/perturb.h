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

// Word-order perturbations: n-gram chunk shuffles and two-word swaps.
//
// A sentence is split on whitespace; the trailing run of terminal
// punctuation on the last token is detached and stays pinned to the end of
// every perturbed sentence. Mid-sentence punctuation stays glued to its token.

#ifndef WOP_PERTURB_H_
#define WOP_PERTURB_H_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wop/corpus.h"
#include "wop/json.h"

namespace wop {

// Raised when a sentence admits no valid perturbation. what() is one of
// "unshufflable", "no distinct permutation", "unswappable".
class PerturbError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TokenSentence {
  std::vector<std::string> tokens;
  std::string terminal_punct;

  // tokens joined by single spaces, then terminal_punct.
  std::string Render() const;

  bool operator==(const TokenSentence&) const = default;
};

// Throws DataError on empty or whitespace-only input.
TokenSentence Tokenize(std::string_view sentence);

// Left-to-right chunks of n tokens; the last chunk may be shorter.
std::vector<std::vector<std::string>> ChunkNgrams(const TokenSentence& ts,
                                                  size_t n);

// Sizes of the chunks ChunkNgrams would produce for token_count tokens.
std::vector<size_t> ChunkSizes(size_t token_count, size_t n);

struct ShuffleResult {
  TokenSentence sentence;
  // permutation[out_chunk] = in_chunk.
  std::vector<size_t> permutation;
  size_t n = 1;
  uint64_t seed = 0;
  int attempts = 0;

  // Original token position of each output token.
  std::vector<size_t> SourcePositions() const;
};

// Draws uniform chunk permutations from Rng(seed) until the reassembled token
// sequence differs from the input.
ShuffleResult ShuffleNgrams(const TokenSentence& ts, size_t n, uint64_t seed,
                            int max_attempts = 100);

// Rebuilds a shuffled sentence from the original and a chunk permutation.
TokenSentence ApplyChunkPermutation(const TokenSentence& ts, size_t n,
                                    const std::vector<size_t>& permutation);

struct SwapResult {
  TokenSentence sentence;
  size_t first = 0;  // first < second
  size_t second = 0;
};

// Transposes two uniformly drawn positions holding unequal tokens.
SwapResult SwapTwoWords(const TokenSentence& ts, uint64_t seed);

struct ShuffledDataset {
  Dataset dataset;
  uint64_t run_seed = 0;
  size_t n = 1;
  // Keyed by example id.
  std::map<std::string, std::vector<size_t>> permutations;
  std::vector<std::string> dropped_ids;

  // {"run_seed":..,"n":..,"permutations":{id:[..]},"dropped":[..]}
  Json ManifestJson() const;
};

// Replaces each example's target field by its n-gram shuffle using
// DeriveSeed(run_seed, id). Examples that cannot be shuffled are dropped and
// logged. jobs > 1 splits the work across threads; output is identical.
ShuffledDataset ShuffleDataset(const Dataset& ds, const TaskSpec& spec,
                               size_t n, uint64_t run_seed, size_t jobs = 1);

}  // namespace wop

#endif  // WOP_PERTURB_H_

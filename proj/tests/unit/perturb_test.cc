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
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"
#include "wop/error.h"
#include "wop/text.h"

namespace wop {
namespace {

using Tokens = std::vector<std::string>;

const char kSmoking[] = "How can smoking marijuana give you lung cancer?";

TEST(Tokenize, DetachesTerminalRun) {
  TokenSentence ts = Tokenize(kSmoking);
  EXPECT_EQ(ts.tokens.size(), 8u);
  EXPECT_EQ(ts.tokens.back(), "cancer");
  EXPECT_EQ(ts.terminal_punct, "?");
  EXPECT_EQ(ts.Render(), kSmoking);

  ts = Tokenize("Really?!");
  EXPECT_EQ(ts.tokens, Tokens{"Really"});
  EXPECT_EQ(ts.terminal_punct, "?!");

  ts = Tokenize("He said \"stop.\"");
  EXPECT_EQ(ts.tokens.back(), "\"stop");
  EXPECT_EQ(ts.terminal_punct, ".\"");
}

TEST(Tokenize, PunctuationOnlyFinalTokenStays) {
  const TokenSentence ts = Tokenize("Wait , what ?!");
  EXPECT_EQ(ts.tokens, (Tokens{"Wait", ",", "what", "?!"}));
  EXPECT_EQ(ts.terminal_punct, "");
}

TEST(Tokenize, KeepsInternalPunctuationAndCount) {
  const TokenSentence ts = Tokenize("Well, it's 3.5 times e.g. bigger");
  EXPECT_EQ(ts.tokens.size(), 6u);
  EXPECT_EQ(ts.terminal_punct, "");
  EXPECT_THROW(Tokenize("   "), DataError);
}

TEST(ChunkNgrams, LeftGreedyChunks) {
  const TokenSentence ts = Tokenize(kSmoking);
  const auto chunks = ChunkNgrams(ts, 3);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(Join(chunks[0], " "), "How can smoking");
  EXPECT_EQ(Join(chunks[1], " "), "marijuana give you");
  EXPECT_EQ(Join(chunks[2], " "), "lung cancer");
  EXPECT_EQ(ChunkSizes(8, 3), (std::vector<size_t>{3, 3, 2}));
  EXPECT_EQ(ChunkSizes(4, 2), (std::vector<size_t>{2, 2}));
  EXPECT_EQ(ChunkSizes(2, 5), (std::vector<size_t>{2}));
  EXPECT_THROW(ChunkSizes(3, 0), UsageError);
}

TEST(ApplyChunkPermutation, ReproducesWorkedExamples) {
  const TokenSentence ts = Tokenize(kSmoking);
  EXPECT_EQ(ApplyChunkPermutation(ts, 3, {2, 1, 0}).Render(),
            "lung cancer marijuana give you How can smoking?");
  EXPECT_EQ(ApplyChunkPermutation(ts, 2, {1, 3, 2, 0}).Render(),
            "smoking marijuana lung cancer give you How can?");
  EXPECT_EQ(ApplyChunkPermutation(ts, 1, {3, 1, 7, 0, 5, 2, 4, 6}).Render(),
            "marijuana can cancer How you smoking give lung?");
  EXPECT_THROW(ApplyChunkPermutation(ts, 3, {0, 0, 1}), DataError);
  EXPECT_THROW(ApplyChunkPermutation(ts, 3, {0, 1}), DataError);
}

TEST(ShuffleNgrams, PropertiesOnRandomSentences) {
  Rng gen(2024);
  for (int c = 0; c < 2000; ++c) {
    const size_t len = 2 + gen.Uniform(12);
    Tokens toks;
    for (size_t i = 0; i < len; ++i) toks.push_back("w" + std::to_string(gen.Uniform(6)));
    TokenSentence ts{toks, gen.Uniform(2) ? "." : ""};
    const size_t n = 1 + gen.Uniform(3);
    const uint64_t seed = gen.NextU64();
    ShuffleResult r;
    try {
      r = ShuffleNgrams(ts, n, seed);
    } catch (const PerturbError&) {
      // Only legal when no reordering can change the tokens: one chunk, or
      // chunks that pairwise commute under concatenation.
      const auto chunks = ChunkNgrams(ts, n);
      bool frozen = true;
      for (const auto& x : chunks) {
        for (const auto& y : chunks) {
          Tokens xy = x, yx = y;
          xy.insert(xy.end(), y.begin(), y.end());
          yx.insert(yx.end(), x.begin(), x.end());
          frozen = frozen && xy == yx;
        }
      }
      EXPECT_TRUE(frozen);
      continue;
    }
    auto a = r.sentence.tokens, b = ts.tokens;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    ASSERT_EQ(a, b);
    ASSERT_EQ(r.sentence.terminal_punct, ts.terminal_punct);
    ASSERT_NE(r.sentence.tokens, ts.tokens);
    ASSERT_EQ(ApplyChunkPermutation(ts, n, r.permutation), r.sentence);
    const auto pos = r.SourcePositions();
    for (size_t i = 0; i < pos.size(); ++i) {
      ASSERT_EQ(r.sentence.tokens[i], ts.tokens[pos[i]]);
    }
    ASSERT_EQ(ShuffleNgrams(ts, n, seed).permutation, r.permutation);
  }
}

TEST(ShuffleNgrams, RejectsDegenerateInput) {
  EXPECT_THROW(ShuffleNgrams(Tokenize("Alone."), 1, 1), PerturbError);
  EXPECT_THROW(ShuffleNgrams(Tokenize("a a a a"), 1, 1), PerturbError);
  EXPECT_THROW(ShuffleNgrams(Tokenize("a b a b"), 2, 1), PerturbError);
  EXPECT_THROW(ShuffleNgrams(Tokenize("one two three"), 3, 1), PerturbError);
  EXPECT_NO_THROW(ShuffleNgrams(Tokenize("a b"), 1, 1));
}

TEST(SwapTwoWords, SwapsTwoUnequalTokens) {
  Rng gen(3);
  for (int c = 0; c < 1000; ++c) {
    const TokenSentence ts = Tokenize("the cat and the dog saw the bird.");
    const SwapResult r = SwapTwoWords(ts, gen.NextU64());
    ASSERT_LT(r.first, r.second);
    ASSERT_NE(ts.tokens[r.first], ts.tokens[r.second]);
    size_t diffs = 0;
    for (size_t i = 0; i < ts.tokens.size(); ++i) {
      diffs += ts.tokens[i] != r.sentence.tokens[i];
    }
    ASSERT_EQ(diffs, 2u);
    ASSERT_EQ(r.sentence.terminal_punct, ".");
  }
  EXPECT_THROW(SwapTwoWords(Tokenize("same same same"), 1), PerturbError);
  EXPECT_THROW(SwapTwoWords(Tokenize("one"), 1), PerturbError);
}

TEST(ShuffleDataset, DropsUnshufflableAndIsJobIndependent) {
  const auto& spec = BuiltinTaskSpec("qnli");
  Dataset ds;
  ds.examples.push_back(testing::MakeExample(
      "a", {"Who wrote the famous book?", "Someone did."},
      std::string("entailment")));
  ds.examples.push_back(testing::MakeExample(
      "b", {"Why?", "Because."}, std::string("not_entailment")));
  for (int i = 0; i < 40; ++i) {
    ds.examples.push_back(testing::MakeExample(
        "x" + std::to_string(i), {"When did the long war end at last?", "Then."},
        std::string("entailment")));
  }
  const ShuffledDataset one = ShuffleDataset(ds, spec, 1, 99, 1);
  const ShuffledDataset many = ShuffleDataset(ds, spec, 1, 99, 4);
  EXPECT_EQ(one.dataset, many.dataset);
  EXPECT_EQ(one.permutations, many.permutations);
  EXPECT_EQ(one.dropped_ids, std::vector<std::string>{"b"});
  EXPECT_EQ(one.dataset.size(), 41u);
  // Only the target field changes.
  EXPECT_EQ(one.dataset.examples[0].fields[1], "Someone did.");
  EXPECT_NE(one.dataset.examples[0].fields[0], ds.examples[0].fields[0]);
  const Json m = one.ManifestJson();
  EXPECT_EQ(m["n"], 1);
  EXPECT_EQ(m["run_seed"], 99);
  EXPECT_TRUE(m["permutations"].contains("a"));
}

}  // namespace
}  // namespace wop

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

#include "wop/gateway.h"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.h"
#include "wop/error.h"
#include "wop/text.h"
#include "wop/lexicon.h"

namespace wop {
namespace {

using testing::MakeExample;

PolarityLexicon SmallLexicon() {
  return PolarityLexicon(PolarityLexicon::Kind::kBinaryList,
                         {{"good", 1.0}, {"great", 1.0}, {"bad", -1.0}});
}

TEST(Lexicon, DefaultHasSixtySignedWords) {
  const auto& lex = DefaultLexicon();
  EXPECT_EQ(lex.size(), 60u);
  size_t pos = 0;
  for (const auto& [w, p] : lex.entries()) pos += p > 0;
  EXPECT_EQ(pos, 30u);
  EXPECT_EQ(lex.Lookup("Superb!"), 1.0);
  EXPECT_EQ(lex.Lookup("\"boring,\""), -1.0);
  EXPECT_FALSE(lex.Lookup("table").has_value());
  EXPECT_FALSE(lex.Lookup("...").has_value());
}

TEST(Lexicon, BinaryListsDropAmbiguousWords) {
  std::istringstream pos("; comment\nGood\nfine\n\n");
  std::istringstream neg("bad\nfine\n");
  const auto lex = ReadBinaryLexicon(pos, neg);
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_EQ(lex.Lookup("good"), 1.0);
  EXPECT_EQ(lex.Lookup("bad"), -1.0);
  EXPECT_FALSE(lex.Lookup("fine"));
}

TEST(Lexicon, SignedAndScoredFormats) {
  std::istringstream signed_list("+nice\n-awful\n");
  const auto a = ReadSignedList(signed_list);
  EXPECT_EQ(a.Lookup("nice"), 1.0);
  std::istringstream bad_signed("nice\n");
  EXPECT_THROW(ReadSignedList(bad_signed), DataError);

  std::istringstream scored("# header\nhappy#1\t0.5\nhappy#2\t0.25\nsad\t-0.75\n");
  const auto b = ReadScoredLexicon(scored);
  EXPECT_EQ(b.kind(), PolarityLexicon::Kind::kScored);
  EXPECT_DOUBLE_EQ(*b.Lookup("happy"), 0.375);
  EXPECT_DOUBLE_EQ(*b.Lookup("sad"), -0.75);
  std::istringstream out_of_range("x\t2.0\n");
  EXPECT_THROW(ReadScoredLexicon(out_of_range), DataError);
  std::istringstream no_tab("x 0.5\n");
  EXPECT_THROW(ReadScoredLexicon(no_tab), DataError);
}

TEST(LexiconClassifier, ScoresAndConfidences) {
  LexiconClassifier clf(SmallLexicon());
  const auto& spec = BuiltinTaskSpec("sst2");
  std::vector<Example> batch{
      MakeExample("a", {"Good, great film."}, std::string("1")),
      MakeExample("b", {"A bad one."}, std::string("0")),
      MakeExample("c", {"Nothing here."}, std::string("0"))};
  const auto preds = Predict(clf, spec, batch);
  ASSERT_EQ(preds.size(), 3u);
  EXPECT_EQ(std::get<std::string>(preds[0].label), "1");
  EXPECT_DOUBLE_EQ(*preds[0].confidence, Logistic(2.0));
  EXPECT_EQ(std::get<std::string>(preds[1].label), "0");
  EXPECT_DOUBLE_EQ(*preds[1].confidence, Logistic(1.0));
  EXPECT_EQ(std::get<std::string>(preds[2].label), "0");
  EXPECT_DOUBLE_EQ(*preds[2].confidence, 0.5);
  EXPECT_TRUE(IsCorrect(preds[0], batch[0]));
  // P(positive) is monotone in the score.
  EXPECT_GT(ProbabilityOf(preds[0], "1"), ProbabilityOf(preds[2], "1"));
  EXPECT_GT(ProbabilityOf(preds[2], "1"), ProbabilityOf(preds[1], "1"));
}

TEST(LexiconClassifier, IsPermutationInvariant) {
  LexiconClassifier clf(DefaultLexicon());
  const auto& spec = BuiltinTaskSpec("sst2");
  Rng rng(4);
  std::vector<std::string> words{"good", "film", "boring", "the", "great",
                                 "plot", "dull", "witty", "and", "mess"};
  for (int c = 0; c < 500; ++c) {
    rng.Shuffle(words);
    std::vector<std::string> sub(words.begin(), words.begin() + 2 + c % 8);
    const Example a = MakeExample("a", {Join(sub, " ")}, std::string("0"));
    rng.Shuffle(sub);
    const Example b = MakeExample("a", {Join(sub, " ")}, std::string("0"));
    EXPECT_EQ(clf.Score(a), clf.Score(b));
    EXPECT_EQ(Predict(clf, spec, std::span(&a, 1)),
              Predict(clf, spec, std::span(&b, 1)));
  }
}

TEST(LexiconClassifier, RejectsBlankAndRegression) {
  LexiconClassifier clf(SmallLexicon());
  const Example blank = MakeExample("x", {"   "}, std::string("0"));
  try {
    Predict(clf, BuiltinTaskSpec("sst2"), std::span(&blank, 1));
    ADD_FAILURE();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayError::Kind::kEmptyInput);
  }
  const Example pair = MakeExample("y", {"good", "bad"}, 2.0);
  EXPECT_THROW(Predict(clf, BuiltinTaskSpec("stsb"), std::span(&pair, 1)),
               UsageError);
  EXPECT_THROW(Predict(clf, BuiltinTaskSpec("sst2"), std::span<const Example>()),
               UsageError);
}

TEST(OverlapClassifier, JaccardAndRegression) {
  EXPECT_DOUBLE_EQ(OverlapClassifier::Jaccard("The cat sat.", "the cat ran"), 0.5);
  EXPECT_DOUBLE_EQ(OverlapClassifier::Jaccard("a b", "c d"), 0.0);
  OverlapClassifier clf(0.5);
  const Example same = MakeExample("s", {"the cat sat", "The cat sat."}, 5.0);
  const auto reg = Predict(clf, BuiltinTaskSpec("stsb"), std::span(&same, 1));
  EXPECT_DOUBLE_EQ(std::get<double>(reg[0].label), 5.0);
  EXPECT_FALSE(reg[0].confidence.has_value());
  const Example bin = MakeExample("b", {"the cat sat", "the dog ran"},
                                  std::string("0"));
  const auto p = Predict(clf, BuiltinTaskSpec("mrpc"), std::span(&bin, 1));
  EXPECT_EQ(std::get<std::string>(p[0].label), "0");
  EXPECT_DOUBLE_EQ(*p[0].confidence, Logistic(std::abs(0.2 - 0.5)));
  EXPECT_THROW(OverlapClassifier(1.0), UsageError);
  const Example single = MakeExample("x", {"a b"}, std::string("0"));
  EXPECT_THROW(Predict(clf, BuiltinTaskSpec("sst2"), std::span(&single, 1)),
               UsageError);
}

TEST(FirstTokenClassifier, LooksOnlyAtTheFirstTargetWord) {
  FirstTokenClassifier clf(SmallLexicon());
  const auto& spec = BuiltinTaskSpec("sst2");
  std::vector<Example> batch{
      MakeExample("a", {"Good bad bad bad."}, std::string("1")),
      MakeExample("b", {"bad good great."}, std::string("0")),
      MakeExample("c", {"Plain good."}, std::string("0"))};
  const auto preds = Predict(clf, spec, batch);
  EXPECT_EQ(std::get<std::string>(preds[0].label), "1");
  EXPECT_EQ(std::get<std::string>(preds[1].label), "0");
  EXPECT_EQ(std::get<std::string>(preds[2].label), "0");
  EXPECT_DOUBLE_EQ(*preds[2].confidence, 0.5);
  EXPECT_TRUE(clf.IsPositiveWord("great,"));
}

TEST(TableClassifier, ReplaysById) {
  TableClassifier clf({{"a", std::string("1"), 0.9}, {"b", std::string("0"), 0.6}});
  std::vector<Example> batch{MakeExample("b", {"x"}, std::string("0")),
                             MakeExample("a", {"y"}, std::string("1"))};
  const auto preds = Predict(clf, BuiltinTaskSpec("sst2"), batch);
  EXPECT_EQ(preds[0].example_id, "b");
  EXPECT_EQ(preds[1].confidence, 0.9);
  const Example missing = MakeExample("zzz", {"x"}, std::string("0"));
  try {
    Predict(clf, BuiltinTaskSpec("sst2"), std::span(&missing, 1));
    ADD_FAILURE();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayError::Kind::kRemote);
  }
}

class MisbehavingClassifier : public Classifier {
 public:
  explicit MisbehavingClassifier(int mode) : mode_(mode) {}
  std::string name() const override { return "bad"; }
  std::vector<PredictionRecord> PredictBatch(const TaskSpec&,
                                             std::span<const Example> batch,
                                             const AblationPlan*) override {
    std::vector<PredictionRecord> out;
    for (const auto& ex : batch) out.push_back({ex.id, std::string("0"), 0.7});
    if (mode_ == 0) out.pop_back();
    if (mode_ == 1) out[0].example_id = "other";
    return out;
  }

 private:
  int mode_;
};

TEST(Predict, EnforcesIdAlignment) {
  std::vector<Example> batch{MakeExample("a", {"x"}, std::string("0")),
                             MakeExample("b", {"y"}, std::string("0"))};
  for (int mode : {0, 1}) {
    MisbehavingClassifier clf(mode);
    try {
      Predict(clf, BuiltinTaskSpec("sst2"), batch);
      ADD_FAILURE();
    } catch (const GatewayError& e) {
      EXPECT_EQ(e.kind(), GatewayError::Kind::kIdMismatch);
      EXPECT_NE(std::string(e.what()).find("id mismatch"), std::string::npos);
    }
  }
}

TEST(Predict, BatchingDoesNotChangeResults) {
  LexiconClassifier clf(DefaultLexicon());
  const auto& spec = BuiltinTaskSpec("sst2");
  const Dataset ds = LoadDataset(testing::DataPath("sst2_mini.tsv"),
                                 DataFormat::kTsv, spec);
  const auto a = PredictDataset(clf, spec, ds, 1);
  const auto b = PredictDataset(clf, spec, ds, 7);
  const auto c = PredictDataset(clf, spec, ds, 1000);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Attend, BuiltinsHaveNoAttention) {
  LexiconClassifier clf(DefaultLexicon());
  const Example ex = MakeExample("a", {"x y"}, std::string("0"));
  try {
    Attend(clf, BuiltinTaskSpec("sst2"), ex);
    ADD_FAILURE();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayError::Kind::kNoAttention);
  }
}

TEST(AblationPlan, Validates) {
  AblationPlan ok{{{0, 1}, {2, 3}}};
  EXPECT_NO_THROW(ok.Validate(12, 12));
  AblationPlan dup{{{0, 1}, {0, 1}}};
  EXPECT_THROW(dup.Validate(), UsageError);
  AblationPlan range{{{12, 0}}};
  EXPECT_THROW(range.Validate(12, 12), UsageError);
  AblationPlan neg{{{-1, 0}}};
  EXPECT_THROW(neg.Validate(), UsageError);
}

TEST(Predictions, JsonlRoundTrip) {
  const std::vector<PredictionRecord> preds{
      {"a", std::string("1"), 0.75}, {"b", 3.25, std::nullopt}};
  std::stringstream ss;
  WritePredictions(ss, preds);
  EXPECT_EQ(ReadPredictions(ss, "mem"), preds);
  std::istringstream bad("{\"id\":1}\n");
  EXPECT_THROW(ReadPredictions(bad, "mem"), DataError);
}

TEST(MakeClassifier, ParsesUris) {
  EXPECT_EQ(MakeClassifier("builtin:lexicon")->name(), "builtin:lexicon");
  EXPECT_EQ(MakeClassifier("builtin:first-token")->name(), "builtin:first-token");
  EXPECT_EQ(MakeClassifier("builtin:overlap:0.3")->name(), "builtin:overlap");
  EXPECT_EQ(MakeClassifier("builtin:table:" + testing::DataPath("rte_preds.jsonl"))
                ->name(),
            "builtin:table");
  EXPECT_THROW(MakeClassifier("builtin:overlap:zero"), UsageError);
  EXPECT_THROW(MakeClassifier("magic:thing"), UsageError);
  EXPECT_THROW(MakeClassifier("tcp:nohostport"), UsageError);
  EXPECT_THROW(MakeClassifier("builtin:table:/no/such/file"), DataError);
}

}  // namespace
}  // namespace wop

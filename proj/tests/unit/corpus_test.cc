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

#include "wop/corpus.h"

#include <sstream>

#include <gtest/gtest.h>

#include "test_util.h"
#include "wop/error.h"

namespace wop {
namespace {

using testing::DataPath;

TEST(TaskSpec, BuiltinsValidateAndPickTheRightTarget) {
  for (const auto& id : BuiltinTaskIds()) {
    EXPECT_NO_THROW(BuiltinTaskSpec(id).Validate()) << id;
  }
  EXPECT_EQ(BuiltinTaskSpec("rte").target_field, 1u);
  EXPECT_EQ(BuiltinTaskSpec("qnli").field_names[0], "question");
  EXPECT_EQ(BuiltinTaskSpec("qnli").target_field, 0u);
  EXPECT_EQ(BuiltinTaskSpec("qqp").target_field, 0u);
  EXPECT_EQ(BuiltinTaskSpec("mrpc").target_field, 0u);
  EXPECT_EQ(BuiltinTaskSpec("stsb").target_field, 0u);
  EXPECT_TRUE(BuiltinTaskSpec("stsb").is_regression());
  EXPECT_EQ(BuiltinTaskSpec("sst2").positive_label(), "1");
  EXPECT_EQ(BuiltinTaskSpec("rte").negative_label(), "not_entailment");
  EXPECT_THROW(BuiltinTaskSpec("nope"), UsageError);
}

TEST(TaskSpec, ValidateRejectsBrokenSpecs) {
  TaskSpec s = BuiltinTaskSpec("sst2");
  s.target_field = 3;
  EXPECT_THROW(s.Validate(), DataError);
  s = BuiltinTaskSpec("sst2");
  s.label_domain.labels = {"x", "x"};
  EXPECT_THROW(s.Validate(), DataError);
  s = BuiltinTaskSpec("stsb");
  s.label_domain.hi = s.label_domain.lo;
  EXPECT_THROW(s.Validate(), DataError);
}

TEST(ReadTsv, ParsesHeaderAndIds) {
  std::istringstream in("sentence\tlabel\nA fine day.\t1\nAwful.\t0\n");
  const Dataset ds = ReadDataset(in, DataFormat::kTsv, BuiltinTaskSpec("sst2"));
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.examples[0].id, "0");
  EXPECT_EQ(ds.examples[1].id, "1");
  EXPECT_EQ(ds.examples[0].fields[0], "A fine day.");
  EXPECT_EQ(std::get<std::string>(ds.examples[1].gold_label), "0");
}

TEST(ReadTsv, AcceptsGlueIndexColumn) {
  std::istringstream in("index\tsentence\tlabel\n17\tA fine day.\t1\n");
  const Dataset ds = ReadDataset(in, DataFormat::kTsv, BuiltinTaskSpec("sst2"));
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.examples[0].id, "17");
}

TEST(ReadTsv, ErrorsNameTheLine) {
  const auto& spec = BuiltinTaskSpec("sst2");
  auto fails_with = [&](const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    try {
      ReadDataset(in, DataFormat::kTsv, spec);
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos)
          << e.what();
      return;
    }
    ADD_FAILURE() << "no error for: " << text;
  };
  fails_with("sentence\tlabel\nok\t1\nbad row\n", "line 3");
  fails_with("sentence\tlabel\nok\t1\nbad row\n", "malformed row");
  fails_with("sentence\tlabel\nok\t7\n", "unknown label '7'");
  fails_with("text\tlabel\nok\t1\n", "header lacks field 'sentence'");
  fails_with("sentence\tgold\nok\t1\n", "header lacks 'label'");
  fails_with("", "missing header");
}

TEST(ReadTsv, RegressionLabels) {
  const auto& spec = BuiltinTaskSpec("stsb");
  std::istringstream ok("sentence1\tsentence2\tlabel\na b\tc d\t3.8\n");
  const Dataset ds = ReadDataset(ok, DataFormat::kTsv, spec);
  EXPECT_DOUBLE_EQ(std::get<double>(ds.examples[0].gold_label), 3.8);
  std::istringstream out_of_range("sentence1\tsentence2\tlabel\na\tb\t5.5\n");
  EXPECT_THROW(ReadDataset(out_of_range, DataFormat::kTsv, spec), DataError);
  std::istringstream junk("sentence1\tsentence2\tlabel\na\tb\t3x\n");
  EXPECT_THROW(ReadDataset(junk, DataFormat::kTsv, spec), DataError);
}

TEST(ReadJsonl, ParsesAndRejectsMissingFields) {
  const auto& spec = BuiltinTaskSpec("rte");
  std::istringstream in(
      "{\"id\":\"a\",\"sentence1\":\"x y\",\"sentence2\":\"z w\","
      "\"label\":\"entailment\"}\n"
      "{\"id\":5,\"sentence1\":\"x\",\"sentence2\":\"z\","
      "\"label\":\"not_entailment\"}\n");
  const Dataset ds = ReadDataset(in, DataFormat::kJsonl, spec);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.examples[1].id, "5");
  std::istringstream bad("{\"id\":\"a\",\"sentence1\":\"x\",\"label\":\"entailment\"}\n");
  EXPECT_THROW(ReadDataset(bad, DataFormat::kJsonl, spec), DataError);
  std::istringstream garbage("{oops\n");
  EXPECT_THROW(ReadDataset(garbage, DataFormat::kJsonl, spec), DataError);
}

TEST(WriteDataset, RoundTripsBothFormats) {
  const auto& spec = BuiltinTaskSpec("rte");
  const Dataset ds = LoadDataset(DataPath("rte_dev.tsv"), DataFormat::kTsv, spec);
  ASSERT_EQ(ds.size(), 277u);
  for (DataFormat f : {DataFormat::kTsv, DataFormat::kJsonl}) {
    std::stringstream ss;
    WriteDataset(ss, ds, f, spec);
    const Dataset back = ReadDataset(ss, f, spec);
    EXPECT_EQ(back, ds);
  }
}

TEST(WriteDataset, TsvRefusesEmbeddedTabs) {
  Dataset ds;
  ds.examples.push_back(testing::MakeExample("a", {"x\ty"}, std::string("1")));
  std::stringstream ss;
  EXPECT_THROW(WriteDataset(ss, ds, DataFormat::kTsv, BuiltinTaskSpec("sst2")),
               DataError);
}

TEST(DataFormat, FromNameAndPath) {
  EXPECT_EQ(ParseDataFormat("tsv"), DataFormat::kTsv);
  EXPECT_EQ(DataFormatFromPath("a/b.jsonl"), DataFormat::kJsonl);
  EXPECT_EQ(DataFormatFromPath("a/b.tsv"), DataFormat::kTsv);
  EXPECT_THROW(DataFormatFromPath("a/b.csv"), UsageError);
  EXPECT_THROW(ParseDataFormat("xml"), UsageError);
}

std::string Unescape(const std::string& s) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      out.push_back(s[i + 1] == 'n' ? '\n' : s[i + 1] == 't' ? '\t' : s[i + 1]);
      ++i;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

TEST(SplitSentences, HandLabeledCases) {
  const auto lines = testing::Lines(DataPath("split_cases.tsv"));
  ASSERT_EQ(lines.size(), 50u);
  for (const auto& line : lines) {
    const size_t tab = line.find('\t');
    const size_t want = std::stoul(line.substr(0, tab));
    const std::string text = Unescape(line.substr(tab + 1));
    EXPECT_EQ(SplitSentences(text).size(), want) << text;
  }
}

TEST(SplitSentences, PiecesAreTrimmedAndCoverText) {
  const auto parts = SplitSentences("  One thing.   Another thing!  ");
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0], "One thing.");
  EXPECT_EQ(parts[1], "Another thing!");
  EXPECT_TRUE(SplitSentences("   ").empty());
}

TEST(CountWhitespaceTokens, Counts) {
  EXPECT_EQ(CountWhitespaceTokens("a  b\tc"), 3u);
  EXPECT_EQ(CountWhitespaceTokens(""), 0u);
}

}  // namespace
}  // namespace wop

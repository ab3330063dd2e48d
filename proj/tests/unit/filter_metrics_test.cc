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

#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"
#include "wop/error.h"
#include "wop/filter.h"
#include "wop/gateway.h"
#include "wop/lexicon.h"
#include "wop/metrics.h"

namespace wop {
namespace {

using testing::DataPath;
using Counts = std::array<size_t, 4>;

FilterResult RunTableFilter(const std::string& task, uint64_t seed) {
  const auto& spec = BuiltinTaskSpec(task);
  const Dataset ds = LoadDataset(DataPath(task + "_dev.tsv"), DataFormat::kTsv, spec);
  TableClassifier clf(LoadPredictions(DataPath(task + "_preds.jsonl")));
  return FilterExamples(ds, spec, clf, seed);
}

TEST(Filter, RteStepCounts) {
  const FilterResult r = RunTableFilter("rte", 42);
  EXPECT_EQ(r.trace.counts.at("not_entailment"), (Counts{131, 131, 72, 72}));
  EXPECT_EQ(r.trace.counts.at("entailment"), (Counts{146, 145, 127, 72}));
  EXPECT_EQ(r.dataset.size(), 144u);
  EXPECT_EQ(r.trace.dropped_ids[0].size(), 1u);
  EXPECT_EQ(r.trace.dropped_ids[1].size(), 59u + 18u);
  EXPECT_EQ(r.trace.dropped_ids[2].size(), 55u);
}

TEST(Filter, MrpcStepCounts) {
  const FilterResult r = RunTableFilter("mrpc", 42);
  EXPECT_EQ(r.trace.counts.at("0"), (Counts{129, 129, 101, 101}));
  EXPECT_EQ(r.trace.counts.at("1"), (Counts{279, 279, 255, 101}));
}

TEST(Filter, OutputIsCorrectBalancedOrderedAndSeeded) {
  const FilterResult a = RunTableFilter("rte", 1);
  const FilterResult b = RunTableFilter("rte", 1);
  const FilterResult c = RunTableFilter("rte", 2);
  EXPECT_EQ(a.dataset, b.dataset);
  EXPECT_NE(a.dataset, c.dataset);
  const auto& spec = BuiltinTaskSpec("rte");
  const Dataset all = LoadDataset(DataPath("rte_dev.tsv"), DataFormat::kTsv, spec);
  TableClassifier clf(LoadPredictions(DataPath("rte_preds.jsonl")));
  const auto preds = PredictDataset(clf, spec, a.dataset);
  EXPECT_DOUBLE_EQ(Accuracy(preds, a.dataset), 100.0);
  // Survivors keep their source order.
  std::vector<size_t> pos;
  for (const auto& ex : a.dataset.examples) {
    for (size_t i = 0; i < all.size(); ++i) {
      if (all.examples[i].id == ex.id) pos.push_back(i);
    }
  }
  EXPECT_TRUE(std::is_sorted(pos.begin(), pos.end()));
  const Json trace = a.trace.ToJson();
  EXPECT_FALSE(trace.dump().empty());
}

TEST(Filter, LexiconKeepsTheWholeMiniCorpus) {
  const auto& spec = BuiltinTaskSpec("sst2");
  const Dataset ds = LoadDataset(DataPath("sst2_mini.tsv"), DataFormat::kTsv, spec);
  for (const char* uri : {"builtin:lexicon", "builtin:first-token"}) {
    auto clf = MakeClassifier(uri);
    const FilterResult r = FilterExamples(ds, spec, *clf, 3);
    EXPECT_EQ(r.dataset, ds) << uri;
  }
}

TEST(Filter, SentenceRule) {
  EXPECT_TRUE(PassesSentenceFilter("This has four tokens."));
  EXPECT_FALSE(PassesSentenceFilter("Only three tokens."));
  EXPECT_FALSE(PassesSentenceFilter("One sentence here. Another one there."));
  EXPECT_TRUE(PassesSentenceFilter("Mr. Smith met Dr. Jones today."));
}

TEST(Filter, RegressionSkipsClassSteps) {
  const auto& spec = BuiltinTaskSpec("stsb");
  Dataset ds;
  ds.examples.push_back(testing::MakeExample("a", {"one two three four", "x"}, 1.0));
  ds.examples.push_back(testing::MakeExample("b", {"too short", "x"}, 2.0));
  OverlapClassifier clf(0.5);
  const FilterResult r = FilterExamples(ds, spec, clf, 0);
  EXPECT_EQ(r.dataset.size(), 1u);
}

TEST(Wos, KnownAccuraciesRoundAsExpected) {
  const double p[] = {50.69, 75.69, 83.19, 83.89, 84.04, 89.42};
  const double s[] = {0.99, 0.49, 0.34, 0.32, 0.32, 0.21};
  for (int i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(Wos(p[i]).rounded(), s[i]) << p[i];
  }
  EXPECT_DOUBLE_EQ(Wos(100).s, 0.0);
  EXPECT_DOUBLE_EQ(Wos(50).s, 1.0);
}

TEST(Wos, ClampsBelowChanceAndRejectsNonsense) {
  EXPECT_DOUBLE_EQ(Wos(30).s, 1.0);
  EXPECT_THROW(Wos(-1), DataError);
  EXPECT_THROW(Wos(100.5), DataError);
  EXPECT_THROW(Wos(std::nan("")), DataError);
}

TEST(Accuracy, RequiresAlignedIds) {
  Dataset ds;
  ds.examples.push_back(testing::MakeExample("a", {"x"}, std::string("1")));
  ds.examples.push_back(testing::MakeExample("b", {"x"}, std::string("0")));
  std::vector<PredictionRecord> preds{{"a", std::string("1"), 0.9},
                                      {"b", std::string("1"), 0.6}};
  EXPECT_DOUBLE_EQ(Accuracy(preds, ds), 50.0);
  EXPECT_DOUBLE_EQ(MeanConfidence(preds), 0.75);
  preds[1].example_id = "c";
  EXPECT_THROW(Accuracy(preds, ds), DataError);
  preds.pop_back();
  EXPECT_THROW(Accuracy(preds, ds), DataError);
}

double ClosedFormSpearman(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  auto ranks = [&](const std::vector<double>& v) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (size_t k = 0; k < n; ++k) r[idx[k]] = static_cast<double>(k + 1);
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  double d2 = 0;
  for (size_t i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double nn = static_cast<double>(n);
  return 100.0 * (1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0)));
}

TEST(Spearman, MatchesClosedFormWithoutTies) {
  Rng rng(8);
  for (int c = 0; c < 200; ++c) {
    const size_t n = 2 + rng.Uniform(40);
    std::vector<double> x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      x[i] = rng.UniformReal();
      y[i] = rng.UniformReal();
    }
    EXPECT_NEAR(Spearman(x, y), ClosedFormSpearman(x, y), 1e-9);
  }
}

TEST(Spearman, TiesAndEdgeCases) {
  EXPECT_EQ(AverageRanks(std::vector<double>{3, 1, 3, 2}),
            (std::vector<double>{3.5, 1, 3.5, 2}));
  EXPECT_DOUBLE_EQ(Spearman(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}), 100.0);
  EXPECT_DOUBLE_EQ(Spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -100.0);
  EXPECT_THROW(Spearman(std::vector<double>{1, 2}, std::vector<double>{1}), DataError);
  EXPECT_THROW(Spearman(std::vector<double>{1}, std::vector<double>{1}), DataError);
  EXPECT_THROW(Spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
               DataError);
}

TEST(BinScores, UnitBinsPlusTopBin) {
  const std::vector<double> scores{0.0, 0.99, 1.0, 2.5, 3.999, 4.0, 4.5, 5.0, 7.0};
  const auto bins = BinScores(scores);
  EXPECT_EQ(bins, (std::array<size_t, 6>{2, 1, 1, 1, 2, 2}));
  EXPECT_THROW(BinScores(std::vector<double>{-0.1}), DataError);
}

TEST(ConsistencyGroups, LexiconNeverFlips) {
  const auto& spec = BuiltinTaskSpec("sst2");
  const Dataset ds = LoadDataset(DataPath("sst2_mini.tsv"), DataFormat::kTsv, spec);
  LexiconClassifier clf(DefaultLexicon());
  const ConsistencyGroups g = ComputeConsistencyGroups(ds, spec, clf, 5, 42);
  EXPECT_EQ(g.k, 5);
  EXPECT_EQ(g.groups.at(0).size(), ds.size());
  EXPECT_TRUE(g.ToJson()["groups"].contains("0/5"));
}

TEST(ConsistencyGroups, FirstTokenGroupsPartitionIds) {
  const auto& spec = BuiltinTaskSpec("sst2");
  const Dataset ds = LoadDataset(DataPath("sst2_mini.tsv"), DataFormat::kTsv, spec);
  FirstTokenClassifier clf(DefaultLexicon());
  const ConsistencyGroups g = ComputeConsistencyGroups(ds, spec, clf, 5, 42);
  std::multiset<std::string> ids;
  size_t nonzero_groups = 0;
  for (const auto& [m, members] : g.groups) {
    EXPECT_GE(m, 0);
    EXPECT_LE(m, 5);
    nonzero_groups += (m > 0 && !members.empty());
    ids.insert(members.begin(), members.end());
  }
  EXPECT_EQ(ids.size(), ds.size());
  EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), ds.size());
  EXPECT_GT(nonzero_groups, 0u);
  EXPECT_THROW(ComputeConsistencyGroups(ds, spec, clf, 0, 42), UsageError);
}

}  // namespace
}  // namespace wop

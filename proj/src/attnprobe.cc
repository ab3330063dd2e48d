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

#include "wop/attnprobe.h"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "wop/error.h"
#include "wop/metrics.h"
#include "wop/random.h"
#include "wop/text.h"

namespace wop {

namespace {

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

bool EndsWith(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

// Code points of a UTF-8 string. Stray bytes count as one unit each.
std::vector<uint32_t> CodePoints(std::string_view s) {
  std::vector<uint32_t> out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    size_t len = 1;
    uint32_t cp = c;
    if (c >= 0xF0 && c < 0xF8) {
      len = 4;
      cp = c & 0x07;
    } else if (c >= 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if (c >= 0xC0) {
      len = 2;
      cp = c & 0x1F;
    }
    if (len > 1) {
      bool ok = i + len <= s.size();
      for (size_t k = 1; ok && k < len; ++k) {
        const auto cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0) != 0x80) {
          ok = false;
        } else {
          cp = (cp << 6) | (cc & 0x3F);
        }
      }
      if (!ok) {
        len = 1;
        cp = c | 0x80000000u;  // keep stray bytes distinct from code points
      }
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

}  // namespace

std::string NormalizePiece(std::string_view piece) {
  std::string_view p = piece;
  // Ordered longest first so "##" never leaves a stray '#'.
  for (std::string_view marker : {"##", "\xC4\xA0", "\xE2\x96\x81"}) {
    if (StartsWith(p, marker)) {
      p.remove_prefix(marker.size());
      break;
    }
  }
  if (EndsWith(p, "</w>")) p.remove_suffix(4);
  return ToLower(p);
}

std::vector<std::vector<std::string>> FieldWords(const Example& ex) {
  std::vector<std::vector<std::string>> out;
  for (const auto& f : ex.fields) out.push_back(SplitWhitespace(f));
  return out;
}

WordAttention WordLevelAttention(
    const AttentionRecord& rec,
    const std::vector<std::vector<std::string>>& field_words) {
  rec.Validate();
  WordAttention wa;
  wa.example_id = rec.example_id;
  wa.layers = rec.layers;
  wa.heads = rec.heads;
  for (size_t f = 0; f < field_words.size(); ++f) {
    for (const auto& w : field_words[f]) {
      wa.words.push_back(w);
      wa.segment_ids.push_back(static_cast<int>(f));
    }
  }
  const int num_words = wa.num_words();
  const int num_tokens = rec.num_tokens();

  // word_of[t] = word index of token t, -1 for special tokens.
  std::vector<int> word_of(static_cast<size_t>(num_tokens), -1);
  int w = 0;
  std::string remaining;
  bool fresh = true;  // no piece of word w consumed yet
  if (num_words > 0) remaining = ToLower(wa.words[0]);
  for (int t = 0; t < num_tokens; ++t) {
    if (rec.special[static_cast<size_t>(t)]) continue;
    const std::string& token = rec.tokens[static_cast<size_t>(t)];
    const std::string piece = NormalizePiece(token);
    auto fail = [&](const std::string& why) {
      throw DataError("cannot align token '" + token + "' (position " +
                      std::to_string(t) + ") in example '" + rec.example_id +
                      "': " + why);
    };
    if (w >= num_words) fail("no words left");
    if (rec.segment_ids[static_cast<size_t>(t)] != wa.segment_ids[static_cast<size_t>(w)]) {
      fail("segment differs from word '" + wa.words[static_cast<size_t>(w)] + "'");
    }
    if (!StartsWith(remaining, piece)) {
      fail("does not continue word '" + wa.words[static_cast<size_t>(w)] + "'");
    }
    word_of[static_cast<size_t>(t)] = w;
    remaining.erase(0, piece.size());
    fresh = fresh && piece.empty();
    if (remaining.empty() && !fresh) {
      ++w;
      fresh = true;
      if (w < num_words) remaining = ToLower(wa.words[static_cast<size_t>(w)]);
    }
  }
  if (w < num_words) {
    throw DataError("word '" + wa.words[static_cast<size_t>(w)] +
                    "' in example '" + rec.example_id +
                    "' has no matching model tokens");
  }

  std::vector<int> pieces(static_cast<size_t>(num_words), 0);
  for (int t = 0; t < num_tokens; ++t) {
    if (word_of[static_cast<size_t>(t)] >= 0) ++pieces[static_cast<size_t>(word_of[static_cast<size_t>(t)])];
  }
  wa.matrices.reserve(static_cast<size_t>(rec.layers * rec.heads));
  for (int l = 0; l < rec.layers; ++l) {
    for (int h = 0; h < rec.heads; ++h) {
      const auto a = rec.Head(l, h);
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(num_words, num_words);
      for (int q = 0; q < num_tokens; ++q) {
        const int wq = word_of[static_cast<size_t>(q)];
        if (wq < 0) continue;
        for (int k = 0; k < num_tokens; ++k) {
          const int wk = word_of[static_cast<size_t>(k)];
          if (wk < 0) continue;
          m(wq, wk) += static_cast<double>(a(q, k));
        }
      }
      for (int i = 0; i < num_words; ++i) {
        m.row(i) /= static_cast<double>(pieces[static_cast<size_t>(i)]);
      }
      wa.matrices.push_back(std::move(m));
    }
  }
  return wa;
}

CrossDirection ParseCrossDirection(const std::string& name) {
  if (name == "both") return CrossDirection::kBoth;
  if (name == "first-to-second") return CrossDirection::kFirstToSecond;
  if (name == "second-to-first") return CrossDirection::kSecondToFirst;
  throw UsageError("unknown direction '" + name + "'");
}

std::string CrossDirectionName(CrossDirection d) {
  switch (d) {
    case CrossDirection::kBoth:
      return "both";
    case CrossDirection::kFirstToSecond:
      return "first-to-second";
    case CrossDirection::kSecondToFirst:
      return "second-to-first";
  }
  return "both";
}

std::array<CrossCell, 3> Top3Cross(const Eigen::MatrixXd& matrix,
                                   const std::vector<int>& segment_ids,
                                   CrossDirection direction) {
  const auto n = static_cast<int>(segment_ids.size());
  if (matrix.rows() != n || matrix.cols() != n) {
    throw DataError("attention matrix does not match the segment ids");
  }
  std::vector<CrossCell> cells;
  for (int q = 0; q < n; ++q) {
    for (int k = 0; k < n; ++k) {
      const int sq = segment_ids[static_cast<size_t>(q)];
      const int sk = segment_ids[static_cast<size_t>(k)];
      if (sq == sk) continue;
      if (direction == CrossDirection::kFirstToSecond && sq != 0) continue;
      if (direction == CrossDirection::kSecondToFirst && sq != 1) continue;
      cells.push_back({q, k, matrix(q, k)});
    }
  }
  if (cells.size() < 3) {
    throw DataError("fewer than 3 cross-segment cells (" +
                    std::to_string(cells.size()) + ")");
  }
  // Cells are already in (q, k) order, so a stable sort keeps the tie rule.
  std::stable_sort(cells.begin(), cells.end(),
                   [](const CrossCell& a, const CrossCell& b) {
                     return a.weight > b.weight;
                   });
  return {cells[0], cells[1], cells[2]};
}

int Levenshtein(std::string_view a, std::string_view b) {
  const auto x = CodePoints(a);
  const auto y = CodePoints(b);
  std::vector<int> prev(y.size() + 1);
  std::vector<int> cur(y.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (size_t i = 1; i <= x.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= y.size(); ++j) {
      const int sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

Json MatchReport::ToJson() const {
  Json j;
  j["id"] = example_id;
  j["layer"] = layer;
  j["head"] = head;
  Json pairs = Json::array();
  for (const auto& p : top3) {
    pairs.push_back({{"query_word", p.query_word},
                     {"key_word", p.key_word},
                     {"query", p.query},
                     {"key", p.key},
                     {"weight", p.weight},
                     {"edit", p.edit}});
  }
  j["top3"] = std::move(pairs);
  j["total_edit"] = total_edit;
  j["within_budget"] = within_budget;
  return j;
}

MatchReport MatchReport::FromJson(const Json& j) {
  MatchReport r;
  r.example_id = j.at("id").get<std::string>();
  r.layer = j.at("layer").get<int>();
  r.head = j.at("head").get<int>();
  const Json& pairs = j.at("top3");
  if (!pairs.is_array() || pairs.size() != 3) {
    throw DataError("match report '" + r.example_id + "' needs 3 pairs");
  }
  for (size_t i = 0; i < 3; ++i) {
    const Json& p = pairs[i];
    r.top3[i] = {p.at("query_word").get<std::string>(),
                 p.at("key_word").get<std::string>(),
                 p.value("query", 0),
                 p.value("key", 0),
                 p.value("weight", 0.0),
                 p.at("edit").get<int>()};
  }
  r.total_edit = j.at("total_edit").get<int>();
  r.within_budget = r.total_edit <= kEditBudget;
  return r;
}

MatchReport SelectMatrix(const WordAttention& wa, CrossDirection direction) {
  if (wa.layers <= 0 || wa.heads <= 0) {
    throw DataError("attention for '" + wa.example_id + "' has no heads");
  }
  MatchReport best;
  bool have = false;
  for (int l = 0; l < wa.layers; ++l) {
    for (int h = 0; h < wa.heads; ++h) {
      const auto cells = Top3Cross(wa.Head(l, h), wa.segment_ids, direction);
      MatchReport r;
      r.example_id = wa.example_id;
      r.layer = l;
      r.head = h;
      for (size_t i = 0; i < 3; ++i) {
        const auto& c = cells[i];
        WordPair& p = r.top3[i];
        p.query = c.query;
        p.key = c.key;
        p.weight = c.weight;
        p.query_word = wa.words[static_cast<size_t>(c.query)];
        p.key_word = wa.words[static_cast<size_t>(c.key)];
        p.edit = Levenshtein(p.query_word, p.key_word);
        r.total_edit += p.edit;
      }
      r.within_budget = r.total_edit <= kEditBudget;
      // Strict < keeps the lowest (layer, head) on ties.
      if (!have || r.total_edit < best.total_edit) {
        best = std::move(r);
        have = true;
      }
    }
  }
  return best;
}

MatchReport SelectMatrix(const AttentionRecord& rec,
                         const std::vector<std::vector<std::string>>& field_words,
                         CrossDirection direction) {
  return SelectMatrix(WordLevelAttention(rec, field_words), direction);
}

double OverlapScore(const MatchReport& a, const MatchReport& b) {
  bool ok[3][3];
  for (size_t i = 0; i < 3; ++i) {
    for (size_t j = 0; j < 3; ++j) {
      ok[i][j] = Levenshtein(a.top3[i].query_word, b.top3[j].query_word) <= 1 &&
                 Levenshtein(a.top3[i].key_word, b.top3[j].key_word) <= 1;
    }
  }
  std::array<size_t, 3> perm = {0, 1, 2};
  int best = 0;
  do {
    int m = 0;
    for (size_t i = 0; i < 3; ++i) m += ok[i][perm[i]] ? 1 : 0;
    best = std::max(best, m);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / 3.0;
}

Json HeadHistogram::ToJson() const {
  Json j;
  j["total"] = total;
  Json c = Json::array();
  for (const auto& [lh, n] : counts) {
    c.push_back({{"layer", lh.first}, {"head", lh.second}, {"count", n}});
  }
  j["counts"] = std::move(c);
  Json m = Json::object();
  for (const auto& [l, n] : layer_marginals) m[std::to_string(l)] = n;
  j["layer_marginals"] = std::move(m);
  return j;
}

HeadHistogram BuildHeadHistogram(const std::vector<MatchReport>& reports) {
  if (reports.empty()) throw DataError("no match reports");
  HeadHistogram hist;
  for (const auto& r : reports) {
    if (!r.within_budget) continue;
    ++hist.counts[{r.layer, r.head}];
    ++hist.layer_marginals[r.layer];
    ++hist.total;
  }
  return hist;
}

AblationPlan MakeAblationPlan(const HeadHistogram& hist, size_t k,
                              AblationStrategy strategy, uint64_t seed,
                              int layers, int heads_per_layer) {
  if (k == 0) throw UsageError("ablation needs k >= 1");
  AblationPlan plan;
  if (strategy == AblationStrategy::kTopK) {
    if (k > hist.counts.size()) {
      throw UsageError("k=" + std::to_string(k) + " exceeds the " +
                       std::to_string(hist.counts.size()) +
                       " heads in the histogram");
    }
    std::vector<std::pair<std::pair<int, int>, size_t>> ranked(
        hist.counts.begin(), hist.counts.end());
    // Map order is (layer, head) ascending; stable sort keeps it for ties.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (size_t i = 0; i < k; ++i) plan.heads.push_back(ranked[i].first);
    return plan;
  }
  if (layers <= 0 || heads_per_layer <= 0) {
    throw UsageError("random ablation needs the model's layer and head counts");
  }
  const size_t total = static_cast<size_t>(layers) * static_cast<size_t>(heads_per_layer);
  if (k > total) {
    throw UsageError("k=" + std::to_string(k) + " exceeds " +
                     std::to_string(total) + " heads");
  }
  Rng rng(seed);
  for (size_t idx : rng.SampleWithoutReplacement(total, k)) {
    plan.heads.emplace_back(static_cast<int>(idx) / heads_per_layer,
                            static_cast<int>(idx) % heads_per_layer);
  }
  return plan;
}

Json AblationPlanToJson(const AblationPlan& plan) {
  Json heads = Json::array();
  for (const auto& [l, h] : plan.heads) heads.push_back({l, h});
  Json j;
  j["ablate_heads"] = std::move(heads);
  return j;
}

AblationPlan AblationPlanFromJson(const Json& j) {
  AblationPlan plan;
  const Json& heads = j.contains("ablate_heads") ? j.at("ablate_heads") : j;
  if (!heads.is_array()) throw DataError("ablate_heads must be an array");
  for (const auto& pair : heads) {
    if (!pair.is_array() || pair.size() != 2) {
      throw DataError("ablate_heads entries are [l,h]");
    }
    plan.heads.emplace_back(pair[0].get<int>(), pair[1].get<int>());
  }
  plan.Validate();
  return plan;
}

std::vector<AblationRow> AblationEval(
    Classifier& clf, const TaskSpec& spec, const Dataset& ds,
    const std::vector<std::pair<std::string, AblationPlan>>& plans,
    size_t batch_size) {
  if (ds.empty()) throw DataError("ablation needs a non-empty dataset");
  std::vector<AblationRow> rows;
  auto run = [&](const std::string& name, const AblationPlan* plan) {
    const auto preds = PredictDataset(clf, spec, ds, batch_size, plan);
    rows.push_back({name, plan ? plan->heads.size() : 0,
                    Accuracy(preds, ds), ds.size()});
  };
  run("baseline", nullptr);
  for (const auto& [name, plan] : plans) {
    plan.Validate();
    run(name, &plan);
  }
  return rows;
}

void WriteMatchReportsTsv(std::ostream& out,
                          const std::vector<MatchReport>& reports) {
  out << "id\tlayer\thead\tpair1\tpair2\tpair3\ttotal_edit\twithin_budget\n";
  for (const auto& r : reports) {
    out << r.example_id << '\t' << r.layer << '\t' << r.head;
    for (const auto& p : r.top3) {
      out << '\t' << p.query_word << "->" << p.key_word << ':'
          << FormatFixed(p.weight, 4);
    }
    out << '\t' << r.total_edit << '\t' << (r.within_budget ? "true" : "false")
        << '\n';
  }
}

void WriteHistogramTsv(std::ostream& out, const HeadHistogram& hist) {
  out << "layer\thead\tcount\n";
  for (const auto& [lh, n] : hist.counts) {
    out << lh.first << '\t' << lh.second << '\t' << n << '\n';
  }
}

void WriteAblationTsv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "plan\theads\tn\taccuracy\n";
  for (const auto& r : rows) {
    out << r.name << '\t' << r.heads << '\t' << r.n << '\t'
        << FormatFixed(r.accuracy, 2) << '\n';
  }
}

}  // namespace wop

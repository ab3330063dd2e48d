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

#include "wop/lexicon.h"

#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <vector>

#include <spdlog/spdlog.h>

#include "wop/error.h"
#include "wop/text.h"

namespace wop {

PolarityLexicon::PolarityLexicon(
    Kind kind, std::map<std::string, double, std::less<>> entries)
    : kind_(kind), entries_(std::move(entries)) {
  for (const auto& [word, polarity] : entries_) {
    if (word.empty() || word != ToLower(word)) {
      throw DataError("lexicon key '" + word + "' is not a lowercase word");
    }
    if (polarity < -1.0 || polarity > 1.0) {
      throw DataError("lexicon polarity for '" + word + "' outside [-1, 1]");
    }
  }
}

std::optional<double> PolarityLexicon::Lookup(std::string_view token) const {
  const std::string key = NormalizeWord(token);
  if (key.empty()) return std::nullopt;
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::vector<std::string> ReadWordList(std::istream& in) {
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view t = Trim(line);
    if (t.empty() || t.front() == ';') continue;
    words.push_back(ToLower(t));
  }
  return words;
}

}  // namespace

PolarityLexicon ReadBinaryLexicon(std::istream& positive,
                                  std::istream& negative) {
  const auto pos = ReadWordList(positive);
  const auto neg = ReadWordList(negative);
  const std::set<std::string> neg_set(neg.begin(), neg.end());
  std::map<std::string, double, std::less<>> entries;
  std::set<std::string> ambiguous;
  for (const auto& w : pos) {
    if (neg_set.count(w)) {
      ambiguous.insert(w);
    } else {
      entries[w] = 1.0;
    }
  }
  for (const auto& w : neg) {
    if (!ambiguous.count(w)) entries[w] = -1.0;
  }
  if (!ambiguous.empty()) {
    spdlog::warn("dropped {} words listed as both positive and negative",
                 ambiguous.size());
  }
  return PolarityLexicon(PolarityLexicon::Kind::kBinaryList, std::move(entries));
}

PolarityLexicon LoadBinaryLexicon(const std::string& positive_path,
                                  const std::string& negative_path) {
  std::ifstream pos(positive_path);
  if (!pos) throw DataError("cannot open '" + positive_path + "'");
  std::ifstream neg(negative_path);
  if (!neg) throw DataError("cannot open '" + negative_path + "'");
  return ReadBinaryLexicon(pos, neg);
}

PolarityLexicon ReadSignedList(std::istream& in) {
  std::map<std::string, double, std::less<>> entries;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view t = Trim(line);
    if (t.empty() || t.front() == ';') continue;
    if (t.size() < 2 || (t.front() != '+' && t.front() != '-')) {
      throw DataError("lexicon line " + std::to_string(line_no) +
                      ": expected +word or -word");
    }
    entries[ToLower(t.substr(1))] = t.front() == '+' ? 1.0 : -1.0;
  }
  return PolarityLexicon(PolarityLexicon::Kind::kBinaryList, std::move(entries));
}

PolarityLexicon ReadScoredLexicon(std::istream& in) {
  std::map<std::string, std::pair<double, int>> sums;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view t = Trim(line);
    if (t.empty() || t.front() == ';' || t.front() == '#') continue;
    const size_t tab = t.find('\t');
    if (tab == std::string_view::npos) {
      throw DataError("lexicon line " + std::to_string(line_no) +
                      ": expected word<TAB>score");
    }
    std::string_view word = t.substr(0, tab);
    if (size_t hash = word.find('#'); hash != std::string_view::npos) {
      word = word.substr(0, hash);
    }
    std::string_view num = Trim(t.substr(tab + 1));
    double score = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), score);
    if (ec != std::errc() || ptr != num.data() + num.size()) {
      throw DataError("lexicon line " + std::to_string(line_no) +
                      ": bad score '" + std::string(num) + "'");
    }
    auto& [sum, count] = sums[ToLower(word)];
    sum += score;
    ++count;
  }
  std::map<std::string, double, std::less<>> entries;
  for (const auto& [w, sc] : sums) entries[w] = sc.first / sc.second;
  return PolarityLexicon(PolarityLexicon::Kind::kScored, std::move(entries));
}

PolarityLexicon LoadScoredLexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return ReadScoredLexicon(in);
}

PolarityLexicon LoadLexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  bool scored = false;
  while (std::getline(in, line)) {
    std::string_view t = Trim(line);
    if (t.empty() || t.front() == ';' || t.front() == '#') continue;
    scored = t.find('\t') != std::string_view::npos;
    break;
  }
  in.clear();
  in.seekg(0);
  return scored ? ReadScoredLexicon(in) : ReadSignedList(in);
}

const PolarityLexicon& DefaultLexicon() {
  static const auto* lexicon = [] {
    std::map<std::string, double, std::less<>> entries;
    for (const char* w :
         {"good", "great", "excellent", "wonderful", "thrilling", "brilliant",
          "delightful", "superb", "beautiful", "charming", "funny", "enjoyable",
          "fresh", "smart", "touching", "love", "best", "masterful",
          "engaging", "gorgeous", "powerful", "remarkable", "stunning",
          "witty", "warm", "clever", "compelling", "moving", "fine", "solid"}) {
      entries[w] = 1.0;
    }
    for (const char* w :
         {"bad", "awful", "terrible", "boring", "dull", "tedious", "mess",
          "worst", "weak", "lame", "stupid", "bland", "clumsy", "predictable",
          "pointless", "flat", "tiresome", "disappointing", "poor", "ugly",
          "annoying", "hollow", "lifeless", "painful", "forgettable",
          "shallow", "sloppy", "mediocre", "cheap", "horrible"}) {
      entries[w] = -1.0;
    }
    return new PolarityLexicon(PolarityLexicon::Kind::kBinaryList,
                               std::move(entries));
  }();
  return *lexicon;
}

}  // namespace wop

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

#ifndef WOP_LEXICON_H_
#define WOP_LEXICON_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace wop {

// Word polarities keyed by lowercase word. binary_list lexicons hold +-1;
// scored lexicons hold reals in [-1, 1].
class PolarityLexicon {
 public:
  enum class Kind { kBinaryList, kScored };

  PolarityLexicon() = default;
  PolarityLexicon(Kind kind, std::map<std::string, double, std::less<>> entries);

  Kind kind() const { return kind_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<std::string, double, std::less<>>& entries() const {
    return entries_;
  }

  // Looks up NormalizeWord(token).
  std::optional<double> Lookup(std::string_view token) const;

 private:
  Kind kind_ = Kind::kBinaryList;
  std::map<std::string, double, std::less<>> entries_;
};

// Opinion-Lexicon style: one word per line, ';' starts a comment line. Words
// present in both lists are ambiguous and dropped.
PolarityLexicon ReadBinaryLexicon(std::istream& positive, std::istream& negative);
PolarityLexicon LoadBinaryLexicon(const std::string& positive_path,
                                  const std::string& negative_path);

// One file with lines "+word" / "-word" (blank and ';' lines skipped).
PolarityLexicon ReadSignedList(std::istream& in);

// SentiWords style "word[#pos]\tscore". Entries for the same word under
// several parts of speech are averaged.
PolarityLexicon ReadScoredLexicon(std::istream& in);
PolarityLexicon LoadScoredLexicon(const std::string& path);

// Picks the reader by content: a tab on the first data line means scored,
// otherwise a signed list.
PolarityLexicon LoadLexicon(const std::string& path);

// A small built-in sentiment list used by the default lexicon classifier.
const PolarityLexicon& DefaultLexicon();

}  // namespace wop

#endif  // WOP_LEXICON_H_

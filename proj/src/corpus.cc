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

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "wop/error.h"
#include "wop/json.h"
#include "wop/text.h"

namespace wop {

LabelDomain LabelDomain::Binary(std::string negative, std::string positive) {
  LabelDomain d;
  d.labels = {std::move(negative), std::move(positive)};
  return d;
}

LabelDomain LabelDomain::Range(double lo, double hi) {
  LabelDomain d;
  d.regression = true;
  d.lo = lo;
  d.hi = hi;
  return d;
}

const std::string& TaskSpec::negative_label() const {
  if (is_regression()) throw UsageError(task_id + " has no class labels");
  return label_domain.labels[0];
}

const std::string& TaskSpec::positive_label() const {
  if (is_regression()) throw UsageError(task_id + " has no class labels");
  return label_domain.labels[1];
}

void TaskSpec::Validate() const {
  if (field_names.empty()) throw DataError(task_id + ": no fields");
  if (target_field >= field_names.size()) {
    throw DataError(task_id + ": target field out of range");
  }
  if (label_domain.regression) {
    if (!(label_domain.lo < label_domain.hi)) {
      throw DataError(task_id + ": regression range needs lo < hi");
    }
  } else if (label_domain.labels.size() != 2 ||
             label_domain.labels[0] == label_domain.labels[1]) {
    throw DataError(task_id + ": binary tasks need exactly 2 labels");
  }
}

namespace {

TaskSpec MakeSpec(std::string id, TaskKind kind, std::vector<std::string> f,
                  size_t target, LabelDomain domain) {
  TaskSpec s{std::move(id), kind, std::move(f), target, std::move(domain)};
  s.Validate();
  return s;
}

const std::map<std::string, TaskSpec, std::less<>>& BuiltinSpecs() {
  static const auto* specs = new std::map<std::string, TaskSpec, std::less<>>{
      {"cola", MakeSpec("cola", TaskKind::kSingleSentence, {"sentence"}, 0,
                        LabelDomain::Binary("0", "1"))},
      {"sst2", MakeSpec("sst2", TaskKind::kSingleSentence, {"sentence"}, 0,
                        LabelDomain::Binary("0", "1"))},
      {"mrpc", MakeSpec("mrpc", TaskKind::kSequencePair,
                        {"sentence1", "sentence2"}, 0,
                        LabelDomain::Binary("0", "1"))},
      {"qqp", MakeSpec("qqp", TaskKind::kSequencePair,
                       {"question1", "question2"}, 0,
                       LabelDomain::Binary("0", "1"))},
      {"stsb", MakeSpec("stsb", TaskKind::kPairRegression,
                        {"sentence1", "sentence2"}, 0,
                        LabelDomain::Range(0.0, 5.0))},
      // Premises are often multi-sentence, so the hypothesis is perturbed.
      {"rte", MakeSpec("rte", TaskKind::kSequencePair,
                       {"sentence1", "sentence2"}, 1,
                       LabelDomain::Binary("not_entailment", "entailment"))},
      // Answers are paragraphs, so the question is perturbed.
      {"qnli", MakeSpec("qnli", TaskKind::kSequencePair,
                        {"question", "sentence"}, 0,
                        LabelDomain::Binary("not_entailment", "entailment"))},
      {"synthetic", MakeSpec("synthetic", TaskKind::kSingleSentence, {"text"},
                             0, LabelDomain::Binary("fake", "real"))},
  };
  return *specs;
}

}  // namespace

const TaskSpec& BuiltinTaskSpec(std::string_view task_id) {
  const auto& specs = BuiltinSpecs();
  auto it = specs.find(task_id);
  if (it == specs.end()) {
    throw UsageError("unknown task '" + std::string(task_id) + "'");
  }
  return it->second;
}

std::vector<std::string> BuiltinTaskIds() {
  std::vector<std::string> ids;
  for (const auto& [id, spec] : BuiltinSpecs()) ids.push_back(id);
  return ids;
}

std::string LabelToString(const Label& label) {
  if (const auto* s = std::get_if<std::string>(&label)) return *s;
  return FormatDouble(std::get<double>(label));
}

bool LabelsEqual(const Label& a, const Label& b) { return a == b; }

bool operator==(const Example& a, const Example& b) {
  return a.id == b.id && a.fields == b.fields &&
         a.gold_label == b.gold_label && a.split == b.split;
}

DataFormat ParseDataFormat(std::string_view name) {
  if (name == "tsv") return DataFormat::kTsv;
  if (name == "jsonl") return DataFormat::kJsonl;
  throw UsageError("unknown data format '" + std::string(name) + "'");
}

DataFormat DataFormatFromPath(std::string_view path) {
  if (path.ends_with(".tsv")) return DataFormat::kTsv;
  if (path.ends_with(".jsonl") || path.ends_with(".json")) {
    return DataFormat::kJsonl;
  }
  throw UsageError("cannot infer data format from '" + std::string(path) +
                   "'; pass --format");
}

namespace {

std::string LinePrefix(size_t line_no) {
  return "line " + std::to_string(line_no) + ": ";
}

Label ParseLabel(std::string_view raw, const TaskSpec& spec, size_t line_no) {
  if (spec.is_regression()) {
    double v = 0.0;
    const auto* end = raw.data() + raw.size();
    auto [ptr, ec] = std::from_chars(raw.data(), end, v);
    if (ec != std::errc() || ptr != end) {
      throw DataError(LinePrefix(line_no) + "unknown label '" +
                      std::string(raw) + "'");
    }
    return v;
  }
  return std::string(raw);
}

void ValidateAt(const Example& ex, const TaskSpec& spec, size_t line_no) {
  try {
    ValidateExample(ex, spec);
  } catch (const DataError& e) {
    throw DataError(LinePrefix(line_no) + e.what());
  }
}

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> cols;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

Dataset ReadTsv(std::istream& in, const TaskSpec& spec, Split split) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("line 1: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = SplitTabs(line);

  auto column_of = [&](const std::string& name) -> std::optional<size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<size_t>(it - header.begin());
  };
  std::vector<size_t> field_cols;
  for (const auto& name : spec.field_names) {
    auto col = column_of(name);
    if (!col) throw DataError("line 1: header lacks field '" + name + "'");
    field_cols.push_back(*col);
  }
  const auto label_col = column_of("label");
  if (!label_col) throw DataError("line 1: header lacks 'label'");
  // GLUE files name the id column "index" or "idx".
  auto id_col = column_of("id");
  if (!id_col) id_col = column_of("idx");
  if (!id_col) id_col = column_of("index");

  Dataset ds;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cols = SplitTabs(line);
    if (cols.size() != header.size()) {
      throw DataError(LinePrefix(line_no) + "malformed row: expected " +
                      std::to_string(header.size()) + " columns, got " +
                      std::to_string(cols.size()));
    }
    Example ex;
    ex.id = id_col ? cols[*id_col] : std::to_string(ds.size());
    for (size_t c : field_cols) ex.fields.push_back(cols[c]);
    ex.gold_label = ParseLabel(cols[*label_col], spec, line_no);
    ex.split = split;
    ValidateAt(ex, spec, line_no);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

Dataset ReadJsonl(std::istream& in, const TaskSpec& spec, Split split) {
  Dataset ds;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json obj;
    try {
      obj = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw DataError(LinePrefix(line_no) + "malformed row: " + e.what());
    }
    if (!obj.is_object()) {
      throw DataError(LinePrefix(line_no) + "malformed row: not an object");
    }
    Example ex;
    ex.split = split;
    if (auto it = obj.find("id"); it != obj.end()) {
      ex.id = it->is_string() ? it->get<std::string>() : it->dump();
    } else {
      ex.id = std::to_string(ds.size());
    }
    for (const auto& name : spec.field_names) {
      auto it = obj.find(name);
      if (it == obj.end() || !it->is_string()) {
        throw DataError(LinePrefix(line_no) + "malformed row: missing field '" +
                        name + "'");
      }
      ex.fields.push_back(it->get<std::string>());
    }
    auto label = obj.find("label");
    if (label == obj.end()) {
      throw DataError(LinePrefix(line_no) + "malformed row: missing label");
    }
    if (spec.is_regression()) {
      if (label->is_number()) {
        ex.gold_label = label->get<double>();
      } else if (label->is_string()) {
        ex.gold_label = ParseLabel(label->get<std::string>(), spec, line_no);
      } else {
        throw DataError(LinePrefix(line_no) + "unknown label '" +
                        label->dump() + "'");
      }
    } else {
      ex.gold_label = label->is_string() ? label->get<std::string>()
                                         : label->dump();
    }
    ValidateAt(ex, spec, line_no);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

}  // namespace

void ValidateExample(const Example& ex, const TaskSpec& spec) {
  if (ex.fields.size() != spec.field_names.size()) {
    throw DataError("example '" + ex.id + "' has " +
                    std::to_string(ex.fields.size()) + " fields, task " +
                    spec.task_id + " expects " +
                    std::to_string(spec.field_names.size()));
  }
  const auto& dom = spec.label_domain;
  if (dom.regression) {
    const double* v = std::get_if<double>(&ex.gold_label);
    if (v == nullptr || !(*v >= dom.lo && *v <= dom.hi)) {
      throw DataError("unknown label '" + LabelToString(ex.gold_label) +
                      "' (outside [" + FormatDouble(dom.lo) + ", " +
                      FormatDouble(dom.hi) + "])");
    }
  } else {
    const std::string* s = std::get_if<std::string>(&ex.gold_label);
    if (s == nullptr ||
        std::find(dom.labels.begin(), dom.labels.end(), *s) ==
            dom.labels.end()) {
      throw DataError("unknown label '" + LabelToString(ex.gold_label) + "'");
    }
  }
}

Dataset ReadDataset(std::istream& in, DataFormat format, const TaskSpec& spec,
                    Split split) {
  spec.Validate();
  return format == DataFormat::kTsv ? ReadTsv(in, spec, split)
                                    : ReadJsonl(in, spec, split);
}

Dataset LoadDataset(const std::string& path, DataFormat format,
                    const TaskSpec& spec, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return ReadDataset(in, format, spec, split);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void WriteDataset(std::ostream& out, const Dataset& ds, DataFormat format,
                  const TaskSpec& spec) {
  if (format == DataFormat::kTsv) {
    out << "id";
    for (const auto& name : spec.field_names) out << '\t' << name;
    out << "\tlabel\n";
    for (const auto& ex : ds.examples) {
      auto check = [&](const std::string& s) -> const std::string& {
        if (s.find_first_of("\t\n\r") != std::string::npos) {
          throw DataError("example '" + ex.id +
                          "' contains a tab or newline; use jsonl");
        }
        return s;
      };
      out << check(ex.id);
      for (const auto& f : ex.fields) out << '\t' << check(f);
      out << '\t' << LabelToString(ex.gold_label) << '\n';
    }
    return;
  }
  for (const auto& ex : ds.examples) {
    Json obj;
    obj["id"] = ex.id;
    for (size_t i = 0; i < spec.field_names.size(); ++i) {
      obj[spec.field_names[i]] = ex.fields.at(i);
    }
    if (const auto* s = std::get_if<std::string>(&ex.gold_label)) {
      obj["label"] = *s;
    } else {
      obj["label"] = std::get<double>(ex.gold_label);
    }
    out << obj.dump() << '\n';
  }
}

namespace {

bool IsSentenceEnd(char c) { return c == '.' || c == '!' || c == '?'; }

bool IsCloser(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

bool IsOpener(char c) {
  return c == '"' || c == '\'' || c == '(' || c == '[' || c == '`';
}

// Curly quotes arrive as UTF-8: U+2018..U+201D are E2 80 98..9D.
size_t Utf8QuoteLength(std::string_view s, size_t i) {
  if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
      static_cast<unsigned char>(s[i + 1]) == 0x80) {
    const auto c = static_cast<unsigned char>(s[i + 2]);
    if (c >= 0x98 && c <= 0x9D) return 3;
  }
  return 0;
}

const std::set<std::string, std::less<>>& Abbreviations() {
  static const auto* abbrevs = new std::set<std::string, std::less<>>{
      "mr",   "mrs",  "ms",   "dr",   "prof", "sr",    "jr",   "st",
      "vs",   "etc",  "e.g",  "i.e",  "inc",  "ltd",   "co",   "corp",
      "gen",  "gov",  "sen",  "rep",  "jan",  "feb",   "mar",  "apr",
      "jun",  "jul",  "aug",  "sep",  "sept", "oct",   "nov",  "dec",
      "mt",   "ft",   "lt",   "col",  "capt", "sgt",   "rev",  "fig",
      "approx", "dept", "est", "a.m", "p.m",  "ph.d",  "u.s",  "u.k",
      "messrs", "hon", "cf",  "al",   "vol",  "pp",    "jr",   "bros"};
  return *abbrevs;
}

// Whether the period at `dot` ends an abbreviation-like word.
bool IsAbbreviationDot(std::string_view text, size_t dot) {
  size_t begin = dot;
  while (begin > 0 &&
         !std::isspace(static_cast<unsigned char>(text[begin - 1]))) {
    --begin;
  }
  std::string word;
  for (size_t i = begin; i < dot; ++i) {
    const char c = text[i];
    if (word.empty() && (IsOpener(c) || c == '(')) continue;
    word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (word.empty()) return false;
  if (Abbreviations().count(word) > 0) return true;
  // Single-letter initial such as "J." in "J. K. Rowling".
  if (word.size() == 1 && std::isalpha(static_cast<unsigned char>(word[0]))) {
    return true;
  }
  // Dotted acronyms such as "U.S.A".
  if (word.find('.') != std::string::npos &&
      std::all_of(word.begin(), word.end(), [](char c) {
        return c == '.' || std::isalpha(static_cast<unsigned char>(c));
      })) {
    return true;
  }
  return false;
}

void PushTrimmed(std::vector<std::string>& out, std::string_view s) {
  const std::string_view t = Trim(s);
  if (!t.empty()) out.emplace_back(t);
}

}  // namespace

std::vector<std::string> SplitSentences(std::string_view text) {
  std::vector<std::string> sentences;
  size_t start = 0;
  size_t i = 0;
  while (i < text.size()) {
    if (!IsSentenceEnd(text[i])) {
      ++i;
      continue;
    }
    const size_t first_mark = i;
    size_t j = i;
    while (j < text.size() && IsSentenceEnd(text[j])) ++j;
    const bool single_dot = (j == first_mark + 1 && text[first_mark] == '.');
    while (j < text.size()) {
      if (IsCloser(text[j])) {
        ++j;
      } else if (size_t q = Utf8QuoteLength(text, j); q > 0) {
        j += q;
      } else {
        break;
      }
    }
    if (j >= text.size() ||
        !std::isspace(static_cast<unsigned char>(text[j]))) {
      i = j;
      continue;
    }
    size_t k = j;
    while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) {
      ++k;
    }
    if (k >= text.size()) break;
    const auto next = static_cast<unsigned char>(text[k]);
    const bool starts_new = std::isupper(next) || std::isdigit(next) ||
                            IsOpener(text[k]) || Utf8QuoteLength(text, k) > 0;
    if (starts_new && !(single_dot && IsAbbreviationDot(text, first_mark))) {
      PushTrimmed(sentences, text.substr(start, j - start));
      start = k;
    }
    i = k;
  }
  PushTrimmed(sentences, text.substr(start));
  return sentences;
}

size_t CountWhitespaceTokens(std::string_view text) {
  return SplitWhitespace(text).size();
}

}  // namespace wop

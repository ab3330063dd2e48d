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

// GLUE-style task descriptors, labeled examples and their on-disk formats.

#ifndef WOP_CORPUS_H_
#define WOP_CORPUS_H_

#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wop {

enum class TaskKind { kSingleSentence, kSequencePair, kPairRegression };

// Either a closed set of two class labels or a closed real interval.
struct LabelDomain {
  bool regression = false;
  // Binary tasks: {negative, positive}. "Positive" is the second entry
  // (acceptable, positive, equivalent, duplicate, entailment, real).
  std::vector<std::string> labels;
  double lo = 0.0;
  double hi = 0.0;

  static LabelDomain Binary(std::string negative, std::string positive);
  static LabelDomain Range(double lo, double hi);
};

struct TaskSpec {
  std::string task_id;
  TaskKind kind = TaskKind::kSingleSentence;
  std::vector<std::string> field_names;
  size_t target_field = 0;
  LabelDomain label_domain;

  bool is_regression() const { return label_domain.regression; }
  const std::string& negative_label() const;
  const std::string& positive_label() const;

  // Throws DataError when an invariant does not hold.
  void Validate() const;
};

// Built-in specs for cola, sst2, mrpc, qqp, stsb, rte, qnli and the
// single-field "synthetic" real/fake task. Throws UsageError otherwise.
const TaskSpec& BuiltinTaskSpec(std::string_view task_id);
std::vector<std::string> BuiltinTaskIds();

// A class name for binary tasks or a real score for regression tasks.
using Label = std::variant<std::string, double>;

std::string LabelToString(const Label& label);
bool LabelsEqual(const Label& a, const Label& b);

enum class Split { kTrain, kDev };

struct Example {
  std::string id;
  std::vector<std::string> fields;
  Label gold_label;
  Split split = Split::kDev;

  const std::string& target(const TaskSpec& spec) const {
    return fields[spec.target_field];
  }
};

struct Dataset {
  std::vector<Example> examples;

  size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

bool operator==(const Example& a, const Example& b);
inline bool operator==(const Dataset& a, const Dataset& b) {
  return a.examples == b.examples;
}

enum class DataFormat { kTsv, kJsonl };

DataFormat ParseDataFormat(std::string_view name);
// Picks the format from the file extension (.tsv or .jsonl/.json).
DataFormat DataFormatFromPath(std::string_view path);

// TSV: header row naming every spec field and "label"; an "id" column is
// optional and other columns are ignored. JSONL: one object per line with the
// same keys. Missing ids become the 0-based data row index.
Dataset ReadDataset(std::istream& in, DataFormat format, const TaskSpec& spec,
                    Split split = Split::kDev);
Dataset LoadDataset(const std::string& path, DataFormat format,
                    const TaskSpec& spec, Split split = Split::kDev);

// Always writes an id column/key so that reloading preserves ids.
void WriteDataset(std::ostream& out, const Dataset& ds, DataFormat format,
                  const TaskSpec& spec);

// Checks field counts and label domains. Throws DataError.
void ValidateExample(const Example& ex, const TaskSpec& spec);

// Rule-based sentence splitter. A boundary is a run of [.!?] (optionally
// followed by closing quotes or brackets), then whitespace, then an
// uppercase letter, digit, or opening quote/bracket. Periods ending a known
// abbreviation, a single-letter initial, or a dotted acronym are not
// boundaries. Empty input yields an empty list.
std::vector<std::string> SplitSentences(std::string_view text);

// Whitespace token count, punctuation attached.
size_t CountWhitespaceTokens(std::string_view text);

}  // namespace wop

#endif  // WOP_CORPUS_H_

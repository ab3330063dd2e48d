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

// Attention tensors exported by a classifier, and the ATTN1 file format:
//
//   bytes 0..4   "ATTN1"
//   u32 LE       L (layers)
//   u32 LE       H (heads per layer)
//   u32 LE       T (tokens)
//   f32 LE       L*H*T*T weights, index ((l*H + h)*T + query)*T + key
//   rest         UTF-8 JSON trailer:
//                {"id":..,"tokens":[..],"segment_ids":[..],"special":[..]}

#ifndef WOP_ATTENTION_H_
#define WOP_ATTENTION_H_

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

#include "wop/json.h"

namespace wop {

struct AttentionRecord {
  using HeadMatrix =
      Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>;

  std::string example_id;
  std::vector<std::string> tokens;
  // 0 for the first field, 1 for the second. Special tokens carry the
  // segment of the field they delimit and are flagged in `special`.
  std::vector<int> segment_ids;
  std::vector<bool> special;
  int layers = 0;
  int heads = 0;
  std::vector<float> weights;

  int num_tokens() const { return static_cast<int>(tokens.size()); }

  // Rows are queries, columns keys.
  HeadMatrix Head(int layer, int head) const;

  // Shape and metadata checks, plus every row summing to 1 +- tolerance.
  // Throws DataError ("unnormalized attention" for the latter).
  void Validate(double tolerance = 1e-3) const;

  bool operator==(const AttentionRecord&) const = default;
};

void WriteAttn1(std::ostream& out, const AttentionRecord& rec);
// Validates before returning.
AttentionRecord ReadAttn1(std::istream& in);

void SaveAttn1(const std::string& path, const AttentionRecord& rec);
AttentionRecord LoadAttn1(const std::string& path);

// Inline JSON form used by the protocol for small tensors:
// {"id","tokens","segment_ids","special","layers","heads","attn":[L][H][T][T]}
Json AttentionToJson(const AttentionRecord& rec);
AttentionRecord AttentionFromJson(const Json& j);

}  // namespace wop

#endif  // WOP_ATTENTION_H_

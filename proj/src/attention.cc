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

#include "wop/attention.h"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "wop/error.h"

namespace wop {

namespace {

constexpr char kMagic[] = {'A', 'T', 'T', 'N', '1'};
constexpr uint32_t kMaxDim = 1u << 16;

void PutU32(std::ostream& out, uint32_t v) {
  const std::array<char, 4> b = {
      static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
      static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b.data(), 4);
}

uint32_t GetU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

Json MetadataJson(const AttentionRecord& rec) {
  Json j;
  j["id"] = rec.example_id;
  j["tokens"] = rec.tokens;
  j["segment_ids"] = rec.segment_ids;
  Json special = Json::array();
  for (bool s : rec.special) special.push_back(s);
  j["special"] = std::move(special);
  return j;
}

void ReadMetadata(const Json& j, AttentionRecord& rec) {
  try {
    rec.example_id = j.at("id").get<std::string>();
    rec.tokens = j.at("tokens").get<std::vector<std::string>>();
    rec.segment_ids = j.at("segment_ids").get<std::vector<int>>();
    rec.special.clear();
    if (auto it = j.find("special"); it != j.end()) {
      for (const auto& s : *it) rec.special.push_back(s.get<bool>());
    } else {
      rec.special.assign(rec.tokens.size(), false);
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("attention metadata: ") + e.what());
  }
}

}  // namespace

AttentionRecord::HeadMatrix AttentionRecord::Head(int layer, int head) const {
  const int t = num_tokens();
  const size_t offset =
      (static_cast<size_t>(layer) * heads + head) * static_cast<size_t>(t) * t;
  return HeadMatrix(weights.data() + offset, t, t);
}

void AttentionRecord::Validate(double tolerance) const {
  const size_t t = tokens.size();
  if (layers <= 0 || heads <= 0 || t == 0) {
    throw DataError("attention '" + example_id + "': empty tensor");
  }
  if (segment_ids.size() != t || special.size() != t) {
    throw DataError("attention '" + example_id +
                    "': token metadata length mismatch");
  }
  for (int s : segment_ids) {
    if (s != 0 && s != 1) {
      throw DataError("attention '" + example_id + "': segment ids must be 0/1");
    }
  }
  if (weights.size() != static_cast<size_t>(layers) * heads * t * t) {
    throw DataError("attention '" + example_id + "': tensor size mismatch");
  }
  for (int l = 0; l < layers; ++l) {
    for (int h = 0; h < heads; ++h) {
      const Eigen::VectorXd sums = Head(l, h).cast<double>().rowwise().sum();
      for (Eigen::Index q = 0; q < sums.size(); ++q) {
        if (!(std::abs(sums[q] - 1.0) <= tolerance)) {
          throw DataError("unnormalized attention in '" + example_id +
                          "' at layer " + std::to_string(l) + " head " +
                          std::to_string(h) + " row " + std::to_string(q));
        }
      }
    }
  }
}

void WriteAttn1(std::ostream& out, const AttentionRecord& rec) {
  static_assert(sizeof(float) == 4);
  out.write(kMagic, sizeof(kMagic));
  PutU32(out, static_cast<uint32_t>(rec.layers));
  PutU32(out, static_cast<uint32_t>(rec.heads));
  PutU32(out, static_cast<uint32_t>(rec.tokens.size()));
  for (float w : rec.weights) {
    PutU32(out, std::bit_cast<uint32_t>(w));
  }
  out << MetadataJson(rec).dump();
}

AttentionRecord ReadAttn1(std::istream& in) {
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  constexpr size_t kHeader = sizeof(kMagic) + 12;
  if (bytes.size() < kHeader ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not an ATTN1 file");
  }
  const uint32_t l = GetU32(p + 5);
  const uint32_t h = GetU32(p + 9);
  const uint32_t t = GetU32(p + 13);
  if (l == 0 || h == 0 || t == 0 || l > kMaxDim || h > kMaxDim || t > kMaxDim) {
    throw DataError("ATTN1 header has invalid dimensions");
  }
  const size_t count = static_cast<size_t>(l) * h * t * t;
  if (bytes.size() < kHeader + 4 * count) throw DataError("ATTN1 file truncated");

  AttentionRecord rec;
  rec.layers = static_cast<int>(l);
  rec.heads = static_cast<int>(h);
  rec.weights.resize(count);
  for (size_t i = 0; i < count; ++i) {
    rec.weights[i] = std::bit_cast<float>(GetU32(p + kHeader + 4 * i));
  }
  Json trailer;
  try {
    trailer = Json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(kHeader + 4 * count),
                          bytes.end());
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("ATTN1 trailer: ") + e.what());
  }
  ReadMetadata(trailer, rec);
  if (rec.tokens.size() != t) {
    throw DataError("ATTN1 trailer token count does not match header");
  }
  rec.Validate();
  return rec;
}

void SaveAttn1(const std::string& path, const AttentionRecord& rec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  WriteAttn1(out, rec);
}

AttentionRecord LoadAttn1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return ReadAttn1(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

Json AttentionToJson(const AttentionRecord& rec) {
  Json j = MetadataJson(rec);
  j["layers"] = rec.layers;
  j["heads"] = rec.heads;
  const int t = rec.num_tokens();
  Json attn = Json::array();
  for (int l = 0; l < rec.layers; ++l) {
    Json layer = Json::array();
    for (int h = 0; h < rec.heads; ++h) {
      const auto m = rec.Head(l, h);
      Json rows = Json::array();
      for (int q = 0; q < t; ++q) {
        Json row = Json::array();
        for (int k = 0; k < t; ++k) row.push_back(m(q, k));
        rows.push_back(std::move(row));
      }
      layer.push_back(std::move(rows));
    }
    attn.push_back(std::move(layer));
  }
  j["attn"] = std::move(attn);
  return j;
}

AttentionRecord AttentionFromJson(const Json& j) {
  AttentionRecord rec;
  ReadMetadata(j, rec);
  try {
    rec.layers = j.at("layers").get<int>();
    rec.heads = j.at("heads").get<int>();
    const auto& attn = j.at("attn");
    const size_t t = rec.tokens.size();
    if (attn.size() != static_cast<size_t>(rec.layers)) {
      throw DataError("inline attention layer count mismatch");
    }
    for (const auto& layer : attn) {
      if (layer.size() != static_cast<size_t>(rec.heads)) {
        throw DataError("inline attention head count mismatch");
      }
      for (const auto& rows : layer) {
        if (rows.size() != t) throw DataError("inline attention shape mismatch");
        for (const auto& row : rows) {
          if (row.size() != t) throw DataError("inline attention shape mismatch");
          for (const auto& w : row) rec.weights.push_back(w.get<float>());
        }
      }
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("inline attention: ") + e.what());
  }
  rec.Validate();
  return rec;
}

}  // namespace wop

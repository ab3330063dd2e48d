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

// File output helpers. Every report goes through AtomicWriteFile so a failed
// run never leaves a half-written file behind.

#ifndef WOP_IO_H_
#define WOP_IO_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wop/json.h"

namespace wop {

// Writes to a sibling temp file, then renames over path.
void AtomicWriteFile(const std::string& path, const std::string& content);

std::string ReadFile(const std::string& path);

// FNV-1a 64 of the file bytes, as 16 lowercase hex digits.
std::string HashFile(const std::string& path);

std::string ToolVersion();

// Provenance of one CLI run. No timestamps, so identical runs serialize
// identically.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::map<std::string, uint64_t> seeds;
  std::map<std::string, std::string> input_hashes;  // path -> hash
  std::vector<std::string> outputs;
  std::string tool_version = ToolVersion();

  void AddInput(const std::string& path) { input_hashes[path] = HashFile(path); }
  Json ToJson() const;
};

}  // namespace wop

#endif  // WOP_IO_H_

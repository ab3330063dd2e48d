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

#include "wop/io.h"

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wop/error.h"
#include "wop/random.h"

namespace wop {

namespace fs = std::filesystem;

void AtomicWriteFile(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw DataError("cannot create directory for '" + path + "': " + ec.message());
  }
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw DataError("write failed for '" + path + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw DataError("cannot rename onto '" + path + "': " + ec.message());
  }
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string HashFile(const std::string& path) {
  const uint64_t h = Fnv1a64(ReadFile(path));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ToolVersion() {
#ifdef WOP_VERSION
  return WOP_VERSION;
#else
  return "dev";
#endif
}

Json RunManifest::ToJson() const {
  Json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  Json c = Json::object();
  for (const auto& [k, v] : config) c[k] = v;
  j["config"] = std::move(c);
  Json s = Json::object();
  for (const auto& [k, v] : seeds) s[k] = v;
  j["seeds"] = std::move(s);
  Json h = Json::object();
  for (const auto& [k, v] : input_hashes) h[k] = v;
  j["input_hashes"] = std::move(h);
  j["outputs"] = outputs;
  return j;
}

}  // namespace wop

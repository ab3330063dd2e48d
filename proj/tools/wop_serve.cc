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

// Reference protocol server over the built-in classifiers. Serves stdio by
// default or one TCP connection at a time with --port. Fault injection flags
// exist so gateway error paths can be exercised end to end.

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "wop/attention.h"
#include "wop/error.h"
#include "wop/gateway.h"
#include "wop/json.h"
#include "wop/protocol.h"

namespace {

namespace fs = std::filesystem;

// Wraps a classifier and answers attend requests from stored records.
class FixtureAttention : public wop::Classifier {
 public:
  FixtureAttention(std::unique_ptr<wop::Classifier> inner, const std::string& dir)
      : inner_(std::move(inner)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto ext = entry.path().extension();
      if (ext != ".attn" && ext != ".json") continue;
      wop::AttentionRecord rec =
          ext == ".attn" ? wop::LoadAttn1(entry.path().string())
                         : wop::AttentionFromJson(wop::Json::parse(
                               std::ifstream(entry.path())));
      records_[rec.example_id] = std::move(rec);
    }
  }

  std::string name() const override { return inner_->name() + "+fixtures"; }
  std::vector<wop::PredictionRecord> PredictBatch(
      const wop::TaskSpec& spec, std::span<const wop::Example> batch,
      const wop::AblationPlan* ablation) override {
    return inner_->PredictBatch(spec, batch, ablation);
  }
  bool supports_attention() const override { return true; }
  wop::AttentionRecord AttendOne(const wop::TaskSpec&, const wop::Example& ex) override {
    auto it = records_.find(ex.id);
    if (it == records_.end()) throw wop::DataError("no attention fixture for '" + ex.id + "'");
    return it->second;
  }

 private:
  std::unique_ptr<wop::Classifier> inner_;
  std::map<std::string, wop::AttentionRecord> records_;
};

struct Fault {
  std::string kind = "none";  // none | drop-record | wrong-id | bad-json | close
  int after = 0;              // healthy requests before the fault starts
  int seen = 0;
};

// Returns false when the connection should be closed without answering.
bool Answer(const std::string& line, wop::Classifier& clf,
            const wop::protocol::ServeOptions& opts, Fault& fault,
            std::string* reply) {
  *reply = wop::protocol::HandleRequestLine(line, clf, opts);
  const bool faulty = fault.kind != "none" && fault.seen++ >= fault.after;
  if (!faulty) return true;
  if (fault.kind == "close") return false;
  if (fault.kind == "bad-json") {
    *reply = "{not json";
    return true;
  }
  wop::Json j = wop::Json::parse(*reply);
  if (j.contains("predictions") && !j["predictions"].empty()) {
    if (fault.kind == "drop-record") {
      j["predictions"].erase(j["predictions"].size() - 1);
    } else if (fault.kind == "wrong-id") {
      j["predictions"][0]["id"] = "bogus";
    }
  }
  *reply = j.dump();
  return true;
}

void ServeStream(std::istream& in, std::ostream& out, wop::Classifier& clf,
                 const wop::protocol::ServeOptions& opts, Fault& fault) {
  std::string line;
  while (std::getline(in, line)) {
    std::string reply;
    if (!Answer(line, clf, opts, fault, &reply)) return;
    out << reply << '\n' << std::flush;
  }
}

bool WriteAll(int fd, const std::string& data) {
  size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n <= 0) return false;
    off += static_cast<size_t>(n);
  }
  return true;
}

void ServeFd(int fd, wop::Classifier& clf, const wop::protocol::ServeOptions& opts,
             Fault& fault) {
  std::string buffer;
  char chunk[4096];
  while (true) {
    const ssize_t n = ::read(fd, chunk, sizeof(chunk));
    if (n <= 0) return;
    buffer.append(chunk, static_cast<size_t>(n));
    size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      const std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      std::string reply;
      if (!Answer(line, clf, opts, fault, &reply)) return;
      if (!WriteAll(fd, reply + "\n")) return;
    }
  }
}

int ServeTcp(int port, wop::Classifier& clf, const wop::protocol::ServeOptions& opts,
             Fault& fault, bool once) {
  const int srv = ::socket(AF_INET, SOCK_STREAM, 0);
  if (srv < 0) {
    std::perror("socket");
    return 3;
  }
  const int yes = 1;
  ::setsockopt(srv, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(srv, 4) < 0) {
    std::perror("bind/listen");
    ::close(srv);
    return 3;
  }
  socklen_t len = sizeof(addr);
  ::getsockname(srv, reinterpret_cast<sockaddr*>(&addr), &len);
  // Tests read the chosen port from this line.
  std::cout << "listening " << ntohs(addr.sin_port) << std::endl;
  do {
    const int fd = ::accept(srv, nullptr, nullptr);
    if (fd < 0) break;
    ServeFd(fd, clf, opts, fault);
    ::close(fd);
  } while (!once);
  ::close(srv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  CLI::App app{"Serve the wop classifier protocol", "wop-serve"};
  std::string uri = "builtin:lexicon";
  std::string fixtures;
  int port = -1;
  bool once = false;
  wop::protocol::ServeOptions opts;
  Fault fault;
  app.add_option("--classifier", uri, "Built-in classifier URI");
  app.add_option("--attn-fixtures", fixtures, "Directory of attention records served by id");
  app.add_option("--inline-max-tokens", opts.inline_max_tokens,
                 "Larger tensors go to ATTN1 sidecars");
  app.add_option("--attn-dir", opts.attn_dir, "Where sidecar tensors are written");
  app.add_option("--port", port, "Listen on 127.0.0.1:PORT (0 picks one) instead of stdio");
  app.add_flag("--once", once, "Exit after the first TCP connection closes");
  app.add_option("--fault", fault.kind, "none, drop-record, wrong-id, bad-json or close")
      ->check(CLI::IsMember({"none", "drop-record", "wrong-id", "bad-json", "close"}));
  app.add_option("--fault-after", fault.after, "Healthy requests before the fault");
  CLI11_PARSE(app, argc, argv);

  std::unique_ptr<wop::Classifier> clf;
  try {
    if (uri.rfind("builtin:", 0) != 0) throw wop::UsageError("wop-serve only hosts builtin: classifiers");
    clf = wop::MakeClassifier(uri);
    if (!fixtures.empty()) clf = std::make_unique<FixtureAttention>(std::move(clf), fixtures);
  } catch (const std::exception& e) {
    std::cerr << "wop-serve: " << e.what() << "\n";
    return 1;
  }
  if (port >= 0) return ServeTcp(port, *clf, opts, fault, once);
  ServeStream(std::cin, std::cout, *clf, opts, fault);
  return 0;
}

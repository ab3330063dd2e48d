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

#include "wop/protocol.h"

#include <netdb.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>

#include "wop/error.h"
#include "wop/random.h"

namespace wop::protocol {

namespace {

GatewayError Malformed(const std::string& what) {
  return GatewayError(GatewayError::Kind::kMalformedResponse,
                      "malformed response: " + what);
}

Json ExampleToJson(const Example& ex) {
  Json j;
  j["id"] = ex.id;
  j["fields"] = ex.fields;
  return j;
}

PredictionRecord PredictionFromJson(const Json& j) {
  PredictionRecord p;
  p.example_id = j.at("id").get<std::string>();
  const auto& label = j.at("label");
  if (label.is_string()) {
    p.label = label.get<std::string>();
  } else if (label.is_number()) {
    p.label = label.get<double>();
  } else {
    throw Malformed("label must be a string or number");
  }
  if (auto c = j.find("confidence"); c != j.end()) {
    p.confidence = c->get<double>();
    if (*p.confidence < 0.0 || *p.confidence > 1.0) {
      throw Malformed("confidence outside [0, 1]");
    }
  }
  return p;
}

}  // namespace

std::string EncodeRequest(const Request& req) {
  Json j;
  j["op"] = req.op;
  if (req.op != "info") {
    j["task"] = req.task;
    Json examples = Json::array();
    for (const auto& ex : req.examples) examples.push_back(ExampleToJson(ex));
    j["examples"] = std::move(examples);
    if (!req.ablation.empty()) {
      Json heads = Json::array();
      for (const auto& [l, h] : req.ablation.heads) heads.push_back({l, h});
      j["ablate_heads"] = std::move(heads);
    }
  }
  return j.dump();
}

Request DecodeRequest(std::string_view line) {
  Request req;
  try {
    const Json j = Json::parse(line);
    req.op = j.at("op").get<std::string>();
    if (req.op != "info" && req.op != "predict" && req.op != "attend") {
      throw DataError("unknown op '" + req.op + "'");
    }
    if (req.op == "info") return req;
    req.task = j.at("task").get<std::string>();
    for (const auto& e : j.at("examples")) {
      Example ex;
      ex.id = e.at("id").get<std::string>();
      ex.fields = e.at("fields").get<std::vector<std::string>>();
      req.examples.push_back(std::move(ex));
    }
    if (auto it = j.find("ablate_heads"); it != j.end()) {
      for (const auto& pair : *it) {
        if (pair.size() != 2) throw DataError("ablate_heads entries are [l,h]");
        req.ablation.heads.emplace_back(pair[0].get<int>(), pair[1].get<int>());
      }
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("bad request: ") + e.what());
  }
  return req;
}

std::string EncodeResponse(const Response& resp) {
  Json j;
  if (resp.error) {
    j["error"] = *resp.error;
    return j.dump();
  }
  j["op"] = resp.op;
  if (resp.op == "info") {
    j["name"] = resp.name;
    j["attention"] = resp.attention_supported;
  } else if (resp.op == "predict") {
    Json preds = Json::array();
    for (const auto& p : resp.predictions) preds.push_back(wop::PredictionToJson(p));
    j["predictions"] = std::move(preds);
  } else if (resp.op == "attend") {
    if (resp.attention) {
      j["attention"] = AttentionToJson(*resp.attention);
    } else {
      Json a;
      a["id"] = resp.attention_id;
      a["path"] = resp.attention_path;
      j["attention"] = std::move(a);
    }
  }
  return j.dump();
}

Response DecodeResponse(std::string_view line) {
  Response resp;
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw Malformed(e.what());
  }
  if (!j.is_object()) throw Malformed("not an object");
  try {
    if (auto err = j.find("error"); err != j.end()) {
      resp.error = err->get<std::string>();
      return resp;
    }
    resp.op = j.at("op").get<std::string>();
    if (resp.op == "info") {
      resp.name = j.at("name").get<std::string>();
      resp.attention_supported = j.at("attention").get<bool>();
    } else if (resp.op == "predict") {
      for (const auto& p : j.at("predictions")) {
        resp.predictions.push_back(PredictionFromJson(p));
      }
    } else if (resp.op == "attend") {
      const auto& a = j.at("attention");
      if (a.contains("path")) {
        resp.attention_id = a.at("id").get<std::string>();
        resp.attention_path = a.at("path").get<std::string>();
      } else {
        try {
          resp.attention = AttentionFromJson(a);
        } catch (const DataError& e) {
          throw Malformed(e.what());
        }
        resp.attention_id = resp.attention->example_id;
      }
    } else {
      throw Malformed("unknown op '" + resp.op + "'");
    }
  } catch (const Json::exception& e) {
    throw Malformed(e.what());
  }
  return resp;
}

std::string Canonicalize(std::string_view line) {
  const Json j = Json::parse(line);
  const bool is_request =
      j.contains("op") && (j.contains("examples") || j.size() == 1);
  if (is_request) return EncodeRequest(DecodeRequest(line));
  return EncodeResponse(DecodeResponse(line));
}

namespace {

class FdLineChannel {
 public:
  FdLineChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

  void WriteLine(const std::string& line) {
    std::string data = line + "\n";
    size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(write_fd_, data.data() + off, data.size() - off);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        throw GatewayError(GatewayError::Kind::kTransport,
                           std::string("transport write failed: ") +
                               std::strerror(errno));
      }
      off += static_cast<size_t>(n);
    }
  }

  std::string ReadLine() {
    while (true) {
      const size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        throw GatewayError(GatewayError::Kind::kTransport,
                           "transport closed before a full response line");
      }
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

 private:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

class ExecTransport : public LineTransport {
 public:
  explicit ExecTransport(const std::string& command) {
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
      throw GatewayError(GatewayError::Kind::kTransport, "pipe() failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      throw GatewayError(GatewayError::Kind::kTransport, "fork() failed");
    }
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    channel_ = std::make_unique<FdLineChannel>(read_fd_, write_fd_);
  }

  ~ExecTransport() override {
    ::close(write_fd_);
    ::close(read_fd_);
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

  std::string RoundTrip(const std::string& line) override {
    channel_->WriteLine(line);
    return channel_->ReadLine();
  }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::unique_ptr<FdLineChannel> channel_;
};

class TcpTransport : public LineTransport {
 public:
  TcpTransport(const std::string& host, int port) {
    ::signal(SIGPIPE, SIG_IGN);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0) {
      throw GatewayError(GatewayError::Kind::kTransport,
                         "cannot resolve " + host + ":" + service);
    }
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
      fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd_ < 0) continue;
      if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd_);
      fd_ = -1;
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) {
      throw GatewayError(GatewayError::Kind::kTransport,
                         "cannot connect to " + host + ":" + service);
    }
    channel_ = std::make_unique<FdLineChannel>(fd_, fd_);
  }

  ~TcpTransport() override { ::close(fd_); }

  std::string RoundTrip(const std::string& line) override {
    channel_->WriteLine(line);
    return channel_->ReadLine();
  }

 private:
  int fd_ = -1;
  std::unique_ptr<FdLineChannel> channel_;
};

}  // namespace

std::unique_ptr<LineTransport> MakeExecTransport(const std::string& command) {
  return std::make_unique<ExecTransport>(command);
}

std::unique_ptr<LineTransport> MakeTcpTransport(const std::string& host,
                                                int port) {
  return std::make_unique<TcpTransport>(host, port);
}

RemoteClassifier::RemoteClassifier(std::unique_ptr<LineTransport> transport,
                                   std::string uri)
    : transport_(std::move(transport)), uri_(std::move(uri)) {}

Response RemoteClassifier::Call(const Request& req) const {
  Response resp = DecodeResponse(transport_->RoundTrip(EncodeRequest(req)));
  if (resp.error) {
    throw GatewayError(GatewayError::Kind::kRemote,
                       "classifier error: " + *resp.error);
  }
  if (resp.op != req.op) {
    throw Malformed("expected op '" + req.op + "', got '" + resp.op + "'");
  }
  return resp;
}

std::vector<PredictionRecord> RemoteClassifier::PredictBatch(
    const TaskSpec& spec, std::span<const Example> batch,
    const AblationPlan* ablation) {
  Request req;
  req.op = "predict";
  req.task = spec.task_id;
  req.examples.assign(batch.begin(), batch.end());
  if (ablation != nullptr) req.ablation = *ablation;
  return Call(req).predictions;
}

bool RemoteClassifier::supports_attention() const {
  if (!attention_) {
    try {
      attention_ = Call(Request{"info", "", {}, {}}).attention_supported;
    } catch (const GatewayError& e) {
      if (e.kind() != GatewayError::Kind::kRemote) throw;
      attention_ = false;
    }
  }
  return *attention_;
}

AttentionRecord RemoteClassifier::AttendOne(const TaskSpec& spec,
                                            const Example& ex) {
  Request req;
  req.op = "attend";
  req.task = spec.task_id;
  req.examples = {ex};
  Response resp = Call(req);
  if (resp.attention) return *resp.attention;
  try {
    AttentionRecord rec = LoadAttn1(resp.attention_path);
    if (rec.example_id != resp.attention_id) {
      throw GatewayError(GatewayError::Kind::kIdMismatch,
                         "id mismatch between attend response and ATTN1 file");
    }
    return rec;
  } catch (const DataError& e) {
    throw Malformed(e.what());
  }
}

std::string HandleRequestLine(std::string_view line, Classifier& clf,
                              const ServeOptions& options) {
  Response resp;
  try {
    const Request req = DecodeRequest(line);
    resp.op = req.op;
    if (req.op == "info") {
      resp.name = clf.name();
      resp.attention_supported = clf.supports_attention();
      return EncodeResponse(resp);
    }
    const TaskSpec& spec = BuiltinTaskSpec(req.task);
    if (req.op == "predict") {
      resp.predictions = Predict(clf, spec, req.examples,
                                 req.ablation.empty() ? nullptr : &req.ablation);
      return EncodeResponse(resp);
    }
    if (req.examples.size() != 1) {
      throw DataError("attend takes exactly one example");
    }
    AttentionRecord rec = Attend(clf, spec, req.examples.front());
    if (rec.num_tokens() <= options.inline_max_tokens) {
      resp.attention = std::move(rec);
    } else {
      const std::string file =
          "attn_" + std::to_string(Fnv1a64(rec.example_id)) + ".attn";
      const std::string path =
          (std::filesystem::path(options.attn_dir) / file).string();
      SaveAttn1(path, rec);
      resp.attention_id = rec.example_id;
      resp.attention_path = path;
    }
    return EncodeResponse(resp);
  } catch (const std::exception& e) {
    Response err;
    err.error = e.what();
    return EncodeResponse(err);
  }
}

}  // namespace wop::protocol

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

// JSON-lines classifier protocol. One compact JSON object per line with sorted
// keys (shown unsorted here for readability):
//
//   {"op":"info"}
//     -> {"op":"info","name":"...","attention":true|false}
//   {"op":"predict","task":"qnli","examples":[{"id":"7","fields":["..",".."]}],
//    "ablate_heads":[[0,7],[1,9]]}           (ablate_heads only if non-empty)
//     -> {"op":"predict","predictions":[{"id":"7","label":"entailment",
//         "confidence":0.97}]}               (regression: numeric label, no
//                                             confidence)
//   {"op":"attend","task":"qnli","examples":[{"id":"7","fields":[..]}]}
//     -> {"op":"attend","attention":{"id":"7","path":"/tmp/7.attn"}}
//        or {"op":"attend","attention":{<inline form, see attention.h>}}
//   any failure -> {"error":"message"}

#ifndef WOP_PROTOCOL_H_
#define WOP_PROTOCOL_H_

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wop/gateway.h"
#include "wop/json.h"

namespace wop::protocol {

struct Request {
  std::string op;  // info | predict | attend
  std::string task;
  std::vector<Example> examples;  // only id and fields travel
  AblationPlan ablation;
};

struct Response {
  std::string op;  // empty when error is set
  std::optional<std::string> error;
  // info
  std::string name;
  bool attention_supported = false;
  // predict
  std::vector<PredictionRecord> predictions;
  // attend: either a sidecar path or an inline record
  std::string attention_path;
  std::string attention_id;
  std::optional<AttentionRecord> attention;
};

std::string EncodeRequest(const Request& req);
Request DecodeRequest(std::string_view line);
std::string EncodeResponse(const Response& resp);
Response DecodeResponse(std::string_view line);

// Decodes a request or response line and re-encodes it.
std::string Canonicalize(std::string_view line);

// Sends one line, returns one line (without the newline).
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual std::string RoundTrip(const std::string& line) = 0;
};

// Child process talking over stdin/stdout, started with /bin/sh -c.
std::unique_ptr<LineTransport> MakeExecTransport(const std::string& command);
std::unique_ptr<LineTransport> MakeTcpTransport(const std::string& host,
                                                int port);

class RemoteClassifier : public Classifier {
 public:
  explicit RemoteClassifier(std::unique_ptr<LineTransport> transport,
                            std::string uri = "remote");

  std::string name() const override { return uri_; }
  std::vector<PredictionRecord> PredictBatch(
      const TaskSpec& spec, std::span<const Example> batch,
      const AblationPlan* ablation) override;
  bool supports_attention() const override;
  AttentionRecord AttendOne(const TaskSpec& spec, const Example& ex) override;

 private:
  Response Call(const Request& req) const;

  std::unique_ptr<LineTransport> transport_;
  std::string uri_;
  mutable std::optional<bool> attention_;
};

struct ServeOptions {
  // Attention tensors with more tokens than this are written as ATTN1
  // sidecar files into attn_dir instead of being inlined.
  int inline_max_tokens = 32;
  std::string attn_dir = ".";
};

// Server side: answers one request line. Never throws; failures become
// {"error":...} objects.
std::string HandleRequestLine(std::string_view line, Classifier& clf,
                              const ServeOptions& options = {});

}  // namespace wop::protocol

#endif  // WOP_PROTOCOL_H_

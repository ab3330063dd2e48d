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

#ifndef WOP_ERROR_H_
#define WOP_ERROR_H_

#include <stdexcept>
#include <string>

namespace wop {

// Bad flags or arguments supplied by the caller. Maps to CLI exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or semantically invalid input data. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Anything that goes wrong talking to a classifier. Maps to CLI exit code 3.
class GatewayError : public std::runtime_error {
 public:
  enum class Kind {
    kTransport,
    kMalformedResponse,
    kIdMismatch,
    kEmptyInput,
    kNoAttention,
    kRemote,
  };

  GatewayError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace wop

#endif  // WOP_ERROR_H_

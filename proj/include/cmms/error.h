// Copyright 2026 The CMMS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CMMS_ERROR_H_
#define CMMS_ERROR_H_

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cmms {

// Error codes shared by the library, the wire ERROR message and the CLI.
enum class ErrorCode {
  kParse,
  kRange,
  kDup,
  kDupState,
  kIo,
  kConfig,
  kExists,
  kDuplicateSubject,
  kUnknownSubject,
  kNotFound,
  kInvalidCert,
  kSchema,
  kUnknownType,
  kVersion,
  kAuth,
  kCert,
  kBadPeerCert,
  kNoNode,
  kNoSession,
  kNotAuthorized,
  kTickLimit,
  kConn,
};

// "E_PARSE", "E_NO_NODE", ...
std::string_view ErrorCodeName(ErrorCode code);
std::optional<ErrorCode> ParseErrorCode(std::string_view name);

class CmmsError : public std::runtime_error {
 public:
  CmmsError(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace cmms

#endif  // CMMS_ERROR_H_

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

#include "cmms/error.h"

#include <array>
#include <utility>

namespace cmms {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 22> kNames = {{
    {ErrorCode::kParse, "E_PARSE"},
    {ErrorCode::kRange, "E_RANGE"},
    {ErrorCode::kDup, "E_DUP"},
    {ErrorCode::kDupState, "E_DUP_STATE"},
    {ErrorCode::kIo, "E_IO"},
    {ErrorCode::kConfig, "E_CONFIG"},
    {ErrorCode::kExists, "E_EXISTS"},
    {ErrorCode::kDuplicateSubject, "E_DUPLICATE_SUBJECT"},
    {ErrorCode::kUnknownSubject, "E_UNKNOWN_SUBJECT"},
    {ErrorCode::kNotFound, "E_NOT_FOUND"},
    {ErrorCode::kInvalidCert, "E_INVALID_CERT"},
    {ErrorCode::kSchema, "E_SCHEMA"},
    {ErrorCode::kUnknownType, "E_UNKNOWN_TYPE"},
    {ErrorCode::kVersion, "E_VERSION"},
    {ErrorCode::kAuth, "E_AUTH"},
    {ErrorCode::kCert, "E_CERT"},
    {ErrorCode::kBadPeerCert, "E_BAD_PEER_CERT"},
    {ErrorCode::kNoNode, "E_NO_NODE"},
    {ErrorCode::kNoSession, "E_NO_SESSION"},
    {ErrorCode::kNotAuthorized, "E_NOT_AUTHORIZED"},
    {ErrorCode::kTickLimit, "E_TICK_LIMIT"},
    {ErrorCode::kConn, "E_CONN"},
}};

}  // namespace

std::string_view ErrorCodeName(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "E_UNKNOWN";
}

std::optional<ErrorCode> ParseErrorCode(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return std::nullopt;
}

}  // namespace cmms

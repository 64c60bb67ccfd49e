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

#ifndef CMMS_ENCODING_H_
#define CMMS_ENCODING_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cmms {

using Bytes = std::vector<std::uint8_t>;

// Logical time. Every TTL, expiry and replay window is measured in ticks.
using Tick = std::int64_t;

Bytes ToBytes(std::string_view s);
std::string ToString(std::span<const std::uint8_t> b);

// Standard alphabet with padding. Decode throws kSchema on malformed input.
std::string Base64Encode(std::span<const std::uint8_t> data);
Bytes Base64Decode(std::string_view text);

std::string HexEncode(std::span<const std::uint8_t> data);

Bytes Sha256(std::span<const std::uint8_t> data);

}  // namespace cmms

#endif  // CMMS_ENCODING_H_

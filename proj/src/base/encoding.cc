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

#include "cmms/encoding.h"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include "cmms/error.h"

namespace cmms {

Bytes ToBytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string ToString(std::span<const std::uint8_t> b) {
  return std::string(b.begin(), b.end());
}

std::string Base64Encode(std::span<const std::uint8_t> data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  if (data.empty()) return out;
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes Base64Decode(std::string_view text) {
  if (text.size() % 4 != 0) {
    throw CmmsError(ErrorCode::kSchema, "base64 length not a multiple of 4");
  }
  std::size_t pad = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool alpha = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                       (c >= '0' && c <= '9') || c == '+' || c == '/';
    if (c == '=') {
      if (i + 2 < text.size()) {
        throw CmmsError(ErrorCode::kSchema, "misplaced base64 padding");
      }
      ++pad;
    } else if (!alpha || pad > 0) {
      throw CmmsError(ErrorCode::kSchema, "invalid base64 character");
    }
  }
  Bytes out(3 * text.size() / 4);
  if (text.empty()) return out;
  const int n = EVP_DecodeBlock(out.data(),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw CmmsError(ErrorCode::kSchema, "invalid base64");
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string HexEncode(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0xf];
  }
  return out;
}

Bytes Sha256(std::span<const std::uint8_t> data) {
  Bytes out(SHA256_DIGEST_LENGTH);
  SHA256(data.data(), data.size(), out.data());
  return out;
}

}  // namespace cmms

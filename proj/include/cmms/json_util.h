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

#ifndef CMMS_JSON_UTIL_H_
#define CMMS_JSON_UTIL_H_

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cmms/encoding.h"
#include "cmms/id_set.h"

namespace cmms {

using Json = nlohmann::json;

// Compact, key-sorted, UTF-8. Throws kSchema on invalid UTF-8 strings.
std::string CanonicalDump(const Json& j);
Json ParseJson(std::string_view text);

// Strict accessor over a JSON object: construction fails unless the object
// holds exactly the listed keys, and every getter checks the value type.
// All failures are kSchema.
class JsonReader {
 public:
  JsonReader(const Json& j, std::string_view context,
             std::initializer_list<std::string_view> keys);

  const Json& Raw(std::string_view key) const;
  std::string String(std::string_view key) const;
  std::uint64_t Uint(std::string_view key) const;
  std::int64_t Int(std::string_view key) const;
  bool Bool(std::string_view key) const;
  Bytes Base64(std::string_view key) const;
  bool IsNull(std::string_view key) const;

  template <typename Tag>
  IdSet<Tag> Set(std::string_view key) const;

 private:
  [[noreturn]] void Fail(std::string_view key, std::string_view what) const;

  const Json& j_;
  std::string context_;
};

// Sets travel as strictly ascending arrays of member numbers.
template <typename Tag>
Json SetToJson(const IdSet<Tag>& s) {
  Json arr = Json::array();
  for (int m : s.members()) arr.push_back(m);
  return arr;
}

template <typename Tag>
IdSet<Tag> SetFromJson(const Json& j, std::string_view context);

std::string Base64Field(const Bytes& b);

}  // namespace cmms

#endif  // CMMS_JSON_UTIL_H_

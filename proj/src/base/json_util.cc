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

#include "cmms/json_util.h"

#include <set>

#include "cmms/error.h"

namespace cmms {

std::string CanonicalDump(const Json& j) {
  try {
    return j.dump(-1, ' ', false, Json::error_handler_t::strict);
  } catch (const Json::exception& e) {
    throw CmmsError(ErrorCode::kSchema, e.what());
  }
}

Json ParseJson(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw CmmsError(ErrorCode::kSchema, std::string("malformed JSON: ") + e.what());
  }
}

JsonReader::JsonReader(const Json& j, std::string_view context,
                       std::initializer_list<std::string_view> keys)
    : j_(j), context_(context) {
  if (!j.is_object()) {
    throw CmmsError(ErrorCode::kSchema, context_ + ": expected object");
  }
  std::set<std::string_view> expected(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!expected.count(k)) Fail(k, "unexpected field");
  }
  for (std::string_view k : keys) {
    if (!j.contains(std::string(k))) Fail(k, "missing field");
  }
}

void JsonReader::Fail(std::string_view key, std::string_view what) const {
  throw CmmsError(ErrorCode::kSchema,
                  context_ + "." + std::string(key) + ": " + std::string(what));
}

const Json& JsonReader::Raw(std::string_view key) const {
  return j_.at(std::string(key));
}

std::string JsonReader::String(std::string_view key) const {
  const Json& v = Raw(key);
  if (!v.is_string()) Fail(key, "expected string");
  return v.get<std::string>();
}

std::uint64_t JsonReader::Uint(std::string_view key) const {
  const Json& v = Raw(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  Fail(key, "expected unsigned integer");
}

std::int64_t JsonReader::Int(std::string_view key) const {
  const Json& v = Raw(key);
  if (!v.is_number_integer()) Fail(key, "expected integer");
  if (v.is_number_unsigned() &&
      v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    Fail(key, "integer out of range");
  }
  return v.get<std::int64_t>();
}

bool JsonReader::Bool(std::string_view key) const {
  const Json& v = Raw(key);
  if (!v.is_boolean()) Fail(key, "expected boolean");
  return v.get<bool>();
}

Bytes JsonReader::Base64(std::string_view key) const {
  const Json& v = Raw(key);
  if (!v.is_string()) Fail(key, "expected base64 string");
  try {
    return Base64Decode(v.get<std::string>());
  } catch (const CmmsError& e) {
    Fail(key, e.detail());
  }
}

bool JsonReader::IsNull(std::string_view key) const { return Raw(key).is_null(); }

template <typename Tag>
IdSet<Tag> JsonReader::Set(std::string_view key) const {
  return SetFromJson<Tag>(Raw(key), context_ + "." + std::string(key));
}

template <typename Tag>
IdSet<Tag> SetFromJson(const Json& j, std::string_view context) {
  if (!j.is_array()) {
    throw CmmsError(ErrorCode::kSchema, std::string(context) + ": expected array");
  }
  IdSet<Tag> out;
  std::uint64_t prev = 0;
  for (const Json& e : j) {
    if (!e.is_number_integer() || (!e.is_number_unsigned() && e.get<std::int64_t>() < 0)) {
      throw CmmsError(ErrorCode::kSchema,
                      std::string(context) + ": expected unsigned members");
    }
    const auto v = static_cast<std::uint64_t>(e.get<std::int64_t>());
    if (v <= prev || v > static_cast<std::uint64_t>(IdSet<Tag>::kMaxUniverse)) {
      throw CmmsError(ErrorCode::kSchema,
                      std::string(context) +
                          ": members must be ascending, unique and in 1..64");
    }
    out.insert(static_cast<int>(v));
    prev = v;
  }
  return out;
}

template IdSet<StateTag> JsonReader::Set<StateTag>(std::string_view) const;
template IdSet<ServiceTag> JsonReader::Set<ServiceTag>(std::string_view) const;
template IdSet<StateTag> SetFromJson<StateTag>(const Json&, std::string_view);
template IdSet<ServiceTag> SetFromJson<ServiceTag>(const Json&, std::string_view);

std::string Base64Field(const Bytes& b) { return Base64Encode(b); }

}  // namespace cmms

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

#ifndef CMMS_ID_SET_H_
#define CMMS_ID_SET_H_

#include <bit>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "cmms/error.h"

namespace cmms {

// A 1-based identifier drawn from a configured universe.
template <typename Tag>
struct Id {
  int value = 0;
  friend auto operator<=>(const Id&, const Id&) = default;
};

struct StateTag {};
struct ServiceTag {};
using StateId = Id<StateTag>;
using ServiceId = Id<ServiceTag>;

// Finite set over {1..64}. Member i is stored in bit i-1, least significant
// bit first, so the integer form is exactly the policy-entry encoding.
template <typename Tag>
class IdSet {
 public:
  static constexpr int kMaxUniverse = 64;

  IdSet() = default;
  IdSet(std::initializer_list<int> ids) {
    for (int id : ids) insert(id);
  }

  static IdSet FromMask(std::uint64_t mask) {
    IdSet s;
    s.mask_ = mask;
    return s;
  }

  // {lo..hi}, inclusive.
  static IdSet Range(int lo, int hi) {
    IdSet s;
    for (int i = lo; i <= hi; ++i) s.insert(i);
    return s;
  }

  std::uint64_t mask() const { return mask_; }

  bool contains(int id) const {
    return id >= 1 && id <= kMaxUniverse && ((mask_ >> (id - 1)) & 1u) != 0;
  }
  bool contains(Id<Tag> id) const { return contains(id.value); }

  void insert(int id) {
    if (id < 1 || id > kMaxUniverse) {
      throw CmmsError(ErrorCode::kRange,
                      "identifier " + std::to_string(id) + " outside 1.." +
                          std::to_string(kMaxUniverse));
    }
    mask_ |= std::uint64_t{1} << (id - 1);
  }
  void insert(Id<Tag> id) { insert(id.value); }

  void erase(int id) {
    if (id >= 1 && id <= kMaxUniverse) mask_ &= ~(std::uint64_t{1} << (id - 1));
  }

  bool empty() const { return mask_ == 0; }
  int size() const { return std::popcount(mask_); }

  // Largest member, 0 when empty.
  int max_member() const { return 64 - std::countl_zero(mask_); }

  std::vector<int> members() const {
    std::vector<int> out;
    for (std::uint64_t m = mask_; m != 0; m &= m - 1) {
      out.push_back(std::countr_zero(m) + 1);
    }
    return out;
  }

  bool IsSubsetOf(const IdSet& other) const {
    return (mask_ & ~other.mask_) == 0;
  }

  // True when every member lies in {1..universe}.
  bool WithinUniverse(int universe) const { return max_member() <= universe; }

  // "{1,4,11}"
  std::string ToString() const {
    std::string out = "{";
    bool first = true;
    for (int id : members()) {
      if (!first) out += ',';
      out += std::to_string(id);
      first = false;
    }
    return out + "}";
  }

  friend IdSet operator&(IdSet a, IdSet b) { return FromMask(a.mask_ & b.mask_); }
  friend IdSet operator|(IdSet a, IdSet b) { return FromMask(a.mask_ | b.mask_); }
  friend bool operator==(const IdSet&, const IdSet&) = default;

 private:
  std::uint64_t mask_ = 0;
};

using StateSet = IdSet<StateTag>;
using ServiceSet = IdSet<ServiceTag>;

}  // namespace cmms

#endif  // CMMS_ID_SET_H_

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

#ifndef CMMS_POLICY_H_
#define CMMS_POLICY_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "cmms/id_set.h"

namespace cmms {

// Sizes of the state universe, the service universe and the stored policy
// entry. SPIG uses 8 states, 4 services and byte-wide entries.
struct GridConfig {
  int states = 8;
  int services = 4;
  int entry_width = 8;

  static GridConfig Spig() { return GridConfig{8, 4, 8}; }

  // Throws kConfig unless 1 <= services <= entry_width <= 64 and
  // 1 <= states <= 64.
  void Validate() const;

  // 2^M - 1.
  std::uint64_t service_mask() const;
  // 2^W - 1.
  std::uint64_t entry_mask() const;

  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

// Raw W-bit policy word. Only the low M bits carry authorization meaning;
// the remaining bits are stored verbatim and never interpreted.
struct PolicyEntry {
  std::uint64_t raw = 0;
  friend bool operator==(const PolicyEntry&, const PolicyEntry&) = default;
};

class PolicyTable {
 public:
  explicit PolicyTable(GridConfig config = GridConfig::Spig());

  const GridConfig& config() const { return config_; }
  const std::map<int, PolicyEntry>& entries() const { return entries_; }

  // Throws kRange for a state outside 1..N or an entry wider than W bits.
  void Set(StateId state, PolicyEntry entry);
  std::optional<PolicyEntry> Get(StateId state) const;
  bool empty() const { return entries_.empty(); }

  friend bool operator==(const PolicyTable&, const PolicyTable&) = default;

 private:
  GridConfig config_;
  std::map<int, PolicyEntry> entries_;
};

// VO-level FILTER/IMPOSE configuration held by the discovery node.
struct VoFilterConfig {
  StateSet considered_states;
  std::map<std::string, StateSet> imposed_list;

  // Throws kConfig when an imposed set is not inside considered_states.
  void Validate() const;

  friend bool operator==(const VoFilterConfig&, const VoFilterConfig&) = default;
};

StateSet Filter(const StateSet& cert_states, const StateSet& considered);
StateSet Impose(const StateSet& filtered, const StateSet& imposed);

// impose(filter(cert, considered), imposed[user]); a user missing from the
// imposed list contributes nothing.
StateSet EffectiveState(const StateSet& cert_states, const VoFilterConfig& cfg,
                        std::string_view user);

PolicyEntry EncodeServices(const ServiceSet& services, const GridConfig& cfg);
ServiceSet DecodeServices(PolicyEntry entry, const GridConfig& cfg);

// Deny-by-default: a state without an entry grants nothing.
ServiceSet Lookup(const PolicyTable& table, StateId state);

// Services common to every effective state. An empty effective set maps to
// the empty service set.
ServiceSet PolicyMap(const StateSet& effective, const PolicyTable& table);

struct ParsedPolicy {
  StateId state;
  ServiceSet services;
  friend bool operator==(const ParsedPolicy&, const ParsedPolicy&) = default;
};

// Parses "<state> : <service>, <service>, ...". Throws kParse, kRange or kDup.
ParsedPolicy ParsePolicy(std::string_view text, const GridConfig& cfg);
std::string RenderPolicy(StateId state, const ServiceSet& services);

// One policy per line; '#' lines and blank lines are skipped. Besides the
// "<state>: <services>" form a line may read "<state> = <raw>" to carry a
// full-width entry whose high bits must survive storage.
PolicyTable ParsePolicyText(std::string_view text, const GridConfig& cfg);
std::string RenderPolicyText(const PolicyTable& table);
PolicyTable LoadPolicyFile(const std::filesystem::path& path,
                           const GridConfig& cfg);
void SavePolicyFile(const PolicyTable& table, const std::filesystem::path& path);

}  // namespace cmms

#endif  // CMMS_POLICY_H_

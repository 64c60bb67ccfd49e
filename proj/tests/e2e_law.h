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

#ifndef CMMS_TESTS_E2E_LAW_H_
#define CMMS_TESTS_E2E_LAW_H_

#include <optional>
#include <string>

#include "cmms/deployment.h"
#include "grid_util.h"
#include "test_util.h"

namespace cmms::testing {

// One random deployment pushed through the full simulated flow.
struct E2eCase {
  Deployment dep;
  std::string user;
  StateSet cert_states;
  StateSet expected_effective;
  ServiceSet expected_services;
  std::optional<StateSet> wire_effective;
  std::optional<ServiceSet> wire_services;
  bool holds() const {
    return wire_effective == expected_effective && wire_services == expected_services;
  }
};

// Independent model: per-service scan over plain integers.
inline ServiceSet BruteForceServices(const std::vector<int>& effective,
                                     const PolicyTable& table) {
  const GridConfig& g = table.config();
  ServiceSet out;
  if (effective.empty()) return out;
  for (int svc = 1; svc <= g.services; ++svc) {
    bool all = true;
    for (int st : effective) {
      const auto entry = table.Get(StateId{st});
      if (!entry || ((entry->raw >> (svc - 1)) & 1u) == 0) all = false;
    }
    if (all) out.insert(svc);
  }
  return out;
}

inline E2eCase RunE2eCase(std::uint64_t seed) {
  Gen g(seed);
  E2eCase c;
  c.user = "u" + std::to_string(seed);
  c.dep = SpigDeployment(seed + 1);
  c.dep.signer = g.Coin() ? "ed25519" : "test-sha256";
  c.dep.grid = g.Grid(16, 16);
  const int n = c.dep.grid.states;
  c.dep.state_names.clear();
  c.dep.service_names.clear();
  c.dep.default_initial_states = StateSet{1};
  c.dep.vo_filter.considered_states = g.States(n, 0.7);
  c.dep.vo_filter.imposed_list.clear();
  if (g.Coin(0.6)) {
    StateSet imposed;
    for (int s = 1; s <= n; ++s) {
      if (c.dep.vo_filter.considered_states.contains(s) && g.Coin(0.3)) imposed.insert(s);
    }
    c.dep.vo_filter.imposed_list[c.user] = imposed;
  }
  if (g.Coin(0.3)) c.dep.vo_filter.imposed_list["someone_else"] = c.dep.vo_filter.considered_states;
  c.dep.service_nodes.front().policy_file.clear();
  c.dep.service_nodes.front().policy_table = g.Table(c.dep.grid, 0.85);
  c.cert_states = g.States(n, 0.5);

  // Oracle: set algebra over plain integers.
  std::vector<int> effective;
  const auto imposed = c.dep.vo_filter.imposed_list.find(c.user);
  for (int s = 1; s <= n; ++s) {
    const bool kept = c.cert_states.contains(s) && c.dep.vo_filter.considered_states.contains(s);
    const bool added = imposed != c.dep.vo_filter.imposed_list.end() && imposed->second.contains(s);
    if (kept || added) effective.push_back(s);
  }
  for (int s : effective) c.expected_effective.insert(s);
  c.expected_services = BruteForceServices(effective, c.dep.service_nodes.front().policy_table);

  GridSession session(c.dep);
  session.Bootstrap();
  session.Register(c.user, c.cert_states);
  const RunResult r = session.RequestAccess(c.user);
  const auto eff = OfType(r.trace, MsgType::kSendEffState);
  if (!eff.empty()) c.wire_effective = eff.back().As<SendEffState>()->effective_states;
  c.wire_services = LastServiceList(r.trace, c.user);
  return c;
}

}  // namespace cmms::testing

#endif  // CMMS_TESTS_E2E_LAW_H_

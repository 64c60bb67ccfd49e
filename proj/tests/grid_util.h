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

#ifndef CMMS_TESTS_GRID_UTIL_H_
#define CMMS_TESTS_GRID_UTIL_H_

#include <string>
#include <vector>

#include "cmms/deployment.h"
#include "cmms/simnet.h"

namespace cmms::testing {

inline std::vector<Envelope> OfType(const Trace& trace, MsgType type) {
  std::vector<Envelope> out;
  for (const auto& e : trace.entries) {
    if (e.envelope.type() == type) out.push_back(e.envelope);
  }
  return out;
}

inline std::vector<Envelope> OfType(const Trace& trace, MsgType type,
                                    const std::string& recipient) {
  std::vector<Envelope> out;
  for (auto& e : OfType(trace, type)) {
    if (e.recipient == recipient) out.push_back(e);
  }
  return out;
}

inline std::vector<ErrorCode> ErrorsTo(const Trace& trace, const std::string& recipient) {
  std::vector<ErrorCode> out;
  for (const auto& e : OfType(trace, MsgType::kError, recipient)) {
    out.push_back(e.As<ErrorMsg>()->code);
  }
  return out;
}

// Bootstraps a grid and registers `user` with `states` (monitor default
// when absent).
inline void Enroll(GridSession& s, const std::string& user,
                   const std::optional<StateSet>& states) {
  if (s.trace().entries.empty()) s.Bootstrap();
  s.Register(user, states);
}

// Envelope injected on the wire as if sent by `sender`.
inline ScriptStep Inject(std::string sender, std::string recipient, Payload payload,
                         std::uint64_t msg_id = 900) {
  Envelope env;
  env.msg_id = msg_id;
  env.sender = std::move(sender);
  env.recipient = std::move(recipient);
  env.payload = std::move(payload);
  return ScriptStep{0, env.recipient, env};
}

inline std::optional<ServiceSet> LastServiceList(const Trace& trace, const std::string& user) {
  auto lists = OfType(trace, MsgType::kServiceList, UserAddress(user));
  if (lists.empty()) return std::nullopt;
  return lists.back().As<ServiceList>()->services;
}

// SPIG with a second service node "serv2" carrying the same table.
inline Deployment TwoServiceNodes() {
  Deployment dep = SpigDeployment();
  dep.service_nodes.front().policy_file.clear();
  ServiceNodeSpec serv2 = dep.service_nodes.front();
  serv2.address = "serv2";
  dep.service_nodes.push_back(serv2);
  dep.endpoints["serv2"] = "127.0.0.1:7406";
  return dep;
}

// serv1 routes service 3 to serv2. The user holds state 1; each node grants
// service 3 to state 1 or not. The invoke is injected straight at serv1 so
// the origin's own decision is exercised too.
struct ForwardOutcome {
  std::vector<Envelope> results;     // SERVICE_RESULT to the user
  std::vector<ErrorCode> errors;     // ERROR to the user
  std::size_t forwards = 0;          // FORWARD_REQ on the wire
  std::string chosen_node;
};

inline ForwardOutcome RunForwardCase(bool at_origin, bool at_next) {
  Deployment dep = TwoServiceNodes();
  auto table = [&](bool grants) {
    PolicyTable t(dep.grid);
    t.Set(StateId{1}, EncodeServices(grants ? ServiceSet{1, 3} : ServiceSet{1}, dep.grid));
    return t;
  };
  dep.service_nodes[0].policy_table = table(at_origin);
  dep.service_nodes[0].forward_routes = {{3, "serv2"}};
  dep.service_nodes[1].policy_table = table(at_next);
  GridSession s(dep);
  Enroll(s, "alice", StateSet{1});
  s.RequestAccess("alice");
  ForwardOutcome out;
  const auto sends = OfType(s.trace(), MsgType::kSendNode);
  if (!sends.empty()) out.chosen_node = sends.back().As<SendNode>()->service_node_addr;
  if (!s.user("alice")->ticket()) return out;
  const RunResult r = s.Run({Inject(UserAddress("alice"), "serv1",
                                    ServiceInvoke{3, *s.user("alice")->ticket()})});
  out.results = OfType(r.trace, MsgType::kServiceResult, UserAddress("alice"));
  out.errors = ErrorsTo(r.trace, UserAddress("alice"));
  out.forwards = OfType(r.trace, MsgType::kForwardReq).size();
  return out;
}

}  // namespace cmms::testing

#endif  // CMMS_TESTS_GRID_UTIL_H_

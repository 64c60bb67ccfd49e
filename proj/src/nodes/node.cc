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

#include "cmms/node.h"

#include "cmms/error.h"

namespace cmms {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string_view NodeKindName(NodeKind kind) {
  switch (kind) {
    case NodeKind::kUser:
      return "user";
    case NodeKind::kDiscovery:
      return "discovery";
    case NodeKind::kService:
      return "service";
    case NodeKind::kCa:
      return "ca";
    case NodeKind::kRepository:
      return "repository";
    case NodeKind::kMonitor:
      return "monitor";
    case NodeKind::kProbe:
      return "probe";
  }
  return "probe";
}

NodeKind ParseNodeKind(std::string_view name) {
  for (NodeKind k : {NodeKind::kUser, NodeKind::kDiscovery, NodeKind::kService,
                     NodeKind::kCa, NodeKind::kRepository, NodeKind::kMonitor,
                     NodeKind::kProbe}) {
    if (NodeKindName(k) == name) return k;
  }
  throw CmmsError(ErrorCode::kConfig, "unknown node kind '" + std::string(name) + "'");
}

std::string_view CommandName(const Command& cmd) {
  return std::visit(
      Overloaded{
          [](const RegisterCmd&) { return std::string_view("register"); },
          [](const RequestAccessCmd&) { return std::string_view("request_access"); },
          [](const InvokeCmd&) { return std::string_view("invoke"); },
          [](const SeedStatesCmd&) { return std::string_view("seed_states"); },
          [](const SetStatesCmd&) { return std::string_view("set_states"); },
          [](const RevokeSubjectCmd&) { return std::string_view("revoke_subject"); },
          [](const ExpireTicketsCmd&) { return std::string_view("expire_tickets"); },
          [](const SendCmd&) { return std::string_view("send"); },
      },
      cmd);
}

Json CommandToJson(const Command& cmd) {
  Json j = std::visit(
      Overloaded{
          [](const RegisterCmd&) { return Json::object(); },
          [](const RequestAccessCmd& c) { return Json{{"discovery", c.discovery}}; },
          [](const InvokeCmd& c) { return Json{{"service_id", c.service_id}}; },
          [](const SeedStatesCmd& c) {
            return Json{{"subject", c.subject}, {"states", SetToJson(c.states)}};
          },
          [](const SetStatesCmd& c) {
            return Json{{"subject", c.subject}, {"states", SetToJson(c.states)}};
          },
          [](const RevokeSubjectCmd& c) { return Json{{"subject", c.subject}}; },
          [](const ExpireTicketsCmd&) { return Json::object(); },
          [](const SendCmd& c) {
            Envelope probe;
            probe.payload = c.payload;
            const Json env = EnvelopeToJson(probe);
            return Json{{"recipient", c.recipient},
                        {"type", env["type"]},
                        {"payload", env["payload"]}};
          },
      },
      cmd);
  j["op"] = CommandName(cmd);
  return j;
}

Command CommandFromJson(const Json& j) {
  if (!j.is_object() || !j.contains("op") || !j["op"].is_string()) {
    throw CmmsError(ErrorCode::kSchema, "command: expected object with 'op'");
  }
  const std::string op = j["op"].get<std::string>();
  if (op == "register") {
    JsonReader r(j, "command", {"op"});
    return RegisterCmd{};
  }
  if (op == "request_access") {
    JsonReader r(j, "command", {"op", "discovery"});
    return RequestAccessCmd{r.String("discovery")};
  }
  if (op == "invoke") {
    JsonReader r(j, "command", {"op", "service_id"});
    return InvokeCmd{static_cast<int>(r.Uint("service_id"))};
  }
  if (op == "seed_states" || op == "set_states") {
    JsonReader r(j, "command", {"op", "subject", "states"});
    if (op == "seed_states") {
      return SeedStatesCmd{r.String("subject"), r.Set<StateTag>("states")};
    }
    return SetStatesCmd{r.String("subject"), r.Set<StateTag>("states")};
  }
  if (op == "revoke_subject") {
    JsonReader r(j, "command", {"op", "subject"});
    return RevokeSubjectCmd{r.String("subject")};
  }
  if (op == "expire_tickets") {
    JsonReader r(j, "command", {"op"});
    return ExpireTicketsCmd{};
  }
  if (op == "send") {
    JsonReader r(j, "command", {"op", "recipient", "type", "payload"});
    Json env = {{"version", kProtocolVersion}, {"msg_id", 0},
                {"correlation_id", nullptr}, {"sender", ""},
                {"recipient", r.String("recipient")}, {"type", r.Raw("type")},
                {"payload", r.Raw("payload")}};
    return SendCmd{r.String("recipient"), EnvelopeFromJson(env).payload};
  }
  throw CmmsError(ErrorCode::kSchema, "command: unknown op '" + op + "'");
}

std::vector<Envelope> Node::Execute(const Command& cmd, Tick) {
  throw CmmsError(ErrorCode::kConfig, std::string(NodeKindName(kind_)) +
                                          " node does not accept '" +
                                          std::string(CommandName(cmd)) + "'");
}

std::vector<Envelope> Node::Poll(Tick) { return {}; }

Envelope Node::Make(std::string recipient, Payload payload,
                    std::optional<std::uint64_t> correlation_id) {
  Envelope env;
  env.msg_id = next_msg_id_++;
  env.correlation_id = correlation_id;
  env.sender = address_;
  env.recipient = std::move(recipient);
  env.payload = std::move(payload);
  return env;
}

Envelope Node::Reply(const Envelope& request, Payload payload) {
  return Make(request.sender, std::move(payload), request.msg_id);
}

Envelope Node::ErrorReply(const Envelope& request, ErrorCode code,
                          std::string detail) {
  return Reply(request, ErrorMsg{code, std::move(detail)});
}

}  // namespace cmms

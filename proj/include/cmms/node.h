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

#ifndef CMMS_NODE_H_
#define CMMS_NODE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cmms/envelope.h"
#include "cmms/json_util.h"
#include "cmms/signer.h"

namespace cmms {

enum class NodeKind { kUser, kDiscovery, kService, kCa, kRepository, kMonitor, kProbe };
std::string_view NodeKindName(NodeKind kind);
NodeKind ParseNodeKind(std::string_view name);  // throws kConfig

// Local actions a driver (scenario script, CLI, fault injector) hands to one
// node. They never travel on the wire.
struct RegisterCmd {};
struct RequestAccessCmd {
  std::string discovery;
};
struct InvokeCmd {
  int service_id = 0;
};
struct SeedStatesCmd {
  std::string subject;
  StateSet states;
};
struct SetStatesCmd {
  std::string subject;
  StateSet states;
};
struct RevokeSubjectCmd {
  std::string subject;
};
struct ExpireTicketsCmd {};
// Probe only: emit an arbitrary catalog message.
struct SendCmd {
  std::string recipient;
  Payload payload;
};

using Command = std::variant<RegisterCmd, RequestAccessCmd, InvokeCmd,
                             SeedStatesCmd, SetStatesCmd, RevokeSubjectCmd,
                             ExpireTicketsCmd, SendCmd>;

std::string_view CommandName(const Command& cmd);
Json CommandToJson(const Command& cmd);
Command CommandFromJson(const Json& j);  // throws kSchema

// Keys and well-known peers every certified node needs.
struct NodeIdentity {
  std::shared_ptr<const Signer> signer;
  KeyPair keys;
  Bytes ca_public_key;
  std::string ca_address = "ca";
  std::string repository_address = "repository";
};

// A role in the grid: a single-threaded state machine that consumes one
// envelope at a time and answers with outbound envelopes. Step must be a
// pure function of (state, envelope, now).
class Node {
 public:
  Node(NodeKind kind, std::string address)
      : kind_(kind), address_(std::move(address)) {}
  virtual ~Node() = default;

  NodeKind kind() const { return kind_; }
  const std::string& address() const { return address_; }

  virtual std::vector<Envelope> Step(const Envelope& env, Tick now) = 0;

  // Throws CmmsError when the command is not applicable.
  virtual std::vector<Envelope> Execute(const Command& cmd, Tick now);

  // Earliest tick at which Poll has work to do.
  virtual std::optional<Tick> NextDeadline() const { return std::nullopt; }
  virtual std::vector<Envelope> Poll(Tick now);

  virtual Json Snapshot() const = 0;
  virtual std::unique_ptr<Node> Clone() const = 0;

 protected:
  Envelope Make(std::string recipient, Payload payload,
                std::optional<std::uint64_t> correlation_id = std::nullopt);
  Envelope Reply(const Envelope& request, Payload payload);
  Envelope ErrorReply(const Envelope& request, ErrorCode code, std::string detail);

  std::uint64_t next_msg_id() const { return next_msg_id_; }

 private:
  NodeKind kind_;
  std::string address_;
  std::uint64_t next_msg_id_ = 1;
};

}  // namespace cmms

#endif  // CMMS_NODE_H_

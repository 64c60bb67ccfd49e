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

#ifndef CMMS_ENVELOPE_H_
#define CMMS_ENVELOPE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cmms/certificate.h"
#include "cmms/encoding.h"
#include "cmms/id_set.h"

namespace cmms {

inline constexpr int kProtocolVersion = 1;

enum class MsgType {
  kRegUser,
  kRegDisc,
  kRegServ,
  kRegAck,
  kGetCert,
  kCertResponse,
  kGetNode,
  kSendNode,
  kSendEffState,
  kServReq,
  kServiceList,
  kServiceInvoke,
  kServiceResult,
  kForwardReq,
  kStateChange,
  kStoreCert,
  kNodeStatus,
  kError,
  kStateQuery,
  kStateReply,
  kRevoke,
  kCrlUpdate,
};

// "REG_USER", "SERVICE_LIST", ...
std::string_view MsgTypeName(MsgType type);
std::optional<MsgType> ParseMsgType(std::string_view name);
const std::vector<MsgType>& AllMsgTypes();

// Discovery-issued session correlator. ticket_id is 32 lowercase hex digits.
struct Ticket {
  std::string ticket_id;
  std::string user;
  Tick issued_at = 0;
  Tick ttl_ticks = 0;
  Bytes discovery_signature;
  friend bool operator==(const Ticket&, const Ticket&) = default;
};

struct Registration {
  std::string subject_name;
  Bytes public_key;
  friend bool operator==(const Registration&, const Registration&) = default;
};
struct RegUser : Registration {
  static constexpr MsgType kType = MsgType::kRegUser;
};
struct RegDisc : Registration {
  static constexpr MsgType kType = MsgType::kRegDisc;
};
struct RegServ : Registration {
  static constexpr MsgType kType = MsgType::kRegServ;
};
struct RegAck {
  static constexpr MsgType kType = MsgType::kRegAck;
  Certificate cert;
  friend bool operator==(const RegAck&, const RegAck&) = default;
};
struct GetCert {
  static constexpr MsgType kType = MsgType::kGetCert;
  std::string subject_name;
  friend bool operator==(const GetCert&, const GetCert&) = default;
};
struct CertResponse {
  static constexpr MsgType kType = MsgType::kCertResponse;
  Certificate cert;
  Crl crl;
  friend bool operator==(const CertResponse&, const CertResponse&) = default;
};
struct GetNode {
  static constexpr MsgType kType = MsgType::kGetNode;
  std::string user;
  std::uint64_t cert_serial = 0;
  Tick timestamp = 0;
  Bytes user_signature;
  friend bool operator==(const GetNode&, const GetNode&) = default;
};
struct SendNode {
  static constexpr MsgType kType = MsgType::kSendNode;
  std::string service_node_addr;
  Ticket ticket;
  friend bool operator==(const SendNode&, const SendNode&) = default;
};
struct SendEffState {
  static constexpr MsgType kType = MsgType::kSendEffState;
  std::string user;
  StateSet effective_states;
  Ticket ticket;
  friend bool operator==(const SendEffState&, const SendEffState&) = default;
};
struct ServReq {
  static constexpr MsgType kType = MsgType::kServReq;
  std::string user;
  Ticket ticket;
  std::uint64_t cert_serial = 0;
  friend bool operator==(const ServReq&, const ServReq&) = default;
};
struct ServiceList {
  static constexpr MsgType kType = MsgType::kServiceList;
  ServiceSet services;
  Ticket ticket;
  friend bool operator==(const ServiceList&, const ServiceList&) = default;
};
struct ServiceInvoke {
  static constexpr MsgType kType = MsgType::kServiceInvoke;
  int service_id = 0;
  Ticket ticket;
  friend bool operator==(const ServiceInvoke&, const ServiceInvoke&) = default;
};
struct ServiceResult {
  static constexpr MsgType kType = MsgType::kServiceResult;
  int service_id = 0;
  Bytes body;
  friend bool operator==(const ServiceResult&, const ServiceResult&) = default;
};
struct ForwardReq {
  static constexpr MsgType kType = MsgType::kForwardReq;
  Ticket ticket;
  StateSet effective_states;
  std::string origin_node;
  Bytes origin_signature;
  int service_id = 0;
  friend bool operator==(const ForwardReq&, const ForwardReq&) = default;
};
struct StateChange {
  static constexpr MsgType kType = MsgType::kStateChange;
  std::string user;
  StateSet new_states;
  friend bool operator==(const StateChange&, const StateChange&) = default;
};
// The CRL snapshot rides along so the repository never stores a new
// certificate while still serving a stale revocation list.
struct StoreCert {
  static constexpr MsgType kType = MsgType::kStoreCert;
  Certificate cert;
  Crl crl;
  friend bool operator==(const StoreCert&, const StoreCert&) = default;
};
struct NodeStatus {
  static constexpr MsgType kType = MsgType::kNodeStatus;
  bool free = true;
  friend bool operator==(const NodeStatus&, const NodeStatus&) = default;
};
struct ErrorMsg {
  static constexpr MsgType kType = MsgType::kError;
  ErrorCode code = ErrorCode::kSchema;
  std::string detail;
  friend bool operator==(const ErrorMsg&, const ErrorMsg&) = default;
};
// CA asks the monitor for a subject's initial states.
struct StateQuery {
  static constexpr MsgType kType = MsgType::kStateQuery;
  std::string subject_name;
  friend bool operator==(const StateQuery&, const StateQuery&) = default;
};
struct StateReply {
  static constexpr MsgType kType = MsgType::kStateReply;
  std::string subject_name;
  StateSet states;
  friend bool operator==(const StateReply&, const StateReply&) = default;
};
// Monitor tells the CA to revoke a subject outright.
struct Revoke {
  static constexpr MsgType kType = MsgType::kRevoke;
  std::string subject_name;
  friend bool operator==(const Revoke&, const Revoke&) = default;
};
struct CrlUpdate {
  static constexpr MsgType kType = MsgType::kCrlUpdate;
  Crl crl;
  friend bool operator==(const CrlUpdate&, const CrlUpdate&) = default;
};

using Payload =
    std::variant<RegUser, RegDisc, RegServ, RegAck, GetCert, CertResponse,
                 GetNode, SendNode, SendEffState, ServReq, ServiceList,
                 ServiceInvoke, ServiceResult, ForwardReq, StateChange,
                 StoreCert, NodeStatus, ErrorMsg, StateQuery, StateReply,
                 Revoke, CrlUpdate>;

struct Envelope {
  int version = kProtocolVersion;
  std::uint64_t msg_id = 0;
  std::optional<std::uint64_t> correlation_id;
  std::string sender;
  std::string recipient;
  Payload payload;

  MsgType type() const;

  template <typename T>
  const T* As() const {
    return std::get_if<T>(&payload);
  }

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

// One line of canonical JSON terminated by LF.
std::string EncodeEnvelope(const Envelope& env);
// Accepts the line with or without its trailing LF. Throws kSchema,
// kUnknownType or kVersion.
Envelope DecodeEnvelope(std::string_view line);

Json EnvelopeToJson(const Envelope& env);
Envelope EnvelopeFromJson(const Json& j);

Json TicketToJson(const Ticket& t);
Ticket TicketFromJson(const Json& j);

}  // namespace cmms

#endif  // CMMS_ENVELOPE_H_

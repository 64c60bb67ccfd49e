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

#include "cmms/envelope.h"

#include <array>
#include <utility>

#include "cmms/error.h"
#include "cmms/json_util.h"

namespace cmms {
namespace {

constexpr std::array<std::pair<MsgType, std::string_view>, 22> kTypeNames = {{
    {MsgType::kRegUser, "REG_USER"},
    {MsgType::kRegDisc, "REG_DISC"},
    {MsgType::kRegServ, "REG_SERV"},
    {MsgType::kRegAck, "REG_ACK"},
    {MsgType::kGetCert, "GET_CERT"},
    {MsgType::kCertResponse, "CERT_RESPONSE"},
    {MsgType::kGetNode, "GET_NODE"},
    {MsgType::kSendNode, "SEND_NODE"},
    {MsgType::kSendEffState, "SEND_EFF_STATE"},
    {MsgType::kServReq, "SERV_REQ"},
    {MsgType::kServiceList, "SERVICE_LIST"},
    {MsgType::kServiceInvoke, "SERVICE_INVOKE"},
    {MsgType::kServiceResult, "SERVICE_RESULT"},
    {MsgType::kForwardReq, "FORWARD_REQ"},
    {MsgType::kStateChange, "STATE_CHANGE"},
    {MsgType::kStoreCert, "STORE_CERT"},
    {MsgType::kNodeStatus, "NODE_STATUS"},
    {MsgType::kError, "ERROR"},
    {MsgType::kStateQuery, "STATE_QUERY"},
    {MsgType::kStateReply, "STATE_REPLY"},
    {MsgType::kRevoke, "REVOKE"},
    {MsgType::kCrlUpdate, "CRL_UPDATE"},
}};

int ServiceIdFrom(const JsonReader& r, std::string_view key) {
  const std::uint64_t v = r.Uint(key);
  if (v < 1 || v > static_cast<std::uint64_t>(ServiceSet::kMaxUniverse)) {
    throw CmmsError(ErrorCode::kSchema, std::string(key) + " outside 1..64");
  }
  return static_cast<int>(v);
}

// Payload <-> JSON, one overload pair per catalog entry.

Json ToJson(const Registration& p) {
  return {{"subject_name", p.subject_name},
          {"public_key", Base64Encode(p.public_key)}};
}
template <typename T>
T RegistrationFrom(const Json& j, std::string_view ctx) {
  JsonReader r(j, ctx, {"subject_name", "public_key"});
  T p;
  p.subject_name = r.String("subject_name");
  p.public_key = r.Base64("public_key");
  return p;
}

Json ToJson(const RegAck& p) { return {{"cert", CertificateToJson(p.cert)}}; }
Json ToJson(const GetCert& p) { return {{"subject_name", p.subject_name}}; }
Json ToJson(const CertResponse& p) {
  return {{"cert", CertificateToJson(p.cert)}, {"crl", CrlToJson(p.crl)}};
}
Json ToJson(const GetNode& p) {
  return {{"user", p.user},
          {"cert_serial", p.cert_serial},
          {"timestamp", p.timestamp},
          {"user_signature", Base64Encode(p.user_signature)}};
}
Json ToJson(const SendNode& p) {
  return {{"service_node_addr", p.service_node_addr},
          {"ticket", TicketToJson(p.ticket)}};
}
Json ToJson(const SendEffState& p) {
  return {{"user", p.user},
          {"effective_states", SetToJson(p.effective_states)},
          {"ticket", TicketToJson(p.ticket)}};
}
Json ToJson(const ServReq& p) {
  return {{"user", p.user},
          {"ticket", TicketToJson(p.ticket)},
          {"cert_serial", p.cert_serial}};
}
Json ToJson(const ServiceList& p) {
  return {{"services", SetToJson(p.services)},
          {"ticket", TicketToJson(p.ticket)}};
}
Json ToJson(const ServiceInvoke& p) {
  return {{"service_id", p.service_id}, {"ticket", TicketToJson(p.ticket)}};
}
Json ToJson(const ServiceResult& p) {
  return {{"service_id", p.service_id}, {"body", Base64Encode(p.body)}};
}
Json ToJson(const ForwardReq& p) {
  return {{"ticket", TicketToJson(p.ticket)},
          {"effective_states", SetToJson(p.effective_states)},
          {"origin_node", p.origin_node},
          {"origin_signature", Base64Encode(p.origin_signature)},
          {"service_id", p.service_id}};
}
Json ToJson(const StateChange& p) {
  return {{"user", p.user}, {"new_states", SetToJson(p.new_states)}};
}
Json ToJson(const StoreCert& p) {
  return {{"cert", CertificateToJson(p.cert)}, {"crl", CrlToJson(p.crl)}};
}
Json ToJson(const NodeStatus& p) { return {{"free", p.free}}; }
Json ToJson(const ErrorMsg& p) {
  return {{"code", ErrorCodeName(p.code)}, {"detail", p.detail}};
}
Json ToJson(const StateQuery& p) { return {{"subject_name", p.subject_name}}; }
Json ToJson(const StateReply& p) {
  return {{"subject_name", p.subject_name}, {"states", SetToJson(p.states)}};
}
Json ToJson(const Revoke& p) { return {{"subject_name", p.subject_name}}; }
Json ToJson(const CrlUpdate& p) { return {{"crl", CrlToJson(p.crl)}}; }

Payload PayloadFromJson(MsgType type, const Json& j) {
  const std::string ctx = "payload(" + std::string(MsgTypeName(type)) + ")";
  switch (type) {
    case MsgType::kRegUser:
      return RegistrationFrom<RegUser>(j, ctx);
    case MsgType::kRegDisc:
      return RegistrationFrom<RegDisc>(j, ctx);
    case MsgType::kRegServ:
      return RegistrationFrom<RegServ>(j, ctx);
    case MsgType::kRegAck: {
      JsonReader r(j, ctx, {"cert"});
      return RegAck{CertificateFromJson(r.Raw("cert"))};
    }
    case MsgType::kGetCert: {
      JsonReader r(j, ctx, {"subject_name"});
      return GetCert{r.String("subject_name")};
    }
    case MsgType::kCertResponse: {
      JsonReader r(j, ctx, {"cert", "crl"});
      return CertResponse{CertificateFromJson(r.Raw("cert")),
                          CrlFromJson(r.Raw("crl"))};
    }
    case MsgType::kGetNode: {
      JsonReader r(j, ctx, {"user", "cert_serial", "timestamp", "user_signature"});
      return GetNode{r.String("user"), r.Uint("cert_serial"), r.Int("timestamp"),
                     r.Base64("user_signature")};
    }
    case MsgType::kSendNode: {
      JsonReader r(j, ctx, {"service_node_addr", "ticket"});
      return SendNode{r.String("service_node_addr"), TicketFromJson(r.Raw("ticket"))};
    }
    case MsgType::kSendEffState: {
      JsonReader r(j, ctx, {"user", "effective_states", "ticket"});
      return SendEffState{r.String("user"), r.Set<StateTag>("effective_states"),
                          TicketFromJson(r.Raw("ticket"))};
    }
    case MsgType::kServReq: {
      JsonReader r(j, ctx, {"user", "ticket", "cert_serial"});
      return ServReq{r.String("user"), TicketFromJson(r.Raw("ticket")),
                     r.Uint("cert_serial")};
    }
    case MsgType::kServiceList: {
      JsonReader r(j, ctx, {"services", "ticket"});
      return ServiceList{r.Set<ServiceTag>("services"),
                         TicketFromJson(r.Raw("ticket"))};
    }
    case MsgType::kServiceInvoke: {
      JsonReader r(j, ctx, {"service_id", "ticket"});
      return ServiceInvoke{ServiceIdFrom(r, "service_id"),
                           TicketFromJson(r.Raw("ticket"))};
    }
    case MsgType::kServiceResult: {
      JsonReader r(j, ctx, {"service_id", "body"});
      return ServiceResult{ServiceIdFrom(r, "service_id"), r.Base64("body")};
    }
    case MsgType::kForwardReq: {
      JsonReader r(j, ctx,
                   {"ticket", "effective_states", "origin_node",
                    "origin_signature", "service_id"});
      return ForwardReq{TicketFromJson(r.Raw("ticket")),
                        r.Set<StateTag>("effective_states"),
                        r.String("origin_node"), r.Base64("origin_signature"),
                        ServiceIdFrom(r, "service_id")};
    }
    case MsgType::kStateChange: {
      JsonReader r(j, ctx, {"user", "new_states"});
      return StateChange{r.String("user"), r.Set<StateTag>("new_states")};
    }
    case MsgType::kStoreCert: {
      JsonReader r(j, ctx, {"cert", "crl"});
      return StoreCert{CertificateFromJson(r.Raw("cert")), CrlFromJson(r.Raw("crl"))};
    }
    case MsgType::kNodeStatus: {
      JsonReader r(j, ctx, {"free"});
      return NodeStatus{r.Bool("free")};
    }
    case MsgType::kError: {
      JsonReader r(j, ctx, {"code", "detail"});
      const auto code = ParseErrorCode(r.String("code"));
      if (!code) throw CmmsError(ErrorCode::kSchema, ctx + ".code: unknown error code");
      return ErrorMsg{*code, r.String("detail")};
    }
    case MsgType::kStateQuery: {
      JsonReader r(j, ctx, {"subject_name"});
      return StateQuery{r.String("subject_name")};
    }
    case MsgType::kStateReply: {
      JsonReader r(j, ctx, {"subject_name", "states"});
      return StateReply{r.String("subject_name"), r.Set<StateTag>("states")};
    }
    case MsgType::kRevoke: {
      JsonReader r(j, ctx, {"subject_name"});
      return Revoke{r.String("subject_name")};
    }
    case MsgType::kCrlUpdate: {
      JsonReader r(j, ctx, {"crl"});
      return CrlUpdate{CrlFromJson(r.Raw("crl"))};
    }
  }
  throw CmmsError(ErrorCode::kUnknownType, "unhandled message type");
}

}  // namespace

std::string_view MsgTypeName(MsgType type) {
  for (const auto& [t, name] : kTypeNames) {
    if (t == type) return name;
  }
  return "UNKNOWN";
}

std::optional<MsgType> ParseMsgType(std::string_view name) {
  for (const auto& [t, n] : kTypeNames) {
    if (n == name) return t;
  }
  return std::nullopt;
}

const std::vector<MsgType>& AllMsgTypes() {
  static const std::vector<MsgType> kAll = [] {
    std::vector<MsgType> v;
    for (const auto& [t, name] : kTypeNames) v.push_back(t);
    return v;
  }();
  return kAll;
}

MsgType Envelope::type() const {
  return std::visit([](const auto& p) { return std::decay_t<decltype(p)>::kType; },
                    payload);
}

Json TicketToJson(const Ticket& t) {
  return {{"ticket_id", t.ticket_id},
          {"user", t.user},
          {"issued_at", t.issued_at},
          {"ttl_ticks", t.ttl_ticks},
          {"discovery_signature", Base64Encode(t.discovery_signature)}};
}

Ticket TicketFromJson(const Json& j) {
  JsonReader r(j, "ticket",
               {"ticket_id", "user", "issued_at", "ttl_ticks", "discovery_signature"});
  Ticket t;
  t.ticket_id = r.String("ticket_id");
  if (t.ticket_id.size() != 32 ||
      t.ticket_id.find_first_not_of("0123456789abcdef") != std::string::npos) {
    throw CmmsError(ErrorCode::kSchema, "ticket.ticket_id: expected 32 hex digits");
  }
  t.user = r.String("user");
  t.issued_at = r.Int("issued_at");
  t.ttl_ticks = r.Int("ttl_ticks");
  if (t.ttl_ticks <= 0) {
    throw CmmsError(ErrorCode::kSchema, "ticket.ttl_ticks: must be positive");
  }
  t.discovery_signature = r.Base64("discovery_signature");
  return t;
}

Json EnvelopeToJson(const Envelope& env) {
  Json j;
  j["version"] = env.version;
  j["msg_id"] = env.msg_id;
  j["correlation_id"] = env.correlation_id ? Json(*env.correlation_id) : Json(nullptr);
  j["sender"] = env.sender;
  j["recipient"] = env.recipient;
  j["type"] = MsgTypeName(env.type());
  j["payload"] = std::visit([](const auto& p) { return ToJson(p); }, env.payload);
  return j;
}

Envelope EnvelopeFromJson(const Json& j) {
  if (!j.is_object()) throw CmmsError(ErrorCode::kSchema, "envelope: expected object");
  if (auto v = j.find("version"); v != j.end() && v->is_number_integer() &&
                                  *v != kProtocolVersion) {
    throw CmmsError(ErrorCode::kVersion,
                    "unsupported protocol version " + v->dump());
  }
  JsonReader r(j, "envelope",
               {"version", "msg_id", "correlation_id", "sender", "recipient",
                "type", "payload"});
  Envelope env;
  env.version = static_cast<int>(r.Int("version"));
  env.msg_id = r.Uint("msg_id");
  if (!r.IsNull("correlation_id")) env.correlation_id = r.Uint("correlation_id");
  env.sender = r.String("sender");
  env.recipient = r.String("recipient");
  const std::string type_name = r.String("type");
  const auto type = ParseMsgType(type_name);
  if (!type) {
    throw CmmsError(ErrorCode::kUnknownType, "unknown msg_type '" + type_name + "'");
  }
  env.payload = PayloadFromJson(*type, r.Raw("payload"));
  return env;
}

std::string EncodeEnvelope(const Envelope& env) {
  return CanonicalDump(EnvelopeToJson(env)) + "\n";
}

Envelope DecodeEnvelope(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (line.find('\n') != std::string_view::npos) {
    throw CmmsError(ErrorCode::kSchema, "envelope spans more than one line");
  }
  return EnvelopeFromJson(ParseJson(line));
}

}  // namespace cmms

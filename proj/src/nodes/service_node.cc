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

#include <algorithm>

#include "cmms/error.h"
#include "cmms/roles.h"

namespace cmms {

ServiceNode::ServiceNode(std::string address, ServiceConfig cfg)
    : Node(NodeKind::kService, std::move(address)), cfg_(std::move(cfg)) {}

bool ServiceNode::TicketOk(const Ticket& ticket, Tick now) const {
  return ValidateTicket(ticket, *cfg_.id.signer, cfg_.discovery_public_key, now) ==
         TicketStatus::kOk;
}

std::optional<ServiceSet> ServiceNode::MappedServices(const std::string& ticket_id) const {
  auto it = sessions_.find(ticket_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second.mapped;
}

// Every effective-state record produces exactly one busy and, once consumed
// or expired, one free status towards discovery.
void ServiceNode::ConsumeRecord(const std::string& ticket_id, std::vector<Envelope>& out) {
  if (eff_records_.erase(ticket_id) > 0) {
    out.push_back(Make(cfg_.discovery_address, NodeStatus{true}));
  }
}

void ServiceNode::Purge(Tick now, std::vector<Envelope>& out) {
  std::vector<std::string> expired;
  for (const auto& [id, rec] : eff_records_) {
    if (rec.expiry <= now) expired.push_back(id);
  }
  for (const auto& id : expired) ConsumeRecord(id, out);
  std::erase_if(sessions_, [now](const auto& kv) { return kv.second.expiry <= now; });
}

Envelope ServiceNode::FetchCert(const std::string& subject, PendingKind kind,
                                const Envelope& request) {
  Envelope get = Make(cfg_.id.repository_address, GetCert{subject});
  pending_.emplace(get.msg_id, Pending{kind, request});
  return get;
}

Bytes ServiceNode::RenderBody(int service_id) const {
  auto it = cfg_.service_names.find(service_id);
  const std::string name =
      it != cfg_.service_names.end() ? it->second : "service " + std::to_string(service_id);
  return ToBytes(CanonicalDump(
      Json{{"service_id", service_id}, {"name", name}, {"rendered_by", address()}}));
}

std::vector<Envelope> ServiceNode::Execute(const Command& cmd, Tick now) {
  if (std::holds_alternative<RegisterCmd>(cmd)) {
    return {Make(cfg_.id.ca_address, RegServ{{address(), cfg_.id.keys.public_key}})};
  }
  if (std::holds_alternative<ExpireTicketsCmd>(cmd)) {
    std::vector<Envelope> out;
    std::vector<std::string> ids;
    for (const auto& [id, rec] : eff_records_) ids.push_back(id);
    for (const auto& id : ids) ConsumeRecord(id, out);
    sessions_.clear();
    return out;
  }
  return Node::Execute(cmd, now);
}

std::vector<Envelope> ServiceNode::OnEffState(const Envelope& env, Tick now) {
  const auto& msg = *env.As<SendEffState>();
  if (env.sender != cfg_.discovery_address || !TicketOk(msg.ticket, now) ||
      msg.ticket.user != msg.user) {
    return {ErrorReply(env, ErrorCode::kAuth, "effective state not from a valid ticket")};
  }
  std::vector<Envelope> out;
  if (eff_records_.count(msg.ticket.ticket_id) == 0) {
    out.push_back(Make(cfg_.discovery_address, NodeStatus{false}));
  }
  eff_records_[msg.ticket.ticket_id] =
      EffRecord{msg.user, msg.effective_states, msg.ticket.issued_at + msg.ticket.ttl_ticks};

  // Release requests that arrived ahead of their effective state.
  std::vector<Envelope> ready;
  std::erase_if(held_, [&](const Held& h) {
    if (h.request.As<ServReq>()->ticket.ticket_id != msg.ticket.ticket_id) return false;
    ready.push_back(h.request);
    return true;
  });
  for (const auto& req : ready) {
    out.push_back(FetchCert(req.As<ServReq>()->user, PendingKind::kServReq, req));
  }
  return out;
}

std::vector<Envelope> ServiceNode::OnServReq(const Envelope& env, Tick now) {
  const auto& req = *env.As<ServReq>();
  if (!TicketOk(req.ticket, now) || req.ticket.user != req.user) {
    return {ErrorReply(env, ErrorCode::kNoSession, "ticket invalid or expired")};
  }
  auto it = eff_records_.find(req.ticket.ticket_id);
  if (it == eff_records_.end()) {
    held_.push_back(Held{env, now + cfg_.hold_window});
    return {};
  }
  if (it->second.user != req.user) {
    return {ErrorReply(env, ErrorCode::kNoSession, "ticket belongs to another user")};
  }
  return {FetchCert(req.user, PendingKind::kServReq, env)};
}

std::vector<Envelope> ServiceNode::CompleteServReq(const Envelope& request,
                                                   const Envelope& reply, Tick now) {
  const auto& req = *request.As<ServReq>();
  const std::string& tid = req.ticket.ticket_id;
  std::vector<Envelope> out;

  auto rec = eff_records_.find(tid);
  if (rec == eff_records_.end()) {
    out.push_back(ErrorReply(request, ErrorCode::kNoSession, "effective state expired"));
    return out;
  }
  const EffRecord record = rec->second;

  std::string failure;
  if (const auto* err = reply.As<ErrorMsg>()) {
    failure = "no certificate for '" + req.user + "': " + err->detail;
  } else {
    const auto& resp = *reply.As<CertResponse>();
    const CertStatus status = VerifyCertificate(resp.cert, *cfg_.id.signer,
                                                cfg_.id.ca_public_key, now, resp.crl);
    if (status != CertStatus::kOk) {
      failure = "user certificate is " + std::string(CertStatusName(status));
    } else if (resp.cert.subject_name != req.user || resp.cert.kind != SubjectKind::kUser ||
               resp.cert.serial != req.cert_serial) {
      failure = "presented certificate " + std::to_string(req.cert_serial) +
                " is not the current one";
    }
  }
  if (!failure.empty()) {
    out.push_back(ErrorReply(request, ErrorCode::kCert, failure));
    ConsumeRecord(tid, out);
    return out;
  }

  const ServiceSet mapped = PolicyMap(record.states, cfg_.policy_table);
  sessions_[tid] = Session{req.user, req.ticket, record.states, mapped, record.expiry};
  out.push_back(Reply(request, ServiceList{mapped, req.ticket}));
  ConsumeRecord(tid, out);
  return out;
}

std::vector<Envelope> ServiceNode::OnInvoke(const Envelope& env, Tick now) {
  const auto& inv = *env.As<ServiceInvoke>();
  auto it = sessions_.find(inv.ticket.ticket_id);
  if (!TicketOk(inv.ticket, now) || it == sessions_.end() ||
      it->second.ticket != inv.ticket) {
    return {ErrorReply(env, ErrorCode::kNoSession, "no session for ticket")};
  }
  if (!it->second.mapped.contains(inv.service_id)) {
    return {ErrorReply(env, ErrorCode::kNotAuthorized,
                       "service " + std::to_string(inv.service_id) + " not mapped")};
  }
  if (auto route = cfg_.forward_routes.find(inv.service_id);
      route != cfg_.forward_routes.end()) {
    return ForwardRequest(env, route->second, now);
  }
  return {Reply(env, ServiceResult{inv.service_id, RenderBody(inv.service_id)})};
}

std::vector<Envelope> ServiceNode::ForwardRequest(const Envelope& invoke,
                                                  const std::string& next_node, Tick now) {
  const auto* inv = invoke.As<ServiceInvoke>();
  if (!inv) throw CmmsError(ErrorCode::kSchema, "forward expects SERVICE_INVOKE");
  auto it = sessions_.find(inv->ticket.ticket_id);
  if (!TicketOk(inv->ticket, now) || it == sessions_.end()) {
    return {ErrorReply(invoke, ErrorCode::kNoSession, "no session for ticket")};
  }
  const Session& session = it->second;
  if (!session.mapped.contains(inv->service_id)) {
    return {ErrorReply(invoke, ErrorCode::kNotAuthorized,
                       "service " + std::to_string(inv->service_id) + " not mapped")};
  }
  ForwardReq fwd;
  fwd.ticket = session.ticket;
  fwd.effective_states = session.effective;
  fwd.origin_node = address();
  fwd.service_id = inv->service_id;
  fwd.origin_signature = cfg_.id.signer->Sign(
      cfg_.id.keys.private_key,
      ForwardProofBytes(fwd.ticket, fwd.effective_states, fwd.origin_node, fwd.service_id));
  Envelope out = Make(next_node, std::move(fwd));
  forwards_.emplace(out.msg_id, invoke);
  return {out};
}

std::vector<Envelope> ServiceNode::OnForwardReq(const Envelope& env, Tick now) {
  const auto& fwd = *env.As<ForwardReq>();
  switch (ValidateTicket(fwd.ticket, *cfg_.id.signer, cfg_.discovery_public_key, now)) {
    case TicketStatus::kBadSignature:
      return {ErrorReply(env, ErrorCode::kAuth, "forwarded ticket signature invalid")};
    case TicketStatus::kExpired:
      return {ErrorReply(env, ErrorCode::kNoSession, "forwarded ticket expired")};
    case TicketStatus::kOk:
      break;
  }
  if (fwd.origin_node != env.sender) {
    return {ErrorReply(env, ErrorCode::kAuth, "origin does not match sender")};
  }
  return {FetchCert(fwd.origin_node, PendingKind::kForward, env)};
}

std::vector<Envelope> ServiceNode::CompleteForward(const Envelope& request,
                                                   const Envelope& reply, Tick now) {
  const auto& fwd = *request.As<ForwardReq>();
  const auto* resp = reply.As<CertResponse>();
  if (!resp) {
    return {ErrorReply(request, ErrorCode::kAuth, "origin node is not certified")};
  }
  const CertStatus status = VerifyCertificate(resp->cert, *cfg_.id.signer,
                                              cfg_.id.ca_public_key, now, resp->crl);
  if (status != CertStatus::kOk || resp->cert.kind != SubjectKind::kService ||
      resp->cert.subject_name != fwd.origin_node) {
    return {ErrorReply(request, ErrorCode::kAuth, "origin certificate rejected")};
  }
  if (!cfg_.id.signer->Verify(resp->cert.public_key,
                              ForwardProofBytes(fwd.ticket, fwd.effective_states,
                                                fwd.origin_node, fwd.service_id),
                              fwd.origin_signature)) {
    return {ErrorReply(request, ErrorCode::kAuth, "bad origin signature")};
  }
  const ServiceSet mapped = PolicyMap(fwd.effective_states, cfg_.policy_table);
  if (!mapped.contains(fwd.service_id)) {
    return {ErrorReply(request, ErrorCode::kNotAuthorized,
                       "service " + std::to_string(fwd.service_id) +
                           " not mapped at " + address())};
  }
  return {Reply(request, ServiceResult{fwd.service_id, RenderBody(fwd.service_id)})};
}

std::vector<Envelope> ServiceNode::OnPendingReply(const Pending& pending,
                                                  const Envelope& reply, Tick now) {
  if (pending.kind == PendingKind::kServReq) {
    return CompleteServReq(pending.request, reply, now);
  }
  return CompleteForward(pending.request, reply, now);
}

std::vector<Envelope> ServiceNode::Step(const Envelope& env, Tick now) {
  std::vector<Envelope> out;
  Purge(now, out);
  auto append = [&out](std::vector<Envelope> more) {
    for (auto& e : more) out.push_back(std::move(e));
    return out;
  };

  if (env.correlation_id && (env.As<CertResponse>() || env.As<ErrorMsg>())) {
    if (auto it = pending_.find(*env.correlation_id); it != pending_.end()) {
      const Pending pending = it->second;
      pending_.erase(it);
      return append(OnPendingReply(pending, env, now));
    }
  }
  if (env.correlation_id && (env.As<ServiceResult>() || env.As<ErrorMsg>())) {
    if (auto it = forwards_.find(*env.correlation_id); it != forwards_.end()) {
      const Envelope invoke = it->second;
      forwards_.erase(it);
      return append({Reply(invoke, env.payload)});
    }
  }
  if (env.As<SendEffState>()) return append(OnEffState(env, now));
  if (env.As<ServReq>()) return append(OnServReq(env, now));
  if (env.As<ServiceInvoke>()) return append(OnInvoke(env, now));
  if (env.As<ForwardReq>()) return append(OnForwardReq(env, now));
  if (const auto* ack = env.As<RegAck>()) {
    if (ack->cert.subject_name == address()) own_cert_ = ack->cert;
  }
  return out;
}

std::optional<Tick> ServiceNode::NextDeadline() const {
  std::optional<Tick> next;
  auto consider = [&next](Tick t) {
    if (!next || t < *next) next = t;
  };
  for (const auto& h : held_) consider(h.deadline);
  for (const auto& [id, rec] : eff_records_) consider(rec.expiry);
  return next;
}

std::vector<Envelope> ServiceNode::Poll(Tick now) {
  std::vector<Envelope> out;
  Purge(now, out);
  std::vector<Envelope> expired;
  std::erase_if(held_, [&](const Held& h) {
    if (h.deadline > now) return false;
    expired.push_back(h.request);
    return true;
  });
  for (const auto& req : expired) {
    out.push_back(ErrorReply(req, ErrorCode::kNoSession,
                             "no effective state arrived within the hold window"));
  }
  return out;
}

Json ServiceNode::Snapshot() const {
  Json sessions = Json::object();
  for (const auto& [id, s] : sessions_) {
    sessions[id] = Json{{"user", s.user}, {"mapped", SetToJson(s.mapped)}};
  }
  Json j = {{"kind", "service"},
            {"eff_records", eff_records_.size()},
            {"held", held_.size()},
            {"sessions", sessions}};
  j["cert_serial"] = own_cert_ ? Json(own_cert_->serial) : Json(nullptr);
  return j;
}

}  // namespace cmms

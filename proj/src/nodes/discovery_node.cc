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

#include "cmms/error.h"
#include "cmms/roles.h"

namespace cmms {

DiscoveryNode::DiscoveryNode(std::string address, DiscoveryConfig cfg)
    : Node(NodeKind::kDiscovery, std::move(address)),
      cfg_(std::move(cfg)),
      rng_(cfg_.nonce_seed) {
  cfg_.vo_filter.Validate();
  for (const auto& addr : cfg_.service_nodes) roster_.push_back({addr, true});
}

bool DiscoveryNode::IsFree(const std::string& service_node) const {
  for (const auto& slot : roster_) {
    if (slot.address == service_node) return slot.free;
  }
  return false;
}

std::optional<std::size_t> DiscoveryNode::NextFree() const {
  for (std::size_t i = 0; i < roster_.size(); ++i) {
    const std::size_t idx = (rr_cursor_ + i) % roster_.size();
    if (roster_[idx].free) return idx;
  }
  return std::nullopt;
}

std::string DiscoveryNode::NewTicketId() {
  Bytes nonce;
  for (int word = 0; word < 2; ++word) {
    const std::uint64_t v = rng_();
    for (int i = 0; i < 8; ++i) nonce.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  return HexEncode(nonce);
}

std::vector<Envelope> DiscoveryNode::Execute(const Command& cmd, Tick now) {
  if (std::holds_alternative<RegisterCmd>(cmd)) {
    return {Make(cfg_.id.ca_address, RegDisc{{address(), cfg_.id.keys.public_key}})};
  }
  return Node::Execute(cmd, now);
}

std::vector<Envelope> DiscoveryNode::OnGetNode(const Envelope& env, Tick now) {
  const auto& req = *env.As<GetNode>();
  if (req.timestamp > now || now - req.timestamp > cfg_.replay_window) {
    return {ErrorReply(env, ErrorCode::kAuth, "authentication proof outside replay window")};
  }
  Envelope get = Make(cfg_.id.repository_address, GetCert{req.user});
  pending_.emplace(get.msg_id, env);
  return {get};
}

std::vector<Envelope> DiscoveryNode::OnUserCert(const Envelope& request,
                                                const Envelope& reply, Tick now) {
  const auto& req = *request.As<GetNode>();
  if (reply.As<ErrorMsg>()) {
    return {ErrorReply(request, ErrorCode::kCert, "no certificate for '" + req.user + "'")};
  }
  const auto& resp = *reply.As<CertResponse>();
  const Certificate& cert = resp.cert;
  const CertStatus status =
      VerifyCertificate(cert, *cfg_.id.signer, cfg_.id.ca_public_key, now, resp.crl);
  if (status != CertStatus::kOk) {
    return {ErrorReply(request, ErrorCode::kCert,
                       "user certificate is " + std::string(CertStatusName(status)))};
  }
  if (cert.subject_name != req.user || cert.kind != SubjectKind::kUser ||
      cert.serial != req.cert_serial) {
    return {ErrorReply(request, ErrorCode::kCert,
                       "presented certificate " + std::to_string(req.cert_serial) +
                           " is not the current one")};
  }
  if (!cfg_.id.signer->Verify(cert.public_key,
                              AuthProofBytes(req.user, req.timestamp, address()),
                              req.user_signature)) {
    return {ErrorReply(request, ErrorCode::kAuth, "bad authentication proof")};
  }

  const StateSet effective = EffectiveState(cert.state_list, cfg_.vo_filter, req.user);

  const auto chosen = NextFree();
  if (!chosen) {
    return {ErrorReply(request, ErrorCode::kNoNode, "no free service node")};
  }
  Slot& slot = roster_[*chosen];
  slot.free = false;
  rr_cursor_ = (*chosen + 1) % roster_.size();

  Ticket ticket;
  ticket.ticket_id = NewTicketId();
  ticket.user = req.user;
  ticket.issued_at = now;
  ticket.ttl_ticks = cfg_.ticket_ttl;
  ticket = SignTicket(std::move(ticket), *cfg_.id.signer, cfg_.id.keys.private_key);

  std::vector<Envelope> out;
  out.push_back(Reply(request, SendNode{slot.address, ticket}));
  out.push_back(Make(slot.address, SendEffState{req.user, effective, ticket}));
  return out;
}

std::vector<Envelope> DiscoveryNode::Step(const Envelope& env, Tick now) {
  if (env.As<GetNode>()) return OnGetNode(env, now);

  if (env.correlation_id) {
    if (auto it = pending_.find(*env.correlation_id); it != pending_.end() &&
                                                      (env.As<CertResponse>() ||
                                                       env.As<ErrorMsg>())) {
      const Envelope request = it->second;
      pending_.erase(it);
      return OnUserCert(request, env, now);
    }
  }
  if (const auto* status = env.As<NodeStatus>()) {
    for (auto& slot : roster_) {
      if (slot.address == env.sender) slot.free = status->free;
    }
    return {};
  }
  if (const auto* ack = env.As<RegAck>()) {
    if (ack->cert.subject_name == address()) own_cert_ = ack->cert;
    return {};
  }
  return {};
}

Json DiscoveryNode::Snapshot() const {
  Json free = Json::array();
  for (const auto& slot : roster_) {
    if (slot.free) free.push_back(slot.address);
  }
  Json j = {{"kind", "discovery"},
            {"rr_cursor", rr_cursor_},
            {"free_nodes", free},
            {"pending", pending_.size()}};
  j["cert_serial"] = own_cert_ ? Json(own_cert_->serial) : Json(nullptr);
  return j;
}

}  // namespace cmms

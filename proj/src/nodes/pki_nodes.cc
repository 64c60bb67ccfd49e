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

// ---------------------------------------------------------------- CaNode

CaNode::CaNode(std::string address, CaConfig cfg)
    : Node(NodeKind::kCa, address),
      cfg_(std::move(cfg)),
      ca_(std::move(address), cfg_.signer, cfg_.keys, cfg_.state_universe) {}

std::vector<Envelope> CaNode::IssueAndStore(const Envelope& registration,
                                            SubjectKind kind, const Registration& reg,
                                            const StateSet& states, Tick now) {
  Certificate cert;
  try {
    cert = ca_.Issue(reg.subject_name, kind, reg.public_key, states, now,
                     cfg_.validity_ticks);
  } catch (const CmmsError& e) {
    return {ErrorReply(registration, e.code(), e.detail())};
  }
  subject_address_[reg.subject_name] = registration.sender;
  std::vector<Envelope> out;
  out.push_back(Make(cfg_.repository_address, StoreCert{cert, ca_.crl()}));
  out.push_back(Reply(registration, RegAck{cert}));
  return out;
}

std::vector<Envelope> CaNode::OnRegistration(const Envelope& env, SubjectKind kind,
                                             const Registration& reg, Tick now) {
  bool pending = false;
  for (const auto& [id, e] : pending_) {
    pending = pending || e.As<RegUser>()->subject_name == reg.subject_name;
  }
  if (pending || ca_.Current(reg.subject_name)) {
    return {ErrorReply(env, ErrorCode::kDuplicateSubject,
                       "'" + reg.subject_name + "' is already registered")};
  }
  if (kind != SubjectKind::kUser) {
    return IssueAndStore(env, kind, reg, StateSet{}, now);
  }
  // Users get their initial states from the monitor.
  Envelope query = Make(cfg_.monitor_address, StateQuery{reg.subject_name});
  pending_.emplace(query.msg_id, env);
  return {query};
}

std::vector<Envelope> CaNode::Step(const Envelope& env, Tick now) {
  if (const auto* p = env.As<RegUser>()) return OnRegistration(env, SubjectKind::kUser, *p, now);
  if (const auto* p = env.As<RegDisc>()) {
    return OnRegistration(env, SubjectKind::kDiscovery, *p, now);
  }
  if (const auto* p = env.As<RegServ>()) {
    return OnRegistration(env, SubjectKind::kService, *p, now);
  }
  if (const auto* reply = env.As<StateReply>()) {
    if (!env.correlation_id) return {};
    auto it = pending_.find(*env.correlation_id);
    if (it == pending_.end()) return {};
    const Envelope registration = it->second;
    pending_.erase(it);
    return IssueAndStore(registration, SubjectKind::kUser,
                         *registration.As<RegUser>(), reply->states, now);
  }
  if (const auto* change = env.As<StateChange>()) {
    const auto current = ca_.Current(change->user);
    if (!current) {
      return {ErrorReply(env, ErrorCode::kUnknownSubject,
                         "'" + change->user + "' holds no certificate")};
    }
    Certificate next;
    Crl crl;
    try {
      std::tie(next, crl) = ca_.Reissue(*current, change->new_states, now,
                                        cfg_.validity_ticks);
    } catch (const CmmsError& e) {
      return {ErrorReply(env, e.code(), e.detail())};
    }
    std::vector<Envelope> out;
    out.push_back(Make(cfg_.repository_address, StoreCert{next, crl}));
    if (auto addr = subject_address_.find(change->user); addr != subject_address_.end()) {
      out.push_back(Make(addr->second, RegAck{next}));
    }
    return out;
  }
  if (const auto* revoke = env.As<Revoke>()) {
    try {
      return {Make(cfg_.repository_address, CrlUpdate{ca_.Revoke(revoke->subject_name, now)})};
    } catch (const CmmsError& e) {
      return {ErrorReply(env, e.code(), e.detail())};
    }
  }
  return {};
}

Json CaNode::Snapshot() const {
  Json j = ca_.Snapshot();
  j["kind"] = "ca";
  j["pending"] = pending_.size();
  return j;
}

// -------------------------------------------------------- RepositoryNode

RepositoryNode::RepositoryNode(std::string address, std::shared_ptr<const Signer> signer,
                               Bytes ca_public_key)
    : Node(NodeKind::kRepository, std::move(address)),
      repo_(std::move(signer), std::move(ca_public_key)) {}

std::vector<Envelope> RepositoryNode::Step(const Envelope& env, Tick now) {
  if (const auto* store = env.As<StoreCert>()) {
    repo_.MergeCrl(store->crl);
    try {
      repo_.StoreCert(store->cert, now);
    } catch (const CmmsError& e) {
      return {ErrorReply(env, e.code(), e.detail())};
    }
    return {};
  }
  if (const auto* update = env.As<CrlUpdate>()) {
    repo_.MergeCrl(update->crl);
    return {};
  }
  if (const auto* get = env.As<GetCert>()) {
    try {
      return {Reply(env, CertResponse{repo_.GetCert(get->subject_name), repo_.GetCrl()})};
    } catch (const CmmsError& e) {
      return {ErrorReply(env, e.code(), e.detail())};
    }
  }
  return {};
}

Json RepositoryNode::Snapshot() const {
  Json j = repo_.Snapshot();
  j["kind"] = "repository";
  return j;
}

// ----------------------------------------------------------- MonitorNode

MonitorNode::MonitorNode(std::string address, MonitorConfig cfg)
    : Node(NodeKind::kMonitor, std::move(address)), cfg_(std::move(cfg)) {
  CheckRange(cfg_.default_initial_states);
}

void MonitorNode::CheckRange(const StateSet& states) const {
  if (!states.WithinUniverse(cfg_.state_universe)) {
    throw CmmsError(ErrorCode::kRange, "states " + states.ToString() +
                                           " outside 1.." +
                                           std::to_string(cfg_.state_universe));
  }
}

std::optional<StateSet> MonitorNode::States(const std::string& subject) const {
  auto it = authoritative_.find(subject);
  if (it == authoritative_.end()) return std::nullopt;
  return it->second;
}

std::vector<Envelope> MonitorNode::Execute(const Command& cmd, Tick now) {
  if (const auto* seed = std::get_if<SeedStatesCmd>(&cmd)) {
    CheckRange(seed->states);
    authoritative_[seed->subject] = seed->states;
    return {};
  }
  if (const auto* set = std::get_if<SetStatesCmd>(&cmd)) {
    CheckRange(set->states);
    if (!registered_.count(set->subject)) {
      throw CmmsError(ErrorCode::kUnknownSubject,
                      "'" + set->subject + "' is not registered");
    }
    authoritative_[set->subject] = set->states;
    return {Make(cfg_.ca_address, StateChange{set->subject, set->states})};
  }
  if (const auto* revoke = std::get_if<RevokeSubjectCmd>(&cmd)) {
    if (!registered_.count(revoke->subject)) {
      throw CmmsError(ErrorCode::kUnknownSubject,
                      "'" + revoke->subject + "' is not registered");
    }
    return {Make(cfg_.ca_address, Revoke{revoke->subject})};
  }
  return Node::Execute(cmd, now);
}

std::vector<Envelope> MonitorNode::Step(const Envelope& env, Tick) {
  if (const auto* query = env.As<StateQuery>()) {
    auto [it, inserted] =
        authoritative_.try_emplace(query->subject_name, cfg_.default_initial_states);
    registered_.insert(query->subject_name);
    return {Reply(env, StateReply{query->subject_name, it->second})};
  }
  if (const auto* err = env.As<ErrorMsg>()) last_error_ = *err;
  return {};
}

Json MonitorNode::Snapshot() const {
  Json states = Json::object();
  for (const auto& [subject, s] : authoritative_) states[subject] = SetToJson(s);
  Json j = {{"kind", "monitor"}, {"authoritative_states", states}};
  j["last_error"] =
      last_error_ ? Json(std::string(ErrorCodeName(last_error_->code))) : Json(nullptr);
  return j;
}

// ------------------------------------------------------------- ProbeNode

std::vector<Envelope> ProbeNode::Step(const Envelope& env, Tick) {
  inbox_.push_back(env);
  return {};
}

std::vector<Envelope> ProbeNode::Execute(const Command& cmd, Tick now) {
  if (const auto* send = std::get_if<SendCmd>(&cmd)) {
    return {Make(send->recipient, send->payload)};
  }
  return Node::Execute(cmd, now);
}

Json ProbeNode::Snapshot() const {
  return Json{{"kind", "probe"}, {"received", inbox_.size()}};
}

}  // namespace cmms

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
namespace {

std::string_view PhaseName(UserAgent::Phase p) {
  switch (p) {
    case UserAgent::Phase::kIdle:
      return "idle";
    case UserAgent::Phase::kRegistering:
      return "registering";
    case UserAgent::Phase::kAwaitDiscoveryCert:
      return "await_discovery_cert";
    case UserAgent::Phase::kAwaitNode:
      return "await_node";
    case UserAgent::Phase::kAwaitServiceCert:
      return "await_service_cert";
    case UserAgent::Phase::kAwaitServiceList:
      return "await_service_list";
    case UserAgent::Phase::kReady:
      return "ready";
    case UserAgent::Phase::kAwaitResult:
      return "await_result";
    case UserAgent::Phase::kFailed:
      return "failed";
  }
  return "idle";
}

}  // namespace

UserAgent::UserAgent(std::string address, std::string subject_name, NodeIdentity id)
    : Node(NodeKind::kUser, std::move(address)),
      subject_name_(std::move(subject_name)),
      id_(std::move(id)) {}

void UserAgent::Fail(ErrorCode code, std::string detail) {
  last_error_ = ErrorMsg{code, std::move(detail)};
  phase_ = Phase::kFailed;
}

std::vector<Envelope> UserAgent::Execute(const Command& cmd, Tick now) {
  if (std::holds_alternative<RegisterCmd>(cmd)) {
    phase_ = Phase::kRegistering;
    return {Make(id_.ca_address, RegUser{{subject_name_, id_.keys.public_key}})};
  }
  if (const auto* req = std::get_if<RequestAccessCmd>(&cmd)) {
    if (!own_cert_) {
      throw CmmsError(ErrorCode::kUnknownSubject,
                      "'" + subject_name_ + "' is not registered");
    }
    discovery_ = req->discovery;
    service_node_.clear();
    ticket_.reset();
    last_error_.reset();
    last_result_.reset();
    phase_ = Phase::kAwaitDiscoveryCert;
    Envelope get = Make(id_.repository_address, GetCert{discovery_});
    pending_cert_request_ = get.msg_id;
    return {get};
  }
  if (const auto* inv = std::get_if<InvokeCmd>(&cmd)) {
    last_result_.reset();
    if (!ticket_ || service_node_.empty() ||
        !active_services_.contains(inv->service_id)) {
      // Only interfaces named in the last SERVICE_LIST are active.
      last_error_ = ErrorMsg{ErrorCode::kNotAuthorized,
                             "service " + std::to_string(inv->service_id) +
                                 " is not in the active service list"};
      return {};
    }
    last_error_.reset();
    phase_ = Phase::kAwaitResult;
    return {Make(service_node_, ServiceInvoke{inv->service_id, *ticket_})};
  }
  (void)now;
  return Node::Execute(cmd, now);
}

std::vector<Envelope> UserAgent::OnCertResponse(const Envelope& env, Tick now) {
  pending_cert_request_.reset();
  const bool for_discovery = phase_ == Phase::kAwaitDiscoveryCert;
  const std::string& expected = for_discovery ? discovery_ : service_node_;
  const SubjectKind kind = for_discovery ? SubjectKind::kDiscovery : SubjectKind::kService;

  if (const auto* err = env.As<ErrorMsg>()) {
    Fail(ErrorCode::kBadPeerCert, "no certificate for '" + expected + "': " + err->detail);
    return {};
  }
  const auto& resp = *env.As<CertResponse>();
  const CertStatus status = VerifyCertificate(resp.cert, *id_.signer,
                                              id_.ca_public_key, now, resp.crl);
  if (status != CertStatus::kOk || resp.cert.subject_name != expected ||
      resp.cert.kind != kind) {
    Fail(ErrorCode::kBadPeerCert, "certificate for '" + expected + "' is " +
                                      std::string(CertStatusName(status)));
    return {};
  }

  if (for_discovery) {
    phase_ = Phase::kAwaitNode;
    GetNode req;
    req.user = subject_name_;
    req.cert_serial = own_cert_->serial;
    req.timestamp = now;
    req.user_signature = id_.signer->Sign(
        id_.keys.private_key, AuthProofBytes(subject_name_, now, discovery_));
    return {Make(discovery_, std::move(req))};
  }
  phase_ = Phase::kAwaitServiceList;
  return {Make(service_node_, ServReq{subject_name_, *ticket_, own_cert_->serial})};
}

std::vector<Envelope> UserAgent::Step(const Envelope& env, Tick now) {
  if (const auto* ack = env.As<RegAck>()) {
    // Also arrives unsolicited after the CA rotates our certificate.
    if (ack->cert.subject_name == subject_name_ &&
        ack->cert.public_key == id_.keys.public_key) {
      own_cert_ = ack->cert;
      if (phase_ == Phase::kRegistering) phase_ = Phase::kIdle;
    }
    return {};
  }
  if (pending_cert_request_ && env.correlation_id == pending_cert_request_ &&
      (env.As<CertResponse>() || env.As<ErrorMsg>())) {
    return OnCertResponse(env, now);
  }
  if (const auto* sn = env.As<SendNode>()) {
    if (phase_ != Phase::kAwaitNode) return {};
    service_node_ = sn->service_node_addr;
    ticket_ = sn->ticket;
    phase_ = Phase::kAwaitServiceCert;
    Envelope get = Make(id_.repository_address, GetCert{service_node_});
    pending_cert_request_ = get.msg_id;
    return {get};
  }
  if (const auto* list = env.As<ServiceList>()) {
    if (ticket_ && list->ticket.ticket_id == ticket_->ticket_id) {
      active_services_ = list->services;
      phase_ = Phase::kReady;
    }
    return {};
  }
  if (const auto* result = env.As<ServiceResult>()) {
    last_result_ = *result;
    if (phase_ == Phase::kAwaitResult) phase_ = Phase::kReady;
    return {};
  }
  if (const auto* err = env.As<ErrorMsg>()) {
    last_error_ = *err;
    phase_ = phase_ == Phase::kAwaitResult ? Phase::kReady : Phase::kFailed;
    return {};
  }
  return {};
}

Json UserAgent::Snapshot() const {
  Json j = {{"kind", "user"},
            {"subject", subject_name_},
            {"phase", PhaseName(phase_)},
            {"active_services", SetToJson(active_services_)}};
  j["cert_serial"] = own_cert_ ? Json(own_cert_->serial) : Json(nullptr);
  j["ticket_id"] = ticket_ ? Json(ticket_->ticket_id) : Json(nullptr);
  j["last_error"] =
      last_error_ ? Json(std::string(ErrorCodeName(last_error_->code))) : Json(nullptr);
  j["last_result"] = last_result_ ? Json(last_result_->service_id) : Json(nullptr);
  return j;
}

}  // namespace cmms

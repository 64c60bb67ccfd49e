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

#ifndef CMMS_ROLES_H_
#define CMMS_ROLES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cmms/authority.h"
#include "cmms/node.h"
#include "cmms/policy.h"
#include "cmms/ticket.h"

namespace cmms {

// User-side get-access and service-interface parts.
class UserAgent final : public Node {
 public:
  enum class Phase {
    kIdle,
    kRegistering,
    kAwaitDiscoveryCert,
    kAwaitNode,
    kAwaitServiceCert,
    kAwaitServiceList,
    kReady,
    kAwaitResult,
    kFailed,
  };

  UserAgent(std::string address, std::string subject_name, NodeIdentity id);

  std::vector<Envelope> Step(const Envelope& env, Tick now) override;
  // RegisterCmd, RequestAccessCmd, InvokeCmd.
  std::vector<Envelope> Execute(const Command& cmd, Tick now) override;
  Json Snapshot() const override;
  std::unique_ptr<Node> Clone() const override {
    return std::make_unique<UserAgent>(*this);
  }

  const std::string& subject_name() const { return subject_name_; }
  Phase phase() const { return phase_; }
  const std::optional<Certificate>& own_cert() const { return own_cert_; }
  const ServiceSet& active_services() const { return active_services_; }
  const std::optional<Ticket>& ticket() const { return ticket_; }
  const std::optional<ErrorMsg>& last_error() const { return last_error_; }
  const std::optional<ServiceResult>& last_result() const { return last_result_; }

 private:
  void Fail(ErrorCode code, std::string detail);
  std::vector<Envelope> OnCertResponse(const Envelope& env, Tick now);

  std::string subject_name_;
  NodeIdentity id_;
  Phase phase_ = Phase::kIdle;
  std::optional<Certificate> own_cert_;
  std::string discovery_;
  std::string service_node_;
  std::optional<Ticket> ticket_;
  ServiceSet active_services_;
  std::optional<std::uint64_t> pending_cert_request_;
  std::optional<ErrorMsg> last_error_;
  std::optional<ServiceResult> last_result_;
};

struct DiscoveryConfig {
  NodeIdentity id;
  VoFilterConfig vo_filter;
  std::vector<std::string> service_nodes;
  Tick ticket_ttl = kDefaultTicketTtl;
  Tick replay_window = kDefaultReplayWindow;
  std::uint64_t nonce_seed = 0;
};

// Level-1 authentication, FILTER/IMPOSE and free-node selection.
class DiscoveryNode final : public Node {
 public:
  DiscoveryNode(std::string address, DiscoveryConfig cfg);

  std::vector<Envelope> Step(const Envelope& env, Tick now) override;
  std::vector<Envelope> Execute(const Command& cmd, Tick now) override;
  Json Snapshot() const override;
  std::unique_ptr<Node> Clone() const override {
    return std::make_unique<DiscoveryNode>(*this);
  }

  std::size_t rr_cursor() const { return rr_cursor_; }
  bool IsFree(const std::string& service_node) const;

 private:
  struct Slot {
    std::string address;
    bool free = true;
  };

  std::vector<Envelope> OnGetNode(const Envelope& env, Tick now);
  std::vector<Envelope> OnUserCert(const Envelope& request, const Envelope& reply,
                                   Tick now);
  std::optional<std::size_t> NextFree() const;
  std::string NewTicketId();

  DiscoveryConfig cfg_;
  std::vector<Slot> roster_;
  std::size_t rr_cursor_ = 0;
  std::mt19937_64 rng_;
  std::optional<Certificate> own_cert_;
  // GET_CERT msg_id -> the GET_NODE it serves.
  std::map<std::uint64_t, Envelope> pending_;
};

struct ServiceConfig {
  NodeIdentity id;
  std::string discovery_address = "discovery";
  Bytes discovery_public_key;
  PolicyTable policy_table;
  // Presentation names used in canned service results.
  std::map<int, std::string> service_names;
  // Services this node delegates to another node instead of rendering.
  std::map<int, std::string> forward_routes;
  Tick hold_window = kDefaultHoldWindow;
};

// Level-2 authentication, POLICY_MAP, rendering and forwarding.
class ServiceNode final : public Node {
 public:
  ServiceNode(std::string address, ServiceConfig cfg);

  std::vector<Envelope> Step(const Envelope& env, Tick now) override;
  // RegisterCmd, ExpireTicketsCmd.
  std::vector<Envelope> Execute(const Command& cmd, Tick now) override;
  std::optional<Tick> NextDeadline() const override;
  std::vector<Envelope> Poll(Tick now) override;
  Json Snapshot() const override;
  std::unique_ptr<Node> Clone() const override {
    return std::make_unique<ServiceNode>(*this);
  }

  // Relays an authorized SERVICE_INVOKE to next_node as FORWARD_REQ. The
  // result reaches the user only if next_node also maps the service.
  std::vector<Envelope> ForwardRequest(const Envelope& invoke,
                                       const std::string& next_node, Tick now);

  const PolicyTable& policy_table() const { return cfg_.policy_table; }
  std::optional<ServiceSet> MappedServices(const std::string& ticket_id) const;

 private:
  struct EffRecord {
    std::string user;
    StateSet states;
    Tick expiry = 0;
  };
  struct Held {
    Envelope request;
    Tick deadline = 0;
  };
  struct Session {
    std::string user;
    Ticket ticket;
    StateSet effective;
    ServiceSet mapped;
    Tick expiry = 0;
  };
  enum class PendingKind { kServReq, kForward };
  struct Pending {
    PendingKind kind;
    Envelope request;
  };

  void Purge(Tick now, std::vector<Envelope>& out);
  void ConsumeRecord(const std::string& ticket_id, std::vector<Envelope>& out);
  Envelope FetchCert(const std::string& subject, PendingKind kind,
                     const Envelope& request);
  std::vector<Envelope> OnEffState(const Envelope& env, Tick now);
  std::vector<Envelope> OnServReq(const Envelope& env, Tick now);
  std::vector<Envelope> OnInvoke(const Envelope& env, Tick now);
  std::vector<Envelope> OnForwardReq(const Envelope& env, Tick now);
  std::vector<Envelope> OnPendingReply(const Pending& pending,
                                       const Envelope& reply, Tick now);
  std::vector<Envelope> CompleteServReq(const Envelope& request,
                                        const Envelope& reply, Tick now);
  std::vector<Envelope> CompleteForward(const Envelope& request,
                                        const Envelope& reply, Tick now);
  Bytes RenderBody(int service_id) const;
  bool TicketOk(const Ticket& ticket, Tick now) const;

  ServiceConfig cfg_;
  std::optional<Certificate> own_cert_;
  std::map<std::string, EffRecord> eff_records_;
  std::vector<Held> held_;
  std::map<std::string, Session> sessions_;
  std::map<std::uint64_t, Pending> pending_;
  // FORWARD_REQ msg_id -> the user's SERVICE_INVOKE.
  std::map<std::uint64_t, Envelope> forwards_;
};

struct CaConfig {
  std::shared_ptr<const Signer> signer;
  KeyPair keys;
  int state_universe = 8;
  std::string monitor_address = "monitor";
  std::string repository_address = "repository";
  Tick validity_ticks = 100000;
};

class CaNode final : public Node {
 public:
  CaNode(std::string address, CaConfig cfg);

  std::vector<Envelope> Step(const Envelope& env, Tick now) override;
  Json Snapshot() const override;
  std::unique_ptr<Node> Clone() const override {
    return std::make_unique<CaNode>(*this);
  }

  const CertificateAuthority& authority() const { return ca_; }

 private:
  std::vector<Envelope> OnRegistration(const Envelope& env, SubjectKind kind,
                                       const Registration& reg, Tick now);
  std::vector<Envelope> IssueAndStore(const Envelope& registration,
                                      SubjectKind kind, const Registration& reg,
                                      const StateSet& states, Tick now);

  CaConfig cfg_;
  CertificateAuthority ca_;
  // STATE_QUERY msg_id -> REG_USER awaiting the monitor.
  std::map<std::uint64_t, Envelope> pending_;
  std::map<std::string, std::string> subject_address_;
};

class RepositoryNode final : public Node {
 public:
  RepositoryNode(std::string address, std::shared_ptr<const Signer> signer,
                 Bytes ca_public_key);

  std::vector<Envelope> Step(const Envelope& env, Tick now) override;
  Json Snapshot() const override;
  std::unique_ptr<Node> Clone() const override {
    return std::make_unique<RepositoryNode>(*this);
  }

  const CertRepository& repository() const { return repo_; }

 private:
  CertRepository repo_;
};

struct MonitorConfig {
  std::string ca_address = "ca";
  int state_universe = 8;
  // Initial states for subjects the monitor has never been told about.
  StateSet default_initial_states;
};

// Authority over every subject's current states.
class MonitorNode final : public Node {
 public:
  MonitorNode(std::string address, MonitorConfig cfg);

  std::vector<Envelope> Step(const Envelope& env, Tick now) override;
  // SeedStatesCmd, SetStatesCmd, RevokeSubjectCmd.
  std::vector<Envelope> Execute(const Command& cmd, Tick now) override;
  Json Snapshot() const override;
  std::unique_ptr<Node> Clone() const override {
    return std::make_unique<MonitorNode>(*this);
  }

  std::optional<StateSet> States(const std::string& subject) const;

 private:
  void CheckRange(const StateSet& states) const;

  MonitorConfig cfg_;
  std::map<std::string, StateSet> authoritative_;
  std::set<std::string> registered_;
  std::optional<ErrorMsg> last_error_;
};

// Test and CLI sink: records what it receives, emits what it is told to.
class ProbeNode final : public Node {
 public:
  explicit ProbeNode(std::string address) : Node(NodeKind::kProbe, std::move(address)) {}

  std::vector<Envelope> Step(const Envelope& env, Tick now) override;
  std::vector<Envelope> Execute(const Command& cmd, Tick now) override;
  Json Snapshot() const override;
  std::unique_ptr<Node> Clone() const override {
    return std::make_unique<ProbeNode>(*this);
  }

  const std::vector<Envelope>& inbox() const { return inbox_; }

 private:
  std::vector<Envelope> inbox_;
};

}  // namespace cmms

#endif  // CMMS_ROLES_H_

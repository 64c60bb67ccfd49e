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

#ifndef CMMS_DEPLOYMENT_H_
#define CMMS_DEPLOYMENT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cmms/json_util.h"
#include "cmms/policy.h"
#include "cmms/roles.h"
#include "cmms/simnet.h"
#include "cmms/socket_transport.h"

namespace cmms {

// ------------------------------------------------------------ SPIG profile

// Display names of the SPIG states and services.
const std::map<int, std::string>& SpigStateNames();
const std::map<int, std::string>& SpigServiceNames();

// Default SPIG table: 1 -> all four services, 5 -> 94, 6 -> 98,
// 7 -> {3,4}, 8 -> {3}. Every other state is absent and so denied.
PolicyTable SpigDefaultPolicy();

inline constexpr std::uint64_t kDefaultDeploymentSeed = 42;

// ------------------------------------------------------------ deployment

inline constexpr char kCaAddress[] = "ca";
inline constexpr char kRepositoryAddress[] = "repository";
inline constexpr char kMonitorAddress[] = "monitor";
inline constexpr char kDiscoveryAddress[] = "discovery";
inline constexpr char kCliAddress[] = "cli";

std::string UserAddress(const std::string& user);

struct ServiceNodeSpec {
  std::string address;
  // Relative to the deployment directory; empty for in-memory deployments.
  std::string policy_file;
  PolicyTable policy_table;
  std::map<int, std::string> forward_routes;
};

struct Deployment {
  std::string profile = "spig";
  std::uint64_t seed = kDefaultDeploymentSeed;
  std::string signer = "ed25519";
  GridConfig grid = GridConfig::Spig();
  std::map<int, std::string> state_names;
  std::map<int, std::string> service_names;
  VoFilterConfig vo_filter;
  StateSet default_initial_states;
  std::vector<ServiceNodeSpec> service_nodes;
  Tick ticket_ttl = kDefaultTicketTtl;
  Tick replay_window = kDefaultReplayWindow;
  Tick hold_window = kDefaultHoldWindow;
  Tick cert_validity = 100000;
  // Socket-mode listen addresses, "host:port" per grid address.
  std::map<std::string, std::string> endpoints;

  // Throws kConfig when references do not resolve or the VO filter is
  // inconsistent.
  void Validate() const;

  const ServiceNodeSpec* FindService(const std::string& address) const;
};

// The SPIG deployment: one discovery node, one service node "serv1"
// carrying the default table, considered states {1..8}, new users in {8}.
Deployment SpigDeployment(std::uint64_t seed = kDefaultDeploymentSeed);

Json DeploymentToJson(const Deployment& dep);
// Policy files are resolved against `dir`. Throws kSchema, kConfig, kParse.
Deployment DeploymentFromJson(const Json& j, const std::filesystem::path& dir);

inline constexpr char kDeploymentFile[] = "deployment.json";
inline constexpr char kJournalFile[] = "journal.jsonl";

// Writes deployment.json, the policy files and keys/ca.{pub,key} into dir.
// Throws kExists when dir already holds a deployment and !force; kIo.
void WriteDeploymentDir(const Deployment& dep, const std::filesystem::path& dir,
                        bool force);
// Loads and cross-checks the stored CA key against the seed.
Deployment LoadDeploymentDir(const std::filesystem::path& dir);

// Key pair of the node at `address`, derived from the deployment seed.
KeyPair NodeKeys(const Deployment& dep, const std::string& address);

// Node behavior for one grid address; users are "user/<name>".
// Throws kConfig for an unknown address.
std::unique_ptr<Node> MakeNode(const Deployment& dep, const std::string& address);
std::vector<std::string> InfrastructureAddresses(const Deployment& dep);

// Registration of the discovery and service nodes with the CA.
std::vector<ScriptStep> BootstrapScript(const Deployment& dep);

// ------------------------------------------------------------ admin journal

// A persisted admin action, replayed in order on top of the bootstrap.
struct JournalEntry {
  enum class Op { kRegister, kSetState, kRevoke };
  Op op = Op::kRegister;
  std::string user;
  std::optional<StateSet> states;
  friend bool operator==(const JournalEntry&, const JournalEntry&) = default;
};

Json JournalEntryToJson(const JournalEntry& e);
JournalEntry JournalEntryFromJson(const Json& j);
std::vector<JournalEntry> LoadJournal(const std::filesystem::path& dir);
void AppendJournal(const std::filesystem::path& dir, const JournalEntry& e);

// ------------------------------------------------------------ session

// A simulated grid built from a deployment. Each operation runs one script
// to quiescence; the clock and node state carry over between operations.
class GridSession {
 public:
  explicit GridSession(Deployment dep, SimConfig cfg = {});

  const Deployment& deployment() const { return dep_; }
  Simulator& sim() { return sim_; }

  // Everything this session has put on the wire so far.
  const Trace& trace() const { return trace_; }
  const std::vector<CommandFailure>& failures() const { return failures_; }

  RunResult Bootstrap();
  // Adds "user/<name>" on first use.
  UserAgent& EnsureUser(const std::string& user);
  RunResult Register(const std::string& user, const std::optional<StateSet>& states);
  RunResult SetStates(const std::string& user, const StateSet& states);
  RunResult Revoke(const std::string& user);
  RunResult Apply(const JournalEntry& e);
  RunResult RequestAccess(const std::string& user);
  RunResult Invoke(const std::string& user, int service_id);
  // Queries the repository from the "cli" probe. The reply is either
  // CERT_RESPONSE or ERROR.
  Envelope FetchCert(const std::string& subject);

  RunResult Run(const std::vector<ScriptStep>& script);

  UserAgent* user(const std::string& name);

 private:
  Deployment dep_;
  Simulator sim_;
  Trace trace_;
  std::vector<CommandFailure> failures_;
};

// The same grid over loopback TCP, one runner per node. Each operation
// submits a command and waits until no envelope is in flight.
class SocketGrid {
 public:
  SocketGrid(Deployment dep, TickClock clock,
             std::chrono::milliseconds op_timeout = std::chrono::seconds(2));

  const Deployment& deployment() const { return dep_; }
  SocketCluster& cluster() { return cluster_; }

  // Users must be added before Start.
  void AddUser(const std::string& user);
  void Start();

  // Throw kTickLimit when the grid does not settle within op_timeout and
  // rethrow command failures.
  void Bootstrap();
  void Register(const std::string& user, const std::optional<StateSet>& states);
  void SetStates(const std::string& user, const StateSet& states);
  void Revoke(const std::string& user);
  void Apply(const JournalEntry& e);
  void RequestAccess(const std::string& user);
  void Invoke(const std::string& user, int service_id);

  // Snapshot of the user's agent, taken under its worker lock.
  Json UserSnapshot(const std::string& user);
  ServiceSet ActiveServices(const std::string& user);

 private:
  void Do(const std::string& target, Command cmd);

  Deployment dep_;
  SocketCluster cluster_;
  std::chrono::milliseconds op_timeout_;
};

// ------------------------------------------------------------ scenarios

struct ExpectedError {
  std::string sender;
  std::string recipient;
  ErrorCode code = ErrorCode::kAuth;
};

struct ExpectedServiceList {
  std::string user;
  ServiceSet services;
};

// A scripted run: phases are executed in order, each to quiescence, after
// the deployment bootstrap.
struct Scenario {
  std::string name;
  std::vector<std::string> users;
  SimConfig sim;
  std::vector<std::vector<ScriptStep>> phases;
  std::optional<std::filesystem::path> expected_trace;
  std::vector<std::string> expect_types;
  std::vector<ExpectedError> expect_errors;
  std::vector<ExpectedServiceList> expect_service_lists;
};

Scenario ScenarioFromJson(const Json& j, const std::filesystem::path& dir);
Scenario LoadScenario(const std::filesystem::path& path);

struct ScenarioOutcome {
  Trace trace;
  bool quiescent = true;
  // Empty when every expectation holds.
  std::vector<std::string> mismatches;
  bool passed() const { return mismatches.empty(); }
};

ScenarioOutcome RunScenario(const Scenario& scn, const Deployment& dep);

}  // namespace cmms

#endif  // CMMS_DEPLOYMENT_H_

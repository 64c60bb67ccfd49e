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

#include <fstream>
#include <sstream>

#include "cmms/deployment.h"
#include "cmms/error.h"

namespace cmms {

GridSession::GridSession(Deployment dep, SimConfig cfg) : dep_(std::move(dep)), sim_(cfg) {
  dep_.Validate();
  for (const auto& addr : InfrastructureAddresses(dep_)) sim_.AddNode(MakeNode(dep_, addr));
  sim_.AddNode(MakeNode(dep_, kCliAddress));
}

RunResult GridSession::Run(const std::vector<ScriptStep>& script) {
  RunResult r = sim_.Run(script);
  for (const auto& e : r.trace.entries) trace_.entries.push_back(e);
  trace_.terminal_states = r.trace.terminal_states;
  for (const auto& f : r.failures) failures_.push_back(f);
  return r;
}

RunResult GridSession::Bootstrap() { return Run(BootstrapScript(dep_)); }

UserAgent& GridSession::EnsureUser(const std::string& user) {
  if (UserAgent* agent = this->user(user)) return *agent;
  sim_.AddNode(MakeNode(dep_, UserAddress(user)));
  return *this->user(user);
}

UserAgent* GridSession::user(const std::string& name) {
  return sim_.FindAs<UserAgent>(UserAddress(name));
}

RunResult GridSession::Register(const std::string& user, const std::optional<StateSet>& states) {
  EnsureUser(user);
  std::vector<ScriptStep> script;
  if (states) script.push_back({0, kMonitorAddress, Command{SeedStatesCmd{user, *states}}});
  script.push_back({0, UserAddress(user), Command{RegisterCmd{}}});
  return Run(script);
}

RunResult GridSession::SetStates(const std::string& user, const StateSet& states) {
  return Run({{0, kMonitorAddress, Command{SetStatesCmd{user, states}}}});
}

RunResult GridSession::Revoke(const std::string& user) {
  return Run({{0, kMonitorAddress, Command{RevokeSubjectCmd{user}}}});
}

RunResult GridSession::Apply(const JournalEntry& e) {
  switch (e.op) {
    case JournalEntry::Op::kRegister:
      return Register(e.user, e.states);
    case JournalEntry::Op::kSetState:
      return SetStates(e.user, *e.states);
    case JournalEntry::Op::kRevoke:
      return Revoke(e.user);
  }
  throw CmmsError(ErrorCode::kConfig, "unknown journal op");
}

RunResult GridSession::RequestAccess(const std::string& user) {
  EnsureUser(user);
  return Run({{0, UserAddress(user), Command{RequestAccessCmd{kDiscoveryAddress}}}});
}

RunResult GridSession::Invoke(const std::string& user, int service_id) {
  EnsureUser(user);
  return Run({{0, UserAddress(user), Command{InvokeCmd{service_id}}}});
}

Envelope GridSession::FetchCert(const std::string& subject) {
  auto* probe = sim_.FindAs<ProbeNode>(kCliAddress);
  const std::size_t before = probe->inbox().size();
  Run({{0, kCliAddress, Command{SendCmd{kRepositoryAddress, GetCert{subject}}}}});
  if (probe->inbox().size() == before) {
    throw CmmsError(ErrorCode::kNotFound, "repository did not answer for '" + subject + "'");
  }
  return probe->inbox().back();
}

// ------------------------------------------------------------ sockets

SocketGrid::SocketGrid(Deployment dep, TickClock clock, std::chrono::milliseconds op_timeout)
    : dep_(std::move(dep)), cluster_(clock), op_timeout_(op_timeout) {
  dep_.Validate();
  for (const auto& addr : InfrastructureAddresses(dep_)) cluster_.Add(MakeNode(dep_, addr));
}

void SocketGrid::AddUser(const std::string& user) {
  cluster_.Add(MakeNode(dep_, UserAddress(user)));
}

void SocketGrid::Start() { cluster_.Start(); }

void SocketGrid::Do(const std::string& target, Command cmd) {
  cluster_.at(target).Submit(std::move(cmd)).get();
  if (!cluster_.WaitQuiescent(op_timeout_)) {
    throw CmmsError(ErrorCode::kTickLimit, "socket grid did not settle");
  }
}

// Registrations go one at a time so the CA assigns serials in script order,
// as the simulator does.
void SocketGrid::Bootstrap() {
  for (const auto& step : BootstrapScript(dep_)) {
    Do(step.target, std::get<Command>(step.action));
  }
}

void SocketGrid::Register(const std::string& user, const std::optional<StateSet>& states) {
  if (states) cluster_.at(kMonitorAddress).Submit(SeedStatesCmd{user, *states}).get();
  Do(UserAddress(user), RegisterCmd{});
}

void SocketGrid::SetStates(const std::string& user, const StateSet& states) {
  Do(kMonitorAddress, SetStatesCmd{user, states});
}

void SocketGrid::Revoke(const std::string& user) {
  Do(kMonitorAddress, RevokeSubjectCmd{user});
}

void SocketGrid::Apply(const JournalEntry& e) {
  switch (e.op) {
    case JournalEntry::Op::kRegister:
      return Register(e.user, e.states);
    case JournalEntry::Op::kSetState:
      return SetStates(e.user, *e.states);
    case JournalEntry::Op::kRevoke:
      return Revoke(e.user);
  }
}

void SocketGrid::RequestAccess(const std::string& user) {
  Do(UserAddress(user), RequestAccessCmd{kDiscoveryAddress});
}

void SocketGrid::Invoke(const std::string& user, int service_id) {
  Do(UserAddress(user), InvokeCmd{service_id});
}

Json SocketGrid::UserSnapshot(const std::string& user) {
  Json out;
  cluster_.at(UserAddress(user)).Inspect([&out](const Node& n) { out = n.Snapshot(); });
  return out;
}

ServiceSet SocketGrid::ActiveServices(const std::string& user) {
  ServiceSet out;
  cluster_.at(UserAddress(user)).Inspect([&out](const Node& n) {
    out = static_cast<const UserAgent&>(n).active_services();
  });
  return out;
}

// ------------------------------------------------------------ scenarios

namespace {

std::vector<ScriptStep> PhaseFromJson(const Json& j) {
  if (!j.is_array()) throw CmmsError(ErrorCode::kSchema, "scenario phase: expected array");
  std::vector<ScriptStep> steps;
  for (const Json& s : j) steps.push_back(ScriptStepFromJson(s));
  return steps;
}

bool IsSubsequence(const std::vector<std::string>& needle,
                   const std::vector<std::string>& haystack) {
  std::size_t i = 0;
  for (const auto& h : haystack) {
    if (i < needle.size() && h == needle[i]) ++i;
  }
  return i == needle.size();
}

std::string Describe(const std::optional<TraceEntry>& e) {
  if (!e) return "<end of trace>";
  std::string line = EncodeEnvelope(e->envelope);
  line.pop_back();
  return std::to_string(e->tick) + "\t" + line;
}

}  // namespace

Scenario ScenarioFromJson(const Json& j, const std::filesystem::path& dir) {
  JsonReader r(j, "scenario", {"name", "users", "sim", "phases", "expected_trace", "expect"});
  Scenario scn;
  scn.name = r.String("name");
  const Json& users = r.Raw("users");
  if (!users.is_array()) throw CmmsError(ErrorCode::kSchema, "scenario.users: expected array");
  for (const Json& u : users) {
    if (!u.is_string()) throw CmmsError(ErrorCode::kSchema, "scenario.users: expected strings");
    scn.users.push_back(u.get<std::string>());
  }
  scn.sim = SimConfigFromJson(r.Raw("sim"));
  const Json& phases = r.Raw("phases");
  if (!phases.is_array()) throw CmmsError(ErrorCode::kSchema, "scenario.phases: expected array");
  for (const Json& p : phases) scn.phases.push_back(PhaseFromJson(p));
  if (!r.IsNull("expected_trace")) scn.expected_trace = dir / r.String("expected_trace");

  JsonReader ex(r.Raw("expect"), "scenario.expect", {"types", "errors", "service_lists"});
  for (const Json& t : ex.Raw("types")) {
    if (!t.is_string()) throw CmmsError(ErrorCode::kSchema, "expect.types: expected strings");
    ParseMsgType(t.get<std::string>());
    scn.expect_types.push_back(t.get<std::string>());
  }
  for (const Json& e : ex.Raw("errors")) {
    JsonReader er(e, "expect.errors", {"sender", "recipient", "code"});
    const auto code = ParseErrorCode(er.String("code"));
    if (!code) throw CmmsError(ErrorCode::kSchema, "expect.errors: unknown code");
    scn.expect_errors.push_back({er.String("sender"), er.String("recipient"), *code});
  }
  for (const Json& l : ex.Raw("service_lists")) {
    JsonReader lr(l, "expect.service_lists", {"user", "services"});
    scn.expect_service_lists.push_back({lr.String("user"), lr.Set<ServiceTag>("services")});
  }
  return scn;
}

Scenario LoadScenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CmmsError(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ScenarioFromJson(ParseJson(buf.str()), path.parent_path());
}

ScenarioOutcome RunScenario(const Scenario& scn, const Deployment& dep) {
  GridSession session(dep, scn.sim);
  for (const auto& u : scn.users) session.EnsureUser(u);
  ScenarioOutcome outcome;
  outcome.quiescent = session.Bootstrap().quiescent;
  for (const auto& phase : scn.phases) {
    if (!session.Run(phase).quiescent) outcome.quiescent = false;
  }
  outcome.trace = session.trace();

  auto& miss = outcome.mismatches;
  if (!outcome.quiescent) miss.push_back("E_TICK_LIMIT: network not quiescent at tick limit");
  for (const auto& f : session.failures()) {
    miss.push_back("command at " + f.target + " failed: " +
                   std::string(ErrorCodeName(f.code)) + " " + f.detail);
  }
  if (scn.expected_trace) {
    const Trace expected = LoadTrace(*scn.expected_trace);
    const auto diffs = DiffTraces(expected, outcome.trace);
    if (!diffs.empty()) {
      miss.push_back("trace diverges at envelope " + std::to_string(diffs.front().index) +
                     "\n  expected: " + Describe(diffs.front().left) +
                     "\n  actual:   " + Describe(diffs.front().right));
    } else if (SerializeTrace(expected) != SerializeTrace(outcome.trace)) {
      miss.push_back("terminal node states differ from " + scn.expected_trace->string());
    }
  }
  if (!IsSubsequence(scn.expect_types, MessageTypes(outcome.trace))) {
    miss.push_back("expected message types not found in order");
  }
  for (const auto& want : scn.expect_errors) {
    bool found = false;
    for (const auto& e : outcome.trace.entries) {
      const auto* err = e.envelope.As<ErrorMsg>();
      found |= err && err->code == want.code && e.envelope.sender == want.sender &&
               e.envelope.recipient == want.recipient;
    }
    if (!found) {
      miss.push_back("no " + std::string(ErrorCodeName(want.code)) + " from " + want.sender +
                     " to " + want.recipient);
    }
  }
  for (const auto& want : scn.expect_service_lists) {
    std::optional<ServiceSet> last;
    for (const auto& e : outcome.trace.entries) {
      const auto* list = e.envelope.As<ServiceList>();
      if (list && e.envelope.recipient == UserAddress(want.user)) last = list->services;
    }
    if (!last || !(*last == want.services)) {
      miss.push_back("SERVICE_LIST for " + want.user + " is " +
                     (last ? last->ToString() : std::string("absent")) + ", expected " +
                     want.services.ToString());
    }
  }
  return outcome;
}

}  // namespace cmms

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

#include <signal.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmms/deployment.h"
#include "cmms/error.h"
#include "cmms/socket_transport.h"

namespace cmms {
namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitError = 2;

StateSet ParseStates(const std::string& text) {
  StateSet out;
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    int value = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw CmmsError(ErrorCode::kParse, "bad state list '" + text + "'");
    }
    out.insert(value);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

std::string NamedSet(const StateSet& states, const std::map<int, std::string>& names) {
  std::string out = states.ToString();
  std::string labels;
  for (int s : states.members()) {
    auto it = names.find(s);
    if (it == names.end()) continue;
    if (!labels.empty()) labels += ", ";
    labels += it->second;
  }
  if (!labels.empty()) out += " (" + labels + ")";
  return out;
}

// Rebuilds the grid: bootstrap, then every journaled admin action.
std::unique_ptr<GridSession> OpenSession(const fs::path& dir) {
  auto session = std::make_unique<GridSession>(LoadDeploymentDir(dir));
  session->Bootstrap();
  for (const JournalEntry& e : LoadJournal(dir)) session->Apply(e);
  if (!session->failures().empty()) {
    const auto& f = session->failures().front();
    throw CmmsError(ErrorCode::kConfig, "journal replay failed: " + f.detail);
  }
  return session;
}

void ThrowNewFailures(const GridSession& s, std::size_t before) {
  if (s.failures().size() > before) {
    const auto& f = s.failures()[before];
    throw CmmsError(f.code, f.detail);
  }
}

void ThrowUserError(UserAgent& user) {
  if (const auto& err = user.last_error()) throw CmmsError(err->code, err->detail);
}

// Renders the last SERVICE_LIST addressed to the user, numbered and named.
void PrintServiceList(const std::vector<Envelope>& sent, const std::string& user,
                      const Deployment& dep) {
  const ServiceList* list = nullptr;
  for (const auto& env : sent) {
    if (env.recipient == UserAddress(user) && env.As<ServiceList>()) {
      list = env.As<ServiceList>();
    }
  }
  if (!list) throw CmmsError(ErrorCode::kNoSession, "no SERVICE_LIST reached " + user);
  if (list->services.empty()) {
    std::cout << "(no services)\n";
    return;
  }
  for (int id : list->services.members()) {
    auto it = dep.service_names.find(id);
    std::cout << id << " " << (it == dep.service_names.end() ? "?" : it->second) << "\n";
  }
}

void PrintResult(const ServiceResult& r) {
  std::cout << "result " << r.service_id << ": " << ToString(r.body) << "\n";
}

std::vector<Envelope> Envelopes(const Trace& trace) {
  std::vector<Envelope> out;
  for (const auto& e : trace.entries) out.push_back(e.envelope);
  return out;
}

// ------------------------------------------------------------ commands

int CmdInit(const std::string& profile, const fs::path& out, std::uint64_t seed,
            const std::string& signer, bool force) {
  if (profile != "spig") throw CmmsError(ErrorCode::kConfig, "unknown profile '" + profile + "'");
  Deployment dep = SpigDeployment(seed);
  dep.signer = signer;
  WriteDeploymentDir(dep, out, force);
  std::cout << "initialized " << profile << " deployment in " << out.string() << "\n";
  return kExitOk;
}

int CmdPolicyShow(const fs::path& dir) {
  const Deployment dep = LoadDeploymentDir(dir);
  for (const auto& s : dep.service_nodes) {
    std::cout << "# " << s.address << " (" << s.policy_file << ")\n";
    for (const auto& [state, entry] : s.policy_table.entries()) {
      const ServiceSet services = DecodeServices(entry, dep.grid);
      std::cout << (services.empty() ? std::to_string(state) + ":"
                                     : RenderPolicy(StateId{state}, services));
      if (entry.raw != EncodeServices(services, dep.grid).raw) {
        std::cout << "  (raw " << entry.raw << ")";
      }
      std::cout << "\n";
    }
  }
  return kExitOk;
}

int CmdRegister(const fs::path& dir, const std::string& user,
                const std::optional<std::string>& states_text) {
  std::optional<StateSet> states;
  if (states_text) states = ParseStates(*states_text);
  auto s = OpenSession(dir);
  if (s->user(user) && s->user(user)->own_cert()) {
    throw CmmsError(ErrorCode::kDuplicateSubject, "'" + user + "' is already registered");
  }
  const std::size_t before = s->failures().size();
  s->Register(user, states);
  ThrowNewFailures(*s, before);
  UserAgent& agent = *s->user(user);
  ThrowUserError(agent);
  if (!agent.own_cert()) throw CmmsError(ErrorCode::kConfig, "registration did not complete");
  AppendJournal(dir, {JournalEntry::Op::kRegister, user, states});
  std::cout << "registered " << user << ": serial " << agent.own_cert()->serial << ", states "
            << NamedSet(agent.own_cert()->state_list, s->deployment().state_names) << "\n";
  return kExitOk;
}

int CmdSetState(const fs::path& dir, const std::string& user, const std::string& states_text) {
  const StateSet states = ParseStates(states_text);
  auto s = OpenSession(dir);
  UserAgent* agent = s->user(user);
  const std::uint64_t old_serial = agent && agent->own_cert() ? agent->own_cert()->serial : 0;
  const std::size_t before = s->failures().size();
  s->SetStates(user, states);
  ThrowNewFailures(*s, before);
  agent = s->user(user);
  if (!agent || !agent->own_cert() || agent->own_cert()->serial == old_serial) {
    throw CmmsError(ErrorCode::kUnknownSubject, "no reissued certificate for '" + user + "'");
  }
  AppendJournal(dir, {JournalEntry::Op::kSetState, user, states});
  std::cout << user << ": serial " << old_serial << " -> " << agent->own_cert()->serial
            << ", states " << NamedSet(states, s->deployment().state_names) << "\n";
  return kExitOk;
}

int CmdRevoke(const fs::path& dir, const std::string& user) {
  auto s = OpenSession(dir);
  const std::size_t before = s->failures().size();
  s->Revoke(user);
  ThrowNewFailures(*s, before);
  AppendJournal(dir, {JournalEntry::Op::kRevoke, user, std::nullopt});
  std::cout << "revoked " << user << "\n";
  return kExitOk;
}

int CmdShowCert(const fs::path& dir, const std::string& user) {
  auto s = OpenSession(dir);
  const Envelope reply = s->FetchCert(user);
  if (const auto* err = reply.As<ErrorMsg>()) throw CmmsError(err->code, err->detail);
  const auto& resp = *reply.As<CertResponse>();
  const Deployment& dep = s->deployment();
  const CertStatus status =
      VerifyCertificate(resp.cert, *MakeSigner(dep.signer), NodeKeys(dep, kCaAddress).public_key,
                        s->sim().now(), resp.crl);
  std::cout << CanonicalDump(CertificateToJson(resp.cert)) << "\n";
  std::cout << "status: " << CertStatusName(status) << "\n";
  std::cout << "serial: " << resp.cert.serial << "\n";
  std::cout << "states: " << NamedSet(resp.cert.state_list, dep.state_names) << "\n";
  std::cout << "crl: " << CanonicalDump(CrlToJson(resp.crl)["revoked_serials"]) << "\n";
  return kExitOk;
}

int CmdRequestSimulated(const fs::path& dir, const std::string& user, std::optional<int> invoke,
                        const std::optional<fs::path>& trace_path) {
  auto s = OpenSession(dir);
  UserAgent* agent = s->user(user);
  if (!agent) throw CmmsError(ErrorCode::kUnknownSubject, "'" + user + "' is not registered");
  auto finish = [&] {
    if (trace_path) DumpTrace(s->trace(), *trace_path);
  };
  s->RequestAccess(user);
  if (agent->last_error()) {
    finish();
    ThrowUserError(*agent);
  }
  PrintServiceList(Envelopes(s->trace()), user, s->deployment());
  if (invoke) {
    s->Invoke(user, *invoke);
    finish();
    ThrowUserError(*agent);
    if (!agent->last_result()) throw CmmsError(ErrorCode::kNoSession, "no SERVICE_RESULT");
    PrintResult(*agent->last_result());
  }
  finish();
  return kExitOk;
}

int CmdRequestSocket(const fs::path& dir, const std::string& user, std::optional<int> invoke) {
  const Deployment dep = LoadDeploymentDir(dir);
  const auto journal = LoadJournal(dir);
  SocketGrid grid(dep, TickClock());
  std::set<std::string> users{user};
  for (const auto& e : journal) users.insert(e.user);
  for (const auto& u : users) grid.AddUser(u);
  grid.Start();
  grid.Bootstrap();
  for (const auto& e : journal) grid.Apply(e);
  auto user_error = [&] {
    const Json snap = grid.UserSnapshot(user);
    if (snap["last_error"].is_null()) return;
    const auto code = ParseErrorCode(snap["last_error"]["code"].get<std::string>());
    throw CmmsError(code.value_or(ErrorCode::kConfig),
                    snap["last_error"]["detail"].get<std::string>());
  };
  grid.RequestAccess(user);
  user_error();
  PrintServiceList(grid.cluster().AllSent(), user, dep);
  if (invoke) {
    grid.Invoke(user, *invoke);
    user_error();
    for (const auto& env : grid.cluster().AllSent()) {
      if (env.recipient == UserAddress(user) && env.As<ServiceResult>()) {
        PrintResult(*env.As<ServiceResult>());
      }
    }
  }
  return kExitOk;
}

int CmdRunScenarios(std::vector<fs::path> files, bool all, const fs::path& scenario_dir,
                    const std::optional<fs::path>& deployment_dir,
                    const std::optional<fs::path>& write_trace, bool record) {
  if (all) {
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(scenario_dir, ec)) {
      if (entry.path().extension() == ".scn") files.push_back(entry.path());
    }
    if (ec) throw CmmsError(ErrorCode::kIo, "cannot list " + scenario_dir.string());
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) throw CmmsError(ErrorCode::kConfig, "no scenario files given");
  if (write_trace && files.size() != 1) {
    throw CmmsError(ErrorCode::kConfig, "--write-trace needs exactly one scenario");
  }
  const Deployment dep = deployment_dir ? LoadDeploymentDir(*deployment_dir) : SpigDeployment();
  int exit_code = kExitOk;
  for (const auto& file : files) {
    Scenario scn = LoadScenario(file);
    const auto golden = scn.expected_trace;
    if (record) scn.expected_trace.reset();
    const ScenarioOutcome outcome = RunScenario(scn, dep);
    if (write_trace) DumpTrace(outcome.trace, *write_trace);
    if (record && golden && outcome.passed()) {
      DumpTrace(outcome.trace, *golden);
      std::cout << "recorded " << golden->string() << "\n";
    }
    std::cout << (outcome.passed() ? "PASS " : "FAIL ") << scn.name << " ("
              << outcome.trace.entries.size() << " envelopes)\n";
    for (const auto& m : outcome.mismatches) std::cout << "  " << m << "\n";
    if (!outcome.passed()) exit_code = kExitMismatch;
  }
  return exit_code;
}

int CmdTraceDiff(const fs::path& a, const fs::path& b) {
  const Trace left = LoadTrace(a);
  const Trace right = LoadTrace(b);
  const auto diffs = DiffTraces(left, right);
  if (diffs.empty() && left.terminal_states == right.terminal_states) {
    std::cout << "identical\n";
    return kExitOk;
  }
  if (diffs.empty()) {
    for (const auto& [addr, state] : left.terminal_states) {
      auto it = right.terminal_states.find(addr);
      if (it == right.terminal_states.end() || it->second != state) {
        std::cout << "terminal state of " << addr << " differs\n";
        return kExitMismatch;
      }
    }
    std::cout << "terminal state sets differ\n";
    return kExitMismatch;
  }
  auto show = [](const std::optional<TraceEntry>& e) {
    if (!e) return std::string("<end of trace>");
    std::string line = EncodeEnvelope(e->envelope);
    line.pop_back();
    return std::to_string(e->tick) + "\t" + line;
  };
  std::cout << "first divergence at envelope " << diffs.front().index << " ("
            << diffs.size() << " differing)\n";
  std::cout << "< " << show(diffs.front().left) << "\n";
  std::cout << "> " << show(diffs.front().right) << "\n";
  return kExitMismatch;
}

int CmdServe(const fs::path& dir, const std::string& node, int tick_ms) {
  const Deployment dep = LoadDeploymentDir(dir);
  std::map<std::string, Endpoint> book;
  for (const auto& [addr, ep] : dep.endpoints) book[addr] = ParseEndpoint(ep);
  auto self = book.find(node);
  if (self == book.end()) {
    throw CmmsError(ErrorCode::kConfig, "deployment has no endpoint for '" + node + "'");
  }
  sigset_t stop;
  sigemptyset(&stop);
  sigaddset(&stop, SIGINT);
  sigaddset(&stop, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop, nullptr);

  SocketNodeRunner runner(MakeNode(dep, node),
                          TickClock::SinceUnixEpoch(std::chrono::milliseconds(tick_ms)),
                          self->second);
  runner.Start(book);
  std::cout << "serving " << node << " on " << runner.endpoint().ToString() << std::endl;
  int sig = 0;
  sigwait(&stop, &sig);
  runner.Stop();
  return kExitOk;
}

int CmdSend(const std::string& to, const std::string& envelope_text) {
  std::string text = envelope_text;
  if (!text.empty() && text.front() == '@') {
    std::ifstream in(text.substr(1), std::ios::binary);
    if (!in) throw CmmsError(ErrorCode::kIo, "cannot read " + text.substr(1));
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  SocketSend(ParseEndpoint(to), EnvelopeFromJson(ParseJson(text)));
  return kExitOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"Certificate-carried state authorization grid"};
  app.require_subcommand(1);
  std::string deployment = ".";

  auto add_deployment = [&deployment](CLI::App* sub) {
    sub->add_option("-d,--deployment", deployment, "Deployment directory")
        ->capture_default_str();
  };

  std::string profile = "spig";
  std::string out;
  std::uint64_t seed = kDefaultDeploymentSeed;
  std::string signer = "ed25519";
  bool force = false;
  auto* init = app.add_subcommand("init", "Write a deployment, policy files and CA keys");
  init->add_option("--profile", profile)->capture_default_str();
  init->add_option("--out", out)->required();
  init->add_option("--seed", seed)->capture_default_str();
  init->add_option("--signer", signer)->check(CLI::IsMember({"ed25519", "test-sha256"}));
  init->add_flag("--force", force, "Overwrite an existing deployment");

  auto* policy = app.add_subcommand("policy", "Policy tables");
  policy->require_subcommand(1);
  auto* policy_show = policy->add_subcommand("show", "Print every service node's table");
  add_deployment(policy_show);

  std::string user;
  std::optional<std::string> states;
  auto* reg = app.add_subcommand("register", "Register a user through CA and monitor");
  add_deployment(reg);
  reg->add_option("--user", user)->required();
  reg->add_option("--states", states, "Initial states, e.g. 1,4");

  std::string new_states;
  auto* set_state = app.add_subcommand("set-state", "Change a user's states via the monitor");
  add_deployment(set_state);
  set_state->add_option("--user", user)->required();
  set_state->add_option("--states", new_states)->required();

  auto* revoke = app.add_subcommand("revoke", "Revoke a user's certificate via the monitor");
  add_deployment(revoke);
  revoke->add_option("--user", user)->required();

  auto* show_cert = app.add_subcommand("show-cert", "Fetch and verify a certificate");
  add_deployment(show_cert);
  show_cert->add_option("--user", user)->required();

  std::optional<int> invoke;
  std::optional<std::string> trace_path;
  std::string transport = "sim";
  auto* request = app.add_subcommand("request", "Run the get-access flow for a user");
  add_deployment(request);
  request->add_option("--user", user)->required();
  request->add_option("--invoke", invoke, "Service to invoke once access is granted");
  request->add_option("--trace", trace_path, "Write the trace here");
  request->add_option("--transport", transport)
      ->check(CLI::IsMember({"sim", "socket"}))
      ->capture_default_str();

  std::vector<std::string> scenario_files;
  bool all = false;
  std::string scenario_dir = "scenarios";
  std::optional<std::string> scenario_deployment;
  std::optional<std::string> write_trace;
  auto* run = app.add_subcommand("run-scenario", "Run scenario files under the simulator");
  run->add_option("files", scenario_files);
  run->add_flag("--all", all, "Run every .scn file in --dir");
  run->add_option("--dir", scenario_dir)->capture_default_str();
  run->add_option("-d,--deployment", scenario_deployment,
                  "Deployment directory (default: built-in SPIG profile)");
  run->add_option("--write-trace", write_trace, "Dump the resulting trace");
  bool record = false;
  run->add_flag("--record", record,
                "Rewrite each scenario's expected trace when its other checks pass");

  std::string trace_a;
  std::string trace_b;
  auto* diff = app.add_subcommand("trace-diff", "Compare two trace files");
  diff->add_option("a", trace_a)->required();
  diff->add_option("b", trace_b)->required();

  std::string node;
  int tick_ms = 10;
  auto* serve = app.add_subcommand("serve", "Host one node over TCP");
  add_deployment(serve);
  serve->add_option("--node", node)->required();
  serve->add_option("--tick-ms", tick_ms)->check(CLI::PositiveNumber)->capture_default_str();

  std::string to;
  std::string envelope;
  auto* send = app.add_subcommand("send", "Send one envelope to a socket node");
  send->add_option("--to", to, "host:port")->required();
  send->add_option("--envelope", envelope, "Envelope JSON, or @file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*init) return CmdInit(profile, out, seed, signer, force);
    if (*policy_show) return CmdPolicyShow(deployment);
    if (*reg) return CmdRegister(deployment, user, states);
    if (*set_state) return CmdSetState(deployment, user, new_states);
    if (*revoke) return CmdRevoke(deployment, user);
    if (*show_cert) return CmdShowCert(deployment, user);
    if (*request) {
      if (transport == "socket") {
        if (trace_path) throw CmmsError(ErrorCode::kConfig, "--trace needs --transport sim");
        return CmdRequestSocket(deployment, user, invoke);
      }
      std::optional<fs::path> tp;
      if (trace_path) tp = *trace_path;
      return CmdRequestSimulated(deployment, user, invoke, tp);
    }
    if (*run) {
      std::vector<fs::path> files(scenario_files.begin(), scenario_files.end());
      std::optional<fs::path> dep_dir;
      if (scenario_deployment) dep_dir = *scenario_deployment;
      std::optional<fs::path> wt;
      if (write_trace) wt = *write_trace;
      return CmdRunScenarios(files, all, scenario_dir, dep_dir, wt, record);
    }
    if (*diff) return CmdTraceDiff(trace_a, trace_b);
    if (*serve) return CmdServe(deployment, node, tick_ms);
    if (*send) return CmdSend(to, envelope);
  } catch (const CmmsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace
}  // namespace cmms

int main(int argc, char** argv) { return cmms::Main(argc, argv); }

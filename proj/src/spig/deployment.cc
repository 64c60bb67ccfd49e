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
namespace {

Json NameMapToJson(const std::map<int, std::string>& names) {
  Json j = Json::object();
  for (const auto& [id, name] : names) j[std::to_string(id)] = name;
  return j;
}

std::map<int, std::string> NameMapFromJson(const Json& j, std::string_view context,
                                           int universe) {
  if (!j.is_object()) {
    throw CmmsError(ErrorCode::kSchema, std::string(context) + ": expected object");
  }
  std::map<int, std::string> out;
  for (const auto& [key, value] : j.items()) {
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw CmmsError(ErrorCode::kSchema,
                      std::string(context) + ": key '" + key + "' is not a number");
    }
    if (id < 1 || id > universe) {
      throw CmmsError(ErrorCode::kConfig,
                      std::string(context) + ": " + key + " is outside the grid");
    }
    if (!value.is_string()) {
      throw CmmsError(ErrorCode::kSchema, std::string(context) + "." + key + ": expected string");
    }
    out[id] = value.get<std::string>();
  }
  return out;
}

std::map<int, std::string> RoutesFromJson(const Json& j, int universe) {
  std::map<int, std::string> out;
  for (auto& [id, target] : NameMapFromJson(j, "forward_routes", universe)) {
    out[id] = std::move(target);
  }
  return out;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CmmsError(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CmmsError(ErrorCode::kIo, "cannot write " + path.string());
  out << data;
  if (!out) throw CmmsError(ErrorCode::kIo, "write failed for " + path.string());
}

NodeIdentity IdentityFor(const Deployment& dep, const std::string& address) {
  NodeIdentity id;
  id.signer = MakeSigner(dep.signer);
  id.keys = NodeKeys(dep, address);
  id.ca_public_key = NodeKeys(dep, kCaAddress).public_key;
  id.ca_address = kCaAddress;
  id.repository_address = kRepositoryAddress;
  return id;
}

}  // namespace

// ------------------------------------------------------------ SPIG profile

const std::map<int, std::string>& SpigStateNames() {
  static const auto* names = new std::map<int, std::string>{
      {1, "On Duty"},   {2, "Suspended"},       {3, "Transferred"},     {4, "Convicted"},
      {5, "On Leave"},  {6, "View Restricted"}, {7, "Edit Restricted"}, {8, "User"},
  };
  return *names;
}

const std::map<int, std::string>& SpigServiceNames() {
  static const auto* names = new std::map<int, std::string>{
      {1, "Criminal Records Database"},
      {2, "FIR Records"},
      {3, "Search for INV status"},
      {4, "ADD FIR/Criminal Records"},
  };
  return *names;
}

PolicyTable SpigDefaultPolicy() {
  PolicyTable table(GridConfig::Spig());
  table.Set(StateId{1}, PolicyEntry{15});
  table.Set(StateId{5}, PolicyEntry{94});
  table.Set(StateId{6}, PolicyEntry{98});
  table.Set(StateId{7}, PolicyEntry{12});
  table.Set(StateId{8}, PolicyEntry{4});
  return table;
}

// ------------------------------------------------------------ deployment

std::string UserAddress(const std::string& user) { return "user/" + user; }

void Deployment::Validate() const {
  grid.Validate();
  MakeSigner(signer);
  vo_filter.Validate();
  if (!vo_filter.considered_states.WithinUniverse(grid.states)) {
    throw CmmsError(ErrorCode::kConfig, "considered states exceed the grid");
  }
  if (!default_initial_states.WithinUniverse(grid.states)) {
    throw CmmsError(ErrorCode::kConfig, "default initial states exceed the grid");
  }
  if (service_nodes.empty()) throw CmmsError(ErrorCode::kConfig, "no service nodes");
  std::set<std::string> seen{kCaAddress, kRepositoryAddress, kMonitorAddress,
                             kDiscoveryAddress, kCliAddress};
  for (const auto& s : service_nodes) {
    if (s.address.empty() || s.address.starts_with("user/")) {
      throw CmmsError(ErrorCode::kConfig, "bad service node address '" + s.address + "'");
    }
    if (!seen.insert(s.address).second) {
      throw CmmsError(ErrorCode::kConfig, "duplicate address '" + s.address + "'");
    }
    if (!(s.policy_table.config() == grid)) {
      throw CmmsError(ErrorCode::kConfig, s.address + ": policy table grid differs");
    }
  }
  for (const auto& s : service_nodes) {
    for (const auto& [service, target] : s.forward_routes) {
      if (!FindService(target) || target == s.address) {
        throw CmmsError(ErrorCode::kConfig,
                        s.address + ": forward route to unknown node '" + target + "'");
      }
      if (service < 1 || service > grid.services) {
        throw CmmsError(ErrorCode::kConfig, s.address + ": forward route for bad service");
      }
    }
  }
  for (const auto& [addr, ep] : endpoints) {
    if (addr.empty()) throw CmmsError(ErrorCode::kConfig, "empty endpoint address");
  }
  if (ticket_ttl <= 0 || replay_window < 0 || hold_window < 0 || cert_validity <= 0) {
    throw CmmsError(ErrorCode::kConfig, "timing parameters must be positive");
  }
}

const ServiceNodeSpec* Deployment::FindService(const std::string& address) const {
  for (const auto& s : service_nodes) {
    if (s.address == address) return &s;
  }
  return nullptr;
}

Deployment SpigDeployment(std::uint64_t seed) {
  Deployment dep;
  dep.seed = seed;
  dep.state_names = SpigStateNames();
  dep.service_names = SpigServiceNames();
  dep.vo_filter.considered_states = StateSet::Range(1, 8);
  dep.default_initial_states = StateSet{8};
  dep.service_nodes.push_back({"serv1", "policies/serv1.policy", SpigDefaultPolicy(), {}});
  int port = 7401;
  for (const char* addr : {kCaAddress, kRepositoryAddress, kMonitorAddress, kDiscoveryAddress,
                           "serv1"}) {
    dep.endpoints[addr] = "127.0.0.1:" + std::to_string(port++);
  }
  return dep;
}

Json DeploymentToJson(const Deployment& dep) {
  Json services = Json::array();
  for (const auto& s : dep.service_nodes) {
    services.push_back({{"address", s.address},
                        {"policy_file", s.policy_file},
                        {"forward_routes", NameMapToJson(s.forward_routes)}});
  }
  Json imposed = Json::object();
  for (const auto& [user, states] : dep.vo_filter.imposed_list) imposed[user] = SetToJson(states);
  return Json{
      {"profile", dep.profile},
      {"seed", dep.seed},
      {"signer", dep.signer},
      {"grid",
       {{"states", dep.grid.states},
        {"services", dep.grid.services},
        {"entry_width", dep.grid.entry_width}}},
      {"state_names", NameMapToJson(dep.state_names)},
      {"service_names", NameMapToJson(dep.service_names)},
      {"vo_filter",
       {{"considered_states", SetToJson(dep.vo_filter.considered_states)},
        {"imposed_list", imposed}}},
      {"default_initial_states", SetToJson(dep.default_initial_states)},
      {"service_nodes", services},
      {"ticket_ttl", dep.ticket_ttl},
      {"replay_window", dep.replay_window},
      {"hold_window", dep.hold_window},
      {"cert_validity", dep.cert_validity},
      {"endpoints", dep.endpoints},
  };
}

Deployment DeploymentFromJson(const Json& j, const std::filesystem::path& dir) {
  JsonReader r(j, "deployment",
               {"profile", "seed", "signer", "grid", "state_names", "service_names",
                "vo_filter", "default_initial_states", "service_nodes", "ticket_ttl",
                "replay_window", "hold_window", "cert_validity", "endpoints"});
  Deployment dep;
  dep.profile = r.String("profile");
  dep.seed = r.Uint("seed");
  dep.signer = r.String("signer");
  JsonReader g(r.Raw("grid"), "deployment.grid", {"states", "services", "entry_width"});
  dep.grid = GridConfig{static_cast<int>(g.Int("states")), static_cast<int>(g.Int("services")),
                        static_cast<int>(g.Int("entry_width"))};
  dep.grid.Validate();
  dep.state_names = NameMapFromJson(r.Raw("state_names"), "state_names", dep.grid.states);
  dep.service_names =
      NameMapFromJson(r.Raw("service_names"), "service_names", dep.grid.services);

  JsonReader vo(r.Raw("vo_filter"), "deployment.vo_filter",
                {"considered_states", "imposed_list"});
  dep.vo_filter.considered_states = vo.Set<StateTag>("considered_states");
  const Json& imposed = vo.Raw("imposed_list");
  if (!imposed.is_object()) throw CmmsError(ErrorCode::kSchema, "imposed_list: expected object");
  for (const auto& [user, states] : imposed.items()) {
    dep.vo_filter.imposed_list[user] = SetFromJson<StateTag>(states, "imposed_list");
  }
  dep.default_initial_states = r.Set<StateTag>("default_initial_states");

  const Json& services = r.Raw("service_nodes");
  if (!services.is_array()) throw CmmsError(ErrorCode::kSchema, "service_nodes: expected array");
  for (const Json& s : services) {
    JsonReader sr(s, "service_node", {"address", "policy_file", "forward_routes"});
    ServiceNodeSpec spec;
    spec.address = sr.String("address");
    spec.policy_file = sr.String("policy_file");
    spec.policy_table = LoadPolicyFile(dir / spec.policy_file, dep.grid);
    spec.forward_routes = RoutesFromJson(sr.Raw("forward_routes"), dep.grid.services);
    dep.service_nodes.push_back(std::move(spec));
  }
  dep.ticket_ttl = r.Int("ticket_ttl");
  dep.replay_window = r.Int("replay_window");
  dep.hold_window = r.Int("hold_window");
  dep.cert_validity = r.Int("cert_validity");
  const Json& endpoints = r.Raw("endpoints");
  if (!endpoints.is_object()) throw CmmsError(ErrorCode::kSchema, "endpoints: expected object");
  for (const auto& [addr, ep] : endpoints.items()) {
    if (!ep.is_string()) throw CmmsError(ErrorCode::kSchema, "endpoints: expected strings");
    dep.endpoints[addr] = ep.get<std::string>();
  }
  dep.Validate();
  return dep;
}

void WriteDeploymentDir(const Deployment& dep, const std::filesystem::path& dir, bool force) {
  namespace fs = std::filesystem;
  dep.Validate();
  std::error_code ec;
  if (fs::exists(dir / kDeploymentFile, ec) && !force) {
    throw CmmsError(ErrorCode::kExists, (dir / kDeploymentFile).string() + " already exists");
  }
  fs::create_directories(dir / "keys", ec);
  if (ec) throw CmmsError(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& s : dep.service_nodes) {
    if (s.policy_file.empty()) {
      throw CmmsError(ErrorCode::kConfig, s.address + ": no policy file path");
    }
    fs::create_directories((dir / s.policy_file).parent_path(), ec);
    SavePolicyFile(s.policy_table, dir / s.policy_file);
  }
  const KeyPair ca = NodeKeys(dep, kCaAddress);
  WriteFile(dir / "keys" / "ca.pub", HexEncode(ca.public_key) + "\n");
  WriteFile(dir / "keys" / "ca.key", HexEncode(ca.private_key) + "\n");
  fs::permissions(dir / "keys" / "ca.key", fs::perms::owner_read | fs::perms::owner_write,
                  fs::perm_options::replace, ec);
  WriteFile(dir / kJournalFile, "");
  WriteFile(dir / kDeploymentFile, DeploymentToJson(dep).dump(2) + "\n");
}

Deployment LoadDeploymentDir(const std::filesystem::path& dir) {
  Deployment dep = DeploymentFromJson(ParseJson(ReadFile(dir / kDeploymentFile)), dir);
  std::string stored = ReadFile(dir / "keys" / "ca.pub");
  while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
  if (stored != HexEncode(NodeKeys(dep, kCaAddress).public_key)) {
    throw CmmsError(ErrorCode::kConfig, "keys/ca.pub does not match the deployment seed");
  }
  return dep;
}

KeyPair NodeKeys(const Deployment& dep, const std::string& address) {
  return MakeSigner(dep.signer)->Generate(DeriveKeySeed(dep.seed, address));
}

std::vector<std::string> InfrastructureAddresses(const Deployment& dep) {
  std::vector<std::string> out{kCaAddress, kRepositoryAddress, kMonitorAddress,
                               kDiscoveryAddress};
  for (const auto& s : dep.service_nodes) out.push_back(s.address);
  return out;
}

std::unique_ptr<Node> MakeNode(const Deployment& dep, const std::string& address) {
  auto signer = MakeSigner(dep.signer);
  if (address == kCaAddress) {
    CaConfig cfg;
    cfg.signer = signer;
    cfg.keys = NodeKeys(dep, kCaAddress);
    cfg.state_universe = dep.grid.states;
    cfg.monitor_address = kMonitorAddress;
    cfg.repository_address = kRepositoryAddress;
    cfg.validity_ticks = dep.cert_validity;
    return std::make_unique<CaNode>(address, std::move(cfg));
  }
  if (address == kRepositoryAddress) {
    return std::make_unique<RepositoryNode>(address, signer,
                                            NodeKeys(dep, kCaAddress).public_key);
  }
  if (address == kMonitorAddress) {
    MonitorConfig cfg;
    cfg.ca_address = kCaAddress;
    cfg.state_universe = dep.grid.states;
    cfg.default_initial_states = dep.default_initial_states;
    return std::make_unique<MonitorNode>(address, std::move(cfg));
  }
  if (address == kDiscoveryAddress) {
    DiscoveryConfig cfg;
    cfg.id = IdentityFor(dep, address);
    cfg.vo_filter = dep.vo_filter;
    for (const auto& s : dep.service_nodes) cfg.service_nodes.push_back(s.address);
    cfg.ticket_ttl = dep.ticket_ttl;
    cfg.replay_window = dep.replay_window;
    cfg.nonce_seed = dep.seed;
    return std::make_unique<DiscoveryNode>(address, std::move(cfg));
  }
  if (const ServiceNodeSpec* spec = dep.FindService(address)) {
    ServiceConfig cfg;
    cfg.id = IdentityFor(dep, address);
    cfg.discovery_address = kDiscoveryAddress;
    cfg.discovery_public_key = NodeKeys(dep, kDiscoveryAddress).public_key;
    cfg.policy_table = spec->policy_table;
    cfg.service_names = dep.service_names;
    cfg.forward_routes = spec->forward_routes;
    cfg.hold_window = dep.hold_window;
    return std::make_unique<ServiceNode>(address, std::move(cfg));
  }
  if (address.starts_with("user/") && address.size() > 5) {
    return std::make_unique<UserAgent>(address, address.substr(5), IdentityFor(dep, address));
  }
  if (address == kCliAddress) return std::make_unique<ProbeNode>(address);
  throw CmmsError(ErrorCode::kConfig, "no node '" + address + "' in the deployment");
}

std::vector<ScriptStep> BootstrapScript(const Deployment& dep) {
  std::vector<ScriptStep> script{{0, kDiscoveryAddress, Command{RegisterCmd{}}}};
  for (const auto& s : dep.service_nodes) script.push_back({0, s.address, Command{RegisterCmd{}}});
  return script;
}

// ------------------------------------------------------------ journal

Json JournalEntryToJson(const JournalEntry& e) {
  static constexpr const char* kOps[] = {"register", "set_state", "revoke"};
  Json j{{"op", kOps[static_cast<int>(e.op)]}, {"user", e.user}};
  j["states"] = e.states ? SetToJson(*e.states) : Json(nullptr);
  return j;
}

JournalEntry JournalEntryFromJson(const Json& j) {
  JsonReader r(j, "journal", {"op", "user", "states"});
  JournalEntry e;
  const std::string op = r.String("op");
  if (op == "register") {
    e.op = JournalEntry::Op::kRegister;
  } else if (op == "set_state") {
    e.op = JournalEntry::Op::kSetState;
  } else if (op == "revoke") {
    e.op = JournalEntry::Op::kRevoke;
  } else {
    throw CmmsError(ErrorCode::kSchema, "journal: unknown op '" + op + "'");
  }
  e.user = r.String("user");
  if (!r.IsNull("states")) e.states = r.Set<StateTag>("states");
  if (e.op == JournalEntry::Op::kSetState && !e.states) {
    throw CmmsError(ErrorCode::kSchema, "journal: set_state without states");
  }
  return e;
}

std::vector<JournalEntry> LoadJournal(const std::filesystem::path& dir) {
  const std::string text = ReadFile(dir / kJournalFile);
  std::vector<JournalEntry> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(JournalEntryFromJson(ParseJson(line)));
  }
  return out;
}

void AppendJournal(const std::filesystem::path& dir, const JournalEntry& e) {
  std::ofstream out(dir / kJournalFile, std::ios::binary | std::ios::app);
  if (!out) throw CmmsError(ErrorCode::kIo, "cannot append to " + (dir / kJournalFile).string());
  out << CanonicalDump(JournalEntryToJson(e)) << '\n';
}

}  // namespace cmms

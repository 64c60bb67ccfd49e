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

#include "cmms/policy.h"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace cmms {
namespace {

std::uint64_t LowBits(int width) {
  return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
}

std::string_view Trim(std::string_view s) {
  const char* ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

// Unsigned decimal token. Throws kParse on anything but digits and kRange
// when the value does not fit.
std::uint64_t ParseNumber(std::string_view token, std::string_view what) {
  token = Trim(token);
  if (token.empty()) {
    throw CmmsError(ErrorCode::kParse, "missing " + std::string(what));
  }
  for (char c : token) {
    if (c < '0' || c > '9') {
      throw CmmsError(ErrorCode::kParse, "malformed " + std::string(what) +
                                             " '" + std::string(token) + "'");
    }
  }
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec == std::errc::result_out_of_range) {
    throw CmmsError(ErrorCode::kRange, std::string(what) + " too large");
  }
  return value;
}

StateId CheckState(std::uint64_t value, const GridConfig& cfg) {
  if (value < 1 || value > static_cast<std::uint64_t>(cfg.states)) {
    throw CmmsError(ErrorCode::kRange, "state " + std::to_string(value) +
                                           " outside 1.." +
                                           std::to_string(cfg.states));
  }
  return StateId{static_cast<int>(value)};
}

}  // namespace

void GridConfig::Validate() const {
  if (states < 1 || states > StateSet::kMaxUniverse) {
    throw CmmsError(ErrorCode::kConfig, "state universe must be 1..64");
  }
  if (services < 1 || entry_width > 64 || services > entry_width) {
    throw CmmsError(ErrorCode::kConfig,
                    "need 1 <= services <= entry_width <= 64");
  }
}

std::uint64_t GridConfig::service_mask() const { return LowBits(services); }
std::uint64_t GridConfig::entry_mask() const { return LowBits(entry_width); }

PolicyTable::PolicyTable(GridConfig config) : config_(config) {
  config_.Validate();
}

void PolicyTable::Set(StateId state, PolicyEntry entry) {
  CheckState(static_cast<std::uint64_t>(state.value < 0 ? 0 : state.value),
             config_);
  if ((entry.raw & ~config_.entry_mask()) != 0) {
    throw CmmsError(ErrorCode::kRange, "policy entry " +
                                           std::to_string(entry.raw) +
                                           " wider than " +
                                           std::to_string(config_.entry_width) +
                                           " bits");
  }
  entries_[state.value] = entry;
}

std::optional<PolicyEntry> PolicyTable::Get(StateId state) const {
  auto it = entries_.find(state.value);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void VoFilterConfig::Validate() const {
  for (const auto& [user, imposed] : imposed_list) {
    if (!imposed.IsSubsetOf(considered_states)) {
      throw CmmsError(ErrorCode::kConfig,
                      "imposed states " + imposed.ToString() + " for '" +
                          user + "' are not all considered states");
    }
  }
}

StateSet Filter(const StateSet& cert_states, const StateSet& considered) {
  return cert_states & considered;
}

StateSet Impose(const StateSet& filtered, const StateSet& imposed) {
  return filtered | imposed;
}

StateSet EffectiveState(const StateSet& cert_states, const VoFilterConfig& cfg,
                        std::string_view user) {
  StateSet imposed;
  if (auto it = cfg.imposed_list.find(std::string(user));
      it != cfg.imposed_list.end()) {
    imposed = it->second;
  }
  return Impose(Filter(cert_states, cfg.considered_states), imposed);
}

PolicyEntry EncodeServices(const ServiceSet& services, const GridConfig& cfg) {
  return PolicyEntry{services.mask() & cfg.service_mask()};
}

ServiceSet DecodeServices(PolicyEntry entry, const GridConfig& cfg) {
  return ServiceSet::FromMask(entry.raw & cfg.service_mask());
}

ServiceSet Lookup(const PolicyTable& table, StateId state) {
  auto entry = table.Get(state);
  if (!entry) return {};
  return DecodeServices(*entry, table.config());
}

ServiceSet PolicyMap(const StateSet& effective, const PolicyTable& table) {
  if (effective.empty()) return {};
  auto granted = ServiceSet::FromMask(table.config().service_mask());
  for (int s : effective.members()) {
    granted = granted & Lookup(table, StateId{s});
    if (granted.empty()) break;
  }
  return granted;
}

ParsedPolicy ParsePolicy(std::string_view text, const GridConfig& cfg) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw CmmsError(ErrorCode::kParse, "expected '<state> : <services>'");
  }
  const std::uint64_t state_value = ParseNumber(text.substr(0, colon), "state");

  std::vector<std::uint64_t> service_values;
  std::string_view rest = text.substr(colon + 1);
  if (Trim(rest).empty()) {
    throw CmmsError(ErrorCode::kParse, "empty service list");
  }
  while (true) {
    const auto comma = rest.find(',');
    service_values.push_back(ParseNumber(rest.substr(0, comma), "service"));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }

  ParsedPolicy out{CheckState(state_value, cfg), {}};
  for (std::uint64_t v : service_values) {
    if (v < 1 || v > static_cast<std::uint64_t>(cfg.services)) {
      throw CmmsError(ErrorCode::kRange, "service " + std::to_string(v) +
                                             " outside 1.." +
                                             std::to_string(cfg.services));
    }
    const int id = static_cast<int>(v);
    if (out.services.contains(id)) {
      throw CmmsError(ErrorCode::kDup,
                      "service " + std::to_string(id) + " listed twice");
    }
    out.services.insert(id);
  }
  return out;
}

std::string RenderPolicy(StateId state, const ServiceSet& services) {
  std::string out = std::to_string(state.value) + ":";
  bool first = true;
  for (int s : services.members()) {
    out += first ? " " : ",";
    out += std::to_string(s);
    first = false;
  }
  return out;
}

PolicyTable ParsePolicyText(std::string_view text, const GridConfig& cfg) {
  PolicyTable table(cfg);
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    const std::string_view body = Trim(line);
    if (body.empty() || body.front() == '#') continue;

    try {
      StateId state;
      PolicyEntry entry;
      if (const auto eq = body.find('=');
          eq != std::string_view::npos && body.find(':') == std::string_view::npos) {
        state = CheckState(ParseNumber(body.substr(0, eq), "state"), cfg);
        entry.raw = ParseNumber(body.substr(eq + 1), "policy entry");
        if ((entry.raw & ~cfg.entry_mask()) != 0) {
          throw CmmsError(ErrorCode::kRange, "policy entry wider than " +
                                                 std::to_string(cfg.entry_width) +
                                                 " bits");
        }
      } else {
        ParsedPolicy p = ParsePolicy(body, cfg);
        state = p.state;
        entry = EncodeServices(p.services, cfg);
      }
      if (table.Get(state)) {
        throw CmmsError(ErrorCode::kDupState,
                        "state " + std::to_string(state.value) +
                            " has more than one policy line");
      }
      table.Set(state, entry);
    } catch (const CmmsError& e) {
      throw CmmsError(e.code(),
                      "line " + std::to_string(line_no) + ": " + e.detail());
    }
  }
  return table;
}

std::string RenderPolicyText(const PolicyTable& table) {
  std::ostringstream out;
  const GridConfig& cfg = table.config();
  for (const auto& [state, entry] : table.entries()) {
    const ServiceSet services = DecodeServices(entry, cfg);
    if (services.empty() || EncodeServices(services, cfg) != entry) {
      out << state << " = " << entry.raw << '\n';
    } else {
      out << RenderPolicy(StateId{state}, services) << '\n';
    }
  }
  return out.str();
}

PolicyTable LoadPolicyFile(const std::filesystem::path& path,
                           const GridConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CmmsError(ErrorCode::kIo, "cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParsePolicyText(buf.str(), cfg);
}

void SavePolicyFile(const PolicyTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CmmsError(ErrorCode::kIo, "cannot write " + path.string());
  }
  out << RenderPolicyText(table);
  if (!out) {
    throw CmmsError(ErrorCode::kIo, "write failed for " + path.string());
  }
}

}  // namespace cmms

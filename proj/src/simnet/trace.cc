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

#include <charconv>
#include <fstream>
#include <sstream>

#include "cmms/error.h"
#include "cmms/simnet.h"

namespace cmms {
namespace {

constexpr std::string_view kStatePrefix = "@state\t";

Tick ParseTick(std::string_view s, std::size_t line_no) {
  Tick t = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), t);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw CmmsError(ErrorCode::kSchema, "trace line " + std::to_string(line_no) +
                                            ": bad tick '" + std::string(s) + "'");
  }
  return t;
}

}  // namespace

std::string SerializeTrace(const Trace& trace) {
  std::string out;
  for (const auto& e : trace.entries) {
    out += std::to_string(e.tick);
    out += '\t';
    out += EncodeEnvelope(e.envelope);
  }
  for (const auto& [addr, state] : trace.terminal_states) {
    out += kStatePrefix;
    out += addr;
    out += '\t';
    out += CanonicalDump(state);
    out += '\n';
  }
  return out;
}

Trace ParseTrace(std::string_view text) {
  Trace trace;
  if (!text.empty() && text.back() != '\n') {
    throw CmmsError(ErrorCode::kSchema, "trace is truncated (no final LF)");
  }
  std::size_t line_no = 0;
  Tick last_tick = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl + 1);
    ++line_no;

    if (line.starts_with(kStatePrefix)) {
      const std::string_view rest = line.substr(kStatePrefix.size());
      const auto tab = rest.find('\t');
      if (tab == std::string_view::npos) {
        throw CmmsError(ErrorCode::kSchema,
                        "trace line " + std::to_string(line_no) + ": malformed state line");
      }
      trace.terminal_states[std::string(rest.substr(0, tab))] = ParseJson(rest.substr(tab + 1));
      continue;
    }
    if (!trace.terminal_states.empty()) {
      throw CmmsError(ErrorCode::kSchema, "trace line " + std::to_string(line_no) +
                                              ": envelope after terminal states");
    }
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw CmmsError(ErrorCode::kSchema,
                      "trace line " + std::to_string(line_no) + ": missing tick");
    }
    const Tick tick = ParseTick(line.substr(0, tab), line_no);
    if (tick < last_tick) {
      throw CmmsError(ErrorCode::kSchema,
                      "trace line " + std::to_string(line_no) + ": ticks decrease");
    }
    last_tick = tick;
    try {
      trace.entries.push_back({tick, DecodeEnvelope(line.substr(tab + 1))});
    } catch (const CmmsError& e) {
      throw CmmsError(ErrorCode::kSchema,
                      "trace line " + std::to_string(line_no) + ": " + e.detail());
    }
  }
  return trace;
}

void DumpTrace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CmmsError(ErrorCode::kIo, "cannot write " + path.string());
  out << SerializeTrace(trace);
  if (!out) throw CmmsError(ErrorCode::kIo, "write failed for " + path.string());
}

Trace LoadTrace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CmmsError(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseTrace(buf.str());
}

std::vector<TraceDifference> DiffTraces(const Trace& a, const Trace& b) {
  std::vector<TraceDifference> diffs;
  const std::size_t n = std::max(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    const bool in_a = i < a.entries.size();
    const bool in_b = i < b.entries.size();
    if (in_a && in_b && a.entries[i] == b.entries[i]) continue;
    TraceDifference d;
    d.index = i;
    if (in_a) d.left = a.entries[i];
    if (in_b) d.right = b.entries[i];
    diffs.push_back(std::move(d));
  }
  return diffs;
}

std::vector<Envelope> ProjectLink(const std::vector<Envelope>& envelopes,
                                  const std::string& from, const std::string& to) {
  std::vector<Envelope> out;
  for (const auto& e : envelopes) {
    if (e.sender == from && e.recipient == to) out.push_back(e);
  }
  return out;
}

std::vector<std::string> MessageTypes(const Trace& trace) {
  std::vector<std::string> out;
  for (const auto& e : trace.entries) out.emplace_back(MsgTypeName(e.envelope.type()));
  return out;
}

namespace {

void MaskInPlace(Json& j) {
  if (j.is_array()) {
    for (auto& v : j) MaskInPlace(v);
    return;
  }
  if (!j.is_object()) return;
  for (auto& [key, value] : j.items()) {
    if (key == "timestamp" || key == "issued_at" || key == "expires_at") {
      value = 0;
    } else if (key == "signature" || key.ends_with("_signature")) {
      value = "";
    } else {
      MaskInPlace(value);
    }
  }
}

}  // namespace

Json MaskTimeDerived(const Envelope& env) {
  Json j = EnvelopeToJson(env);
  MaskInPlace(j);
  return j;
}

// ------------------------------------------------------------ config JSON

Json SimConfigToJson(const SimConfig& cfg) {
  Json faults = Json::array();
  for (const auto& f : cfg.faults) {
    Json j = {{"at_tick", f.at_tick}};
    if (const auto* d = std::get_if<DropNodeFault>(&f.kind)) {
      j["kind"] = "drop_node";
      j["address"] = d->address;
    } else if (const auto* l = std::get_if<DelayLinkFault>(&f.kind)) {
      j["kind"] = "delay_link";
      j["from"] = l->from;
      j["to"] = l->to;
      j["ticks"] = l->ticks;
    } else if (const auto* r = std::get_if<RevokeSubjectFault>(&f.kind)) {
      j["kind"] = "revoke_subject";
      j["name"] = r->name;
    } else {
      j["kind"] = "expire_tickets";
    }
    faults.push_back(j);
  }
  return Json{{"seed", cfg.seed},
              {"tick_limit", cfg.tick_limit},
              {"delivery_policy", cfg.delivery_policy == DeliveryPolicy::kInOrder
                                      ? "in-order"
                                      : "seeded-shuffle"},
              {"faults", faults}};
}

SimConfig SimConfigFromJson(const Json& j) {
  JsonReader r(j, "sim_config", {"seed", "tick_limit", "delivery_policy", "faults"});
  SimConfig cfg;
  cfg.seed = r.Uint("seed");
  cfg.tick_limit = r.Int("tick_limit");
  const std::string policy = r.String("delivery_policy");
  if (policy == "in-order") {
    cfg.delivery_policy = DeliveryPolicy::kInOrder;
  } else if (policy == "seeded-shuffle") {
    cfg.delivery_policy = DeliveryPolicy::kSeededShuffle;
  } else {
    throw CmmsError(ErrorCode::kSchema, "sim_config.delivery_policy: unknown '" + policy + "'");
  }
  const Json& faults = r.Raw("faults");
  if (!faults.is_array()) throw CmmsError(ErrorCode::kSchema, "sim_config.faults: expected array");
  for (const Json& f : faults) {
    if (!f.is_object() || !f.contains("kind") || !f["kind"].is_string()) {
      throw CmmsError(ErrorCode::kSchema, "fault: expected object with 'kind'");
    }
    const std::string kind = f["kind"].get<std::string>();
    FaultSpec spec;
    if (kind == "drop_node") {
      JsonReader fr(f, "fault", {"at_tick", "kind", "address"});
      spec = {fr.Int("at_tick"), DropNodeFault{fr.String("address")}};
    } else if (kind == "delay_link") {
      JsonReader fr(f, "fault", {"at_tick", "kind", "from", "to", "ticks"});
      spec = {fr.Int("at_tick"),
              DelayLinkFault{fr.String("from"), fr.String("to"), fr.Int("ticks")}};
    } else if (kind == "revoke_subject") {
      JsonReader fr(f, "fault", {"at_tick", "kind", "name"});
      spec = {fr.Int("at_tick"), RevokeSubjectFault{fr.String("name")}};
    } else if (kind == "expire_tickets") {
      JsonReader fr(f, "fault", {"at_tick", "kind"});
      spec = {fr.Int("at_tick"), ExpireTicketsFault{}};
    } else {
      throw CmmsError(ErrorCode::kSchema, "fault: unknown kind '" + kind + "'");
    }
    cfg.faults.push_back(std::move(spec));
  }
  cfg.Validate();
  return cfg;
}

Json ScriptStepToJson(const ScriptStep& step) {
  if (const auto* env = std::get_if<Envelope>(&step.action)) {
    return Json{{"at", step.at}, {"envelope", EnvelopeToJson(*env)}};
  }
  return Json{{"at", step.at},
              {"target", step.target},
              {"command", CommandToJson(std::get<Command>(step.action))}};
}

ScriptStep ScriptStepFromJson(const Json& j) {
  if (j.is_object() && j.contains("envelope")) {
    JsonReader r(j, "script_step", {"at", "envelope"});
    Envelope env = EnvelopeFromJson(r.Raw("envelope"));
    std::string target = env.recipient;
    return ScriptStep{r.Int("at"), std::move(target), std::move(env)};
  }
  JsonReader r(j, "script_step", {"at", "target", "command"});
  return ScriptStep{r.Int("at"), r.String("target"), CommandFromJson(r.Raw("command"))};
}

}  // namespace cmms

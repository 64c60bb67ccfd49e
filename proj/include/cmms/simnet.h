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

#ifndef CMMS_SIMNET_H_
#define CMMS_SIMNET_H_

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cmms/envelope.h"
#include "cmms/json_util.h"
#include "cmms/node.h"

namespace cmms {

enum class DeliveryPolicy { kInOrder, kSeededShuffle };

struct DropNodeFault {
  std::string address;
};
struct DelayLinkFault {
  std::string from;
  std::string to;
  Tick ticks = 0;
};
struct RevokeSubjectFault {
  std::string name;
};
struct ExpireTicketsFault {};

struct FaultSpec {
  Tick at_tick = 0;
  std::variant<DropNodeFault, DelayLinkFault, RevokeSubjectFault, ExpireTicketsFault> kind;
};

struct SimConfig {
  std::uint64_t seed = 0;
  Tick tick_limit = 10000;
  DeliveryPolicy delivery_policy = DeliveryPolicy::kInOrder;
  std::vector<FaultSpec> faults;

  // Throws kConfig unless tick_limit > 0 and every fault lies before it.
  void Validate() const;
};

Json SimConfigToJson(const SimConfig& cfg);
SimConfig SimConfigFromJson(const Json& j);

// One scripted action: inject an envelope onto the wire, or hand a local
// command to the node at `target`.
struct ScriptStep {
  Tick at = 0;
  std::string target;
  std::variant<Envelope, Command> action;
};

Json ScriptStepToJson(const ScriptStep& step);
ScriptStep ScriptStepFromJson(const Json& j);

struct TraceEntry {
  Tick tick = 0;
  Envelope envelope;
  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

// Every envelope put on the wire, in send order, plus each node's state at
// the end of the run.
struct Trace {
  std::vector<TraceEntry> entries;
  std::map<std::string, Json> terminal_states;
  friend bool operator==(const Trace&, const Trace&) = default;
};

// "<tick>\t<envelope json>" per envelope, then "@state\t<address>\t<json>"
// per node. UTF-8, LF.
std::string SerializeTrace(const Trace& trace);
Trace ParseTrace(std::string_view text);  // throws kSchema
void DumpTrace(const Trace& trace, const std::filesystem::path& path);
Trace LoadTrace(const std::filesystem::path& path);  // kIo, kSchema

struct TraceDifference {
  std::size_t index = 0;
  std::optional<TraceEntry> left;
  std::optional<TraceEntry> right;
};
// Position-wise comparison of the envelope sequences.
std::vector<TraceDifference> DiffTraces(const Trace& a, const Trace& b);

// Envelopes on the (from, to) link, in order.
std::vector<Envelope> ProjectLink(const std::vector<Envelope>& envelopes,
                                  const std::string& from, const std::string& to);
std::vector<std::string> MessageTypes(const Trace& trace);

// Envelope JSON with clock-derived fields (timestamps, validity bounds and
// the signatures covering them) blanked, for comparing runs whose clocks
// differ.
Json MaskTimeDerived(const Envelope& env);

struct CommandFailure {
  Tick tick = 0;
  std::string target;
  ErrorCode code = ErrorCode::kConfig;
  std::string detail;
};

struct RunResult {
  Trace trace;
  bool quiescent = true;  // false means E_TICK_LIMIT
  Tick final_tick = 0;
  std::vector<CommandFailure> failures;
};

// Discrete-event transport. Each link is FIFO; each node handles at most one
// envelope per tick; an envelope sent at tick t is deliverable at t+1 plus
// any injected link delay. Identical inputs give byte-identical traces.
class Simulator {
 public:
  explicit Simulator(SimConfig cfg);

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // Throws kConfig on a duplicate address.
  void AddNode(std::unique_ptr<Node> node);
  Node* Find(const std::string& address);
  const Node* Find(const std::string& address) const;
  template <typename T>
  T* FindAs(const std::string& address) {
    return dynamic_cast<T*>(Find(address));
  }

  Tick now() const { return now_; }

  // Runs `script` (ticks relative to the current clock) until the network is
  // quiescent or the tick limit is hit. May be called repeatedly; node state
  // and the clock carry over. Returns the trace of this call only.
  RunResult Run(const std::vector<ScriptStep>& script);

 private:
  struct InFlight {
    std::uint64_t seq = 0;
    Tick ready = 0;
    Envelope envelope;
  };
  using LinkKey = std::pair<std::string, std::string>;

  void Send(Envelope env, Trace& trace);
  void ApplyFault(const FaultSpec& fault, RunResult& result);
  void Collect(std::vector<Envelope> out, Trace& trace);
  std::optional<Tick> NextEventTick(const std::vector<ScriptStep>& script,
                                    std::size_t next_step) const;
  std::vector<std::string> ProcessingOrder();

  SimConfig cfg_;
  std::mt19937_64 rng_;
  Tick now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::size_t next_fault_ = 0;
  std::vector<FaultSpec> faults_;
  std::map<std::string, std::unique_ptr<Node>> nodes_;
  std::set<std::string> dropped_;
  std::map<LinkKey, std::deque<InFlight>> links_;
  std::map<LinkKey, Tick> link_delay_;
};

// One-shot helper: fresh clock, one script.
RunResult RunSimulation(std::vector<std::unique_ptr<Node>> topology,
                        const std::vector<ScriptStep>& script, const SimConfig& cfg);

}  // namespace cmms

#endif  // CMMS_SIMNET_H_

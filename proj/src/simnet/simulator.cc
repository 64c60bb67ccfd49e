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

#include <algorithm>

#include "cmms/error.h"
#include "cmms/simnet.h"

namespace cmms {

void SimConfig::Validate() const {
  if (tick_limit <= 0) throw CmmsError(ErrorCode::kConfig, "tick_limit must be positive");
  for (const auto& f : faults) {
    if (f.at_tick < 0 || f.at_tick >= tick_limit) {
      throw CmmsError(ErrorCode::kConfig, "fault at tick " + std::to_string(f.at_tick) +
                                              " outside the tick limit");
    }
  }
}

Simulator::Simulator(SimConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
  cfg_.Validate();
  faults_ = cfg_.faults;
  std::stable_sort(faults_.begin(), faults_.end(),
                   [](const FaultSpec& a, const FaultSpec& b) { return a.at_tick < b.at_tick; });
}

void Simulator::AddNode(std::unique_ptr<Node> node) {
  const std::string addr = node->address();
  if (!nodes_.emplace(addr, std::move(node)).second) {
    throw CmmsError(ErrorCode::kConfig, "duplicate node address '" + addr + "'");
  }
}

Node* Simulator::Find(const std::string& address) {
  auto it = nodes_.find(address);
  return it == nodes_.end() ? nullptr : it->second.get();
}

const Node* Simulator::Find(const std::string& address) const {
  auto it = nodes_.find(address);
  return it == nodes_.end() ? nullptr : it->second.get();
}

void Simulator::Send(Envelope env, Trace& trace) {
  trace.entries.push_back({now_, env});
  if (!nodes_.count(env.recipient) || dropped_.count(env.recipient)) return;

  LinkKey key{env.sender, env.recipient};
  auto& queue = links_[key];
  Tick ready = now_ + 1;
  if (auto d = link_delay_.find(key); d != link_delay_.end()) ready += d->second;
  if (!queue.empty()) ready = std::max(ready, queue.back().ready);
  queue.push_back(InFlight{next_seq_++, ready, std::move(env)});
}

void Simulator::Collect(std::vector<Envelope> out, Trace& trace) {
  for (auto& env : out) Send(std::move(env), trace);
}

void Simulator::ApplyFault(const FaultSpec& fault, RunResult& result) {
  auto run_command = [&](Node& node, const Command& cmd) {
    try {
      Collect(node.Execute(cmd, now_), result.trace);
    } catch (const CmmsError& e) {
      result.failures.push_back({now_, node.address(), e.code(), e.detail()});
    }
  };

  if (const auto* drop = std::get_if<DropNodeFault>(&fault.kind)) {
    dropped_.insert(drop->address);
    for (auto& [key, queue] : links_) {
      if (key.second == drop->address) queue.clear();
    }
  } else if (const auto* delay = std::get_if<DelayLinkFault>(&fault.kind)) {
    link_delay_[{delay->from, delay->to}] = delay->ticks;
  } else if (const auto* revoke = std::get_if<RevokeSubjectFault>(&fault.kind)) {
    for (auto& [addr, node] : nodes_) {
      if (node->kind() == NodeKind::kMonitor && !dropped_.count(addr)) {
        run_command(*node, RevokeSubjectCmd{revoke->name});
      }
    }
  } else {
    for (auto& [addr, node] : nodes_) {
      if (node->kind() == NodeKind::kService && !dropped_.count(addr)) {
        run_command(*node, ExpireTicketsCmd{});
      }
    }
  }
}

std::vector<std::string> Simulator::ProcessingOrder() {
  std::vector<std::string> order;
  for (const auto& [addr, node] : nodes_) {
    if (!dropped_.count(addr)) order.push_back(addr);
  }
  if (cfg_.delivery_policy == DeliveryPolicy::kSeededShuffle) {
    std::shuffle(order.begin(), order.end(), rng_);
  }
  return order;
}

std::optional<Tick> Simulator::NextEventTick(const std::vector<ScriptStep>& script,
                                             std::size_t next_step) const {
  std::optional<Tick> next;
  auto consider = [&next](Tick t) {
    if (!next || t < *next) next = t;
  };
  if (next_step < script.size()) consider(script[next_step].at);
  for (const auto& [key, queue] : links_) {
    if (!queue.empty()) consider(queue.front().ready);
  }
  for (const auto& [addr, node] : nodes_) {
    if (dropped_.count(addr)) continue;
    if (auto d = node->NextDeadline()) consider(*d);
  }
  // Faults never keep an otherwise idle network alive.
  if (next && next_fault_ < faults_.size()) consider(faults_[next_fault_].at_tick);
  return next;
}

RunResult Simulator::Run(const std::vector<ScriptStep>& relative_script) {
  RunResult result;
  std::vector<ScriptStep> script = relative_script;
  for (auto& step : script) step.at += now_;
  std::stable_sort(script.begin(), script.end(),
                   [](const ScriptStep& a, const ScriptStep& b) { return a.at < b.at; });
  std::size_t next_step = 0;

  while (true) {
    while (next_fault_ < faults_.size() && faults_[next_fault_].at_tick <= now_) {
      ApplyFault(faults_[next_fault_++], result);
    }

    for (; next_step < script.size() && script[next_step].at <= now_; ++next_step) {
      const ScriptStep& step = script[next_step];
      if (const auto* env = std::get_if<Envelope>(&step.action)) {
        Send(*env, result.trace);
        continue;
      }
      Node* node = Find(step.target);
      if (!node || dropped_.count(step.target)) {
        result.failures.push_back({now_, step.target, ErrorCode::kConfig,
                                   "no live node at '" + step.target + "'"});
        continue;
      }
      try {
        Collect(node->Execute(std::get<Command>(step.action), now_), result.trace);
      } catch (const CmmsError& e) {
        result.failures.push_back({now_, step.target, e.code(), e.detail()});
      }
    }

    for (auto& [addr, node] : nodes_) {
      if (dropped_.count(addr)) continue;
      if (auto d = node->NextDeadline(); d && *d <= now_) {
        Collect(node->Poll(now_), result.trace);
      }
    }

    for (const std::string& addr : ProcessingOrder()) {
      std::vector<std::deque<InFlight>*> eligible;
      for (auto& [key, queue] : links_) {
        if (key.second == addr && !queue.empty() && queue.front().ready <= now_) {
          eligible.push_back(&queue);
        }
      }
      if (eligible.empty()) continue;
      std::deque<InFlight>* chosen = eligible.front();
      if (cfg_.delivery_policy == DeliveryPolicy::kSeededShuffle) {
        std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
        chosen = eligible[pick(rng_)];
      } else {
        for (auto* q : eligible) {
          if (q->front().seq < chosen->front().seq) chosen = q;
        }
      }
      InFlight item = std::move(chosen->front());
      chosen->pop_front();
      Collect(nodes_.at(addr)->Step(item.envelope, now_), result.trace);
    }

    const auto next = NextEventTick(script, next_step);
    if (!next) break;
    const Tick advance = std::max(*next, now_ + 1);
    if (advance >= cfg_.tick_limit) {
      result.quiescent = false;
      break;
    }
    now_ = advance;
  }

  result.final_tick = now_;
  ++now_;
  for (const auto& [addr, node] : nodes_) {
    Json state = node->Snapshot();
    if (dropped_.count(addr)) state["dropped"] = true;
    result.trace.terminal_states[addr] = std::move(state);
  }
  return result;
}

RunResult RunSimulation(std::vector<std::unique_ptr<Node>> topology,
                        const std::vector<ScriptStep>& script, const SimConfig& cfg) {
  Simulator sim(cfg);
  for (auto& node : topology) sim.AddNode(std::move(node));
  return sim.Run(script);
}

}  // namespace cmms

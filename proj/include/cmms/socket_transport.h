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

#ifndef CMMS_SOCKET_TRANSPORT_H_
#define CMMS_SOCKET_TRANSPORT_H_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "cmms/envelope.h"
#include "cmms/node.h"

namespace cmms {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string ToString() const { return host + ":" + std::to_string(port); }
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

// "host:port"; throws kConfig.
Endpoint ParseEndpoint(std::string_view text);

// Maps wall-clock time to ticks. All nodes of one deployment share an epoch.
class TickClock {
 public:
  using Clock = std::chrono::steady_clock;

  explicit TickClock(std::chrono::milliseconds tick = std::chrono::milliseconds(10),
                     Clock::time_point epoch = Clock::now())
      : tick_(tick), epoch_(epoch) {}

  // Tick 0 at the Unix epoch, so separate processes agree on the clock.
  static TickClock SinceUnixEpoch(std::chrono::milliseconds tick);

  Tick Now() const;
  Clock::time_point TimeOf(Tick t) const { return epoch_ + tick_ * t; }

 private:
  std::chrono::milliseconds tick_;
  Clock::time_point epoch_;
};

// Opens a fresh connection, writes one envelope line and closes.
// Throws E_CONN if the peer cannot be reached.
void SocketSend(const Endpoint& to, const Envelope& env);

// Hosts one node behind a TCP listener. Inbound envelopes, local commands
// and deadline polls are serialized onto a single worker thread, so the
// node sees the same one-at-a-time discipline as in the simulator.
class SocketNodeRunner {
 public:
  SocketNodeRunner(std::unique_ptr<Node> node, TickClock clock, Endpoint bind = {});
  ~SocketNodeRunner();

  SocketNodeRunner(const SocketNodeRunner&) = delete;
  SocketNodeRunner& operator=(const SocketNodeRunner&) = delete;

  const std::string& address() const { return address_; }
  // Bound endpoint; the port is known once the constructor returns.
  const Endpoint& endpoint() const { return bound_; }

  // Starts the listener and worker. `book` maps grid addresses to endpoints.
  void Start(std::map<std::string, Endpoint> book);
  void Stop();

  // Runs a local command on the worker thread; the future carries any error.
  std::future<void> Submit(Command cmd);

  // Runs `fn` against the node under the worker lock.
  void Inspect(const std::function<void(const Node&)>& fn) const;

  // Every envelope this node has put on the wire, in send order.
  std::vector<Envelope> SentLog() const;
  // Inbound lines that failed to decode.
  std::vector<std::string> Rejected() const;
  // Envelopes sent to addresses in the book, and envelopes fully stepped
  // (outputs already on the wire).
  std::uint64_t SentInBook() const;
  std::uint64_t Stepped() const;

 private:
  struct CommandJob {
    Command cmd;
    std::shared_ptr<std::promise<void>> done;
  };
  using Job = std::variant<Envelope, CommandJob>;

  void AcceptLoop();
  void ReadLoop(int fd);
  void WorkLoop();
  void Emit(std::vector<Envelope> out);
  void Deliver(const Envelope& env);

  std::unique_ptr<Node> node_;
  std::string address_;
  TickClock clock_;
  Endpoint bound_;
  int listen_fd_ = -1;
  std::map<std::string, Endpoint> book_;

  mutable std::mutex node_mu_;
  mutable std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Job> queue_;
  std::size_t in_progress_ = 0;

  mutable std::mutex log_mu_;
  std::vector<Envelope> sent_;
  std::vector<std::string> rejected_;
  std::uint64_t sent_in_book_ = 0;
  std::uint64_t stepped_ = 0;

  std::mutex conn_mu_;
  std::map<std::string, int> outbound_;
  std::vector<int> inbound_;

  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::thread worker_;
  std::vector<std::thread> readers_;
};

// A set of runners on one host sharing a clock, for tests and local demos.
class SocketCluster {
 public:
  explicit SocketCluster(TickClock clock) : clock_(clock) {}
  ~SocketCluster() { Stop(); }

  SocketNodeRunner& Add(std::unique_ptr<Node> node);
  void Start();
  void Stop();

  SocketNodeRunner& at(const std::string& address);
  const TickClock& clock() const { return clock_; }

  // True once every envelope sent within the cluster has been stepped, with
  // the count stable across two observations.
  bool WaitQuiescent(std::chrono::milliseconds timeout);

  // Concatenation of every runner's send log.
  std::vector<Envelope> AllSent() const;

 private:
  TickClock clock_;
  std::map<std::string, std::unique_ptr<SocketNodeRunner>> runners_;
};

}  // namespace cmms

#endif  // CMMS_SOCKET_TRANSPORT_H_

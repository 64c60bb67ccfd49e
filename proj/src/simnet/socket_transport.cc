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

#include "cmms/socket_transport.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "cmms/error.h"

namespace cmms {
namespace {

std::string Errno() { return std::strerror(errno); }

sockaddr_in ResolveV4(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw CmmsError(ErrorCode::kConn, "cannot resolve host '" + ep.host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

int Connect(const Endpoint& ep) {
  const sockaddr_in addr = ResolveV4(ep);
  const int fd = socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw CmmsError(ErrorCode::kConn, "socket: " + Errno());
  if (connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string why = Errno();
    close(fd);
    throw CmmsError(ErrorCode::kConn, "connect " + ep.ToString() + ": " + why);
  }
  const int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

bool WriteAll(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

Endpoint ParseEndpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw CmmsError(ErrorCode::kConfig, "endpoint '" + std::string(text) + "' is not host:port");
  }
  const std::string_view port = text.substr(colon + 1);
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || ptr != port.data() + port.size() || value > 65535) {
    throw CmmsError(ErrorCode::kConfig, "endpoint '" + std::string(text) + "' has a bad port");
  }
  return Endpoint{std::string(text.substr(0, colon)), static_cast<std::uint16_t>(value)};
}

TickClock TickClock::SinceUnixEpoch(std::chrono::milliseconds tick) {
  const auto since_unix = std::chrono::system_clock::now().time_since_epoch();
  return TickClock(tick, Clock::now() - std::chrono::duration_cast<Clock::duration>(since_unix));
}

Tick TickClock::Now() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - epoch_).count() /
         tick_.count();
}

void SocketSend(const Endpoint& to, const Envelope& env) {
  const int fd = Connect(to);
  const bool ok = WriteAll(fd, EncodeEnvelope(env));
  close(fd);
  if (!ok) throw CmmsError(ErrorCode::kConn, "write to " + to.ToString() + " failed");
}

// ------------------------------------------------------------ runner

SocketNodeRunner::SocketNodeRunner(std::unique_ptr<Node> node, TickClock clock, Endpoint bind)
    : node_(std::move(node)), address_(node_->address()), clock_(clock), bound_(bind) {
  const sockaddr_in addr = ResolveV4(bind);
  listen_fd_ = socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw CmmsError(ErrorCode::kConn, "socket: " + Errno());
  const int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0 ||
      listen(listen_fd_, 64) != 0) {
    const std::string why = Errno();
    close(listen_fd_);
    throw CmmsError(ErrorCode::kConn, "bind " + bind.ToString() + ": " + why);
  }
  sockaddr_in actual{};
  socklen_t len = sizeof(actual);
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&actual), &len);
  bound_.port = ntohs(actual.sin_port);
}

SocketNodeRunner::~SocketNodeRunner() {
  Stop();
  if (listen_fd_ >= 0) close(listen_fd_);
}

void SocketNodeRunner::Start(std::map<std::string, Endpoint> book) {
  book_ = std::move(book);
  running_ = true;
  acceptor_ = std::thread(&SocketNodeRunner::AcceptLoop, this);
  worker_ = std::thread(&SocketNodeRunner::WorkLoop, this);
}

void SocketNodeRunner::Stop() {
  if (!running_.exchange(false)) return;
  shutdown(listen_fd_, SHUT_RDWR);
  queue_cv_.notify_all();
  if (acceptor_.joinable()) acceptor_.join();
  if (worker_.joinable()) worker_.join();
  std::vector<std::thread> readers;
  {
    std::lock_guard lock(conn_mu_);
    for (int fd : inbound_) shutdown(fd, SHUT_RDWR);
    for (auto& [addr, fd] : outbound_) close(fd);
    outbound_.clear();
    readers.swap(readers_);
  }
  for (auto& t : readers) t.join();
  std::lock_guard lock(conn_mu_);
  for (int fd : inbound_) close(fd);
  inbound_.clear();
  std::lock_guard qlock(queue_mu_);
  for (auto& job : queue_) {
    if (auto* c = std::get_if<CommandJob>(&job)) {
      c->done->set_exception(std::make_exception_ptr(
          CmmsError(ErrorCode::kConn, "runner stopped before command ran")));
    }
  }
  queue_.clear();
}

void SocketNodeRunner::AcceptLoop() {
  while (running_) {
    const int fd = accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    std::lock_guard lock(conn_mu_);
    if (!running_) {
      close(fd);
      return;
    }
    inbound_.push_back(fd);
    readers_.emplace_back(&SocketNodeRunner::ReadLoop, this, fd);
  }
}

void SocketNodeRunner::ReadLoop(int fd) {
  std::string buffer;
  char chunk[4096];
  while (running_) {
    const ssize_t n = recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n', start)) {
      std::string line = buffer.substr(start, nl - start + 1);
      start = nl + 1;
      try {
        Envelope env = DecodeEnvelope(line);
        if (env.recipient != address_) {
          throw CmmsError(ErrorCode::kSchema, "addressed to '" + env.recipient + "'");
        }
        std::lock_guard lock(queue_mu_);
        queue_.push_back(std::move(env));
        queue_cv_.notify_one();
      } catch (const CmmsError& e) {
        std::lock_guard lock(log_mu_);
        rejected_.push_back(std::string(ErrorCodeName(e.code())) + ": " + e.detail());
      }
    }
    buffer.erase(0, start);
  }
}

void SocketNodeRunner::WorkLoop() {
  while (running_) {
    std::optional<Tick> deadline;
    {
      std::lock_guard lock(node_mu_);
      deadline = node_->NextDeadline();
    }
    std::optional<Job> job;
    {
      std::unique_lock lock(queue_mu_);
      auto ready = [this] { return !running_ || !queue_.empty(); };
      if (deadline) {
        queue_cv_.wait_until(lock, clock_.TimeOf(*deadline), ready);
      } else {
        queue_cv_.wait(lock, ready);
      }
      if (!running_) return;
      if (!queue_.empty()) {
        job = std::move(queue_.front());
        queue_.pop_front();
      }
    }

    const Tick now = clock_.Now();
    std::vector<Envelope> out;
    std::exception_ptr failure;
    {
      std::lock_guard lock(node_mu_);
      if (auto d = node_->NextDeadline(); d && *d <= now) out = node_->Poll(now);
      if (job) {
        std::vector<Envelope> more;
        if (auto* env = std::get_if<Envelope>(&*job)) {
          more = node_->Step(*env, now);
        } else {
          try {
            more = node_->Execute(std::get<CommandJob>(*job).cmd, now);
          } catch (...) {
            failure = std::current_exception();
          }
        }
        for (auto& e : more) out.push_back(std::move(e));
      }
    }
    Emit(std::move(out));
    if (!job) continue;
    if (auto* c = std::get_if<CommandJob>(&*job)) {
      if (failure) {
        c->done->set_exception(failure);
      } else {
        c->done->set_value();
      }
    } else {
      std::lock_guard lock(log_mu_);
      ++stepped_;
    }
  }
}

void SocketNodeRunner::Emit(std::vector<Envelope> out) {
  for (const Envelope& env : out) Deliver(env);
}

void SocketNodeRunner::Deliver(const Envelope& env) {
  const auto target = book_.find(env.recipient);
  {
    std::lock_guard lock(log_mu_);
    sent_.push_back(env);
    if (target != book_.end()) ++sent_in_book_;
  }
  if (target == book_.end()) return;

  const std::string line = EncodeEnvelope(env);
  std::lock_guard lock(conn_mu_);
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto it = outbound_.find(env.recipient);
    if (it == outbound_.end()) {
      try {
        it = outbound_.emplace(env.recipient, Connect(target->second)).first;
      } catch (const CmmsError& e) {
        std::lock_guard log(log_mu_);
        rejected_.push_back("outbound " + env.recipient + ": " + e.detail());
        return;
      }
    }
    if (WriteAll(it->second, line)) return;
    close(it->second);
    outbound_.erase(it);
  }
}

std::future<void> SocketNodeRunner::Submit(Command cmd) {
  auto done = std::make_shared<std::promise<void>>();
  auto future = done->get_future();
  std::lock_guard lock(queue_mu_);
  if (!running_) {
    done->set_exception(
        std::make_exception_ptr(CmmsError(ErrorCode::kConn, "runner not started")));
    return future;
  }
  queue_.push_back(CommandJob{std::move(cmd), std::move(done)});
  queue_cv_.notify_one();
  return future;
}

void SocketNodeRunner::Inspect(const std::function<void(const Node&)>& fn) const {
  std::lock_guard lock(node_mu_);
  fn(*node_);
}

std::vector<Envelope> SocketNodeRunner::SentLog() const {
  std::lock_guard lock(log_mu_);
  return sent_;
}

std::vector<std::string> SocketNodeRunner::Rejected() const {
  std::lock_guard lock(log_mu_);
  return rejected_;
}

std::uint64_t SocketNodeRunner::SentInBook() const {
  std::lock_guard lock(log_mu_);
  return sent_in_book_;
}

std::uint64_t SocketNodeRunner::Stepped() const {
  std::lock_guard lock(log_mu_);
  return stepped_;
}

// ------------------------------------------------------------ cluster

SocketNodeRunner& SocketCluster::Add(std::unique_ptr<Node> node) {
  const std::string addr = node->address();
  if (runners_.count(addr)) {
    throw CmmsError(ErrorCode::kConfig, "duplicate node address '" + addr + "'");
  }
  auto runner = std::make_unique<SocketNodeRunner>(std::move(node), clock_);
  return *runners_.emplace(addr, std::move(runner)).first->second;
}

void SocketCluster::Start() {
  std::map<std::string, Endpoint> book;
  for (const auto& [addr, runner] : runners_) book[addr] = runner->endpoint();
  for (auto& [addr, runner] : runners_) runner->Start(book);
}

void SocketCluster::Stop() {
  for (auto& [addr, runner] : runners_) runner->Stop();
}

SocketNodeRunner& SocketCluster::at(const std::string& address) {
  auto it = runners_.find(address);
  if (it == runners_.end()) {
    throw CmmsError(ErrorCode::kConfig, "no runner for '" + address + "'");
  }
  return *it->second;
}

bool SocketCluster::WaitQuiescent(std::chrono::milliseconds timeout) {
  const auto give_up = std::chrono::steady_clock::now() + timeout;
  int stable = 0;
  std::uint64_t last = ~std::uint64_t{0};
  while (std::chrono::steady_clock::now() < give_up) {
    std::uint64_t stepped = 0;
    std::uint64_t sent = 0;
    for (const auto& [addr, runner] : runners_) stepped += runner->Stepped();
    for (const auto& [addr, runner] : runners_) sent += runner->SentInBook();
    if (stepped == sent && sent == last) {
      if (++stable >= 2) return true;
    } else {
      stable = 0;
    }
    last = sent;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  return false;
}

std::vector<Envelope> SocketCluster::AllSent() const {
  std::vector<Envelope> all;
  for (const auto& [addr, runner] : runners_) {
    for (auto& env : runner->SentLog()) all.push_back(std::move(env));
  }
  return all;
}

}  // namespace cmms

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

#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <thread>

#include "cmms/deployment.h"
#include "cmms/socket_transport.h"
#include "test_util.h"
#include "transport_equivalence.h"

namespace cmms {
namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const CmmsError& e) {
    return e.code();
  }
  return ErrorCode::kConfig;
}

// Loopback ports are chosen by the kernel.
Deployment EphemeralSpig() {
  Deployment dep = SpigDeployment();
  for (auto& [addr, ep] : dep.endpoints) ep = "127.0.0.1:0";
  return dep;
}

TEST(EndpointTest, Parse) {
  const Endpoint ep = ParseEndpoint("127.0.0.1:7401");
  EXPECT_EQ(ep.host, "127.0.0.1");
  EXPECT_EQ(ep.port, 7401);
  EXPECT_EQ(ep.ToString(), "127.0.0.1:7401");
  EXPECT_EQ(CodeOf([] { ParseEndpoint("nohost"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { ParseEndpoint("h:70000"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { ParseEndpoint("h:x"); }), ErrorCode::kConfig);
}

TEST(TickClockTest, Monotonic) {
  TickClock clock(std::chrono::milliseconds(1));
  const Tick a = clock.Now();
  std::this_thread::sleep_for(std::chrono::milliseconds(5));
  EXPECT_GE(clock.Now(), a + 4);
}

TEST(SocketSendTest, DeadAddressIsConnError) {
  Envelope env;
  env.msg_id = 1;
  env.sender = "cli";
  env.recipient = "repository";
  env.payload = GetCert{"serv1"};
  // Bind, learn the port, then close so nothing listens there.
  std::uint16_t port = 0;
  {
    SocketNodeRunner runner(std::make_unique<ProbeNode>("tmp"), TickClock());
    port = runner.endpoint().port;
  }
  EXPECT_EQ(CodeOf([&] { SocketSend(Endpoint{"127.0.0.1", port}, env); }), ErrorCode::kConn);
}

TEST(SocketGridTest, HappyPathMatchesSimulation) {
  const auto start = std::chrono::steady_clock::now();
  GridSession sim(SpigDeployment());
  sim.Bootstrap();
  sim.Register("alice", StateSet{5, 6});
  sim.RequestAccess("alice");
  sim.Invoke("alice", 2);

  SocketGrid grid(EphemeralSpig(), TickClock());
  grid.AddUser("alice");
  grid.Start();
  grid.Bootstrap();
  grid.Register("alice", StateSet{5, 6});
  grid.RequestAccess("alice");
  EXPECT_EQ(grid.ActiveServices("alice"), ServiceSet{2});
  grid.Invoke("alice", 2);
  EXPECT_EQ(testing::FirstLinkMismatch(testing::Envelopes(sim.trace()),
                                       grid.cluster().AllSent()),
            "");
  EXPECT_EQ(grid.UserSnapshot("alice")["last_result"], 2);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(SocketGridTest, ConcurrentUsersGetTheirOwnLists) {
  Deployment dep = EphemeralSpig();
  ServiceNodeSpec serv2 = dep.service_nodes.front();
  serv2.address = "serv2";
  dep.service_nodes.push_back(serv2);
  dep.endpoints["serv2"] = "127.0.0.1:0";
  SocketGrid grid(dep, TickClock());
  grid.AddUser("alice");
  grid.AddUser("bob");
  grid.Start();
  grid.Bootstrap();
  grid.Register("alice", StateSet{5, 6});
  grid.Register("bob", StateSet{7});
  // Both requests are submitted before either settles.
  auto& cluster = grid.cluster();
  auto a = cluster.at(UserAddress("alice")).Submit(RequestAccessCmd{kDiscoveryAddress});
  auto b = cluster.at(UserAddress("bob")).Submit(RequestAccessCmd{kDiscoveryAddress});
  a.get();
  b.get();
  ASSERT_TRUE(cluster.WaitQuiescent(std::chrono::seconds(2)));
  EXPECT_EQ(grid.ActiveServices("alice"), ServiceSet{2});
  EXPECT_EQ(grid.ActiveServices("bob"), (ServiceSet{3, 4}));
}

void SendRaw(const Endpoint& ep, const std::string& bytes) {
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr);
  ASSERT_EQ(connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)), 0);
  ASSERT_EQ(send(fd, bytes.data(), bytes.size(), 0), static_cast<ssize_t>(bytes.size()));
  close(fd);
}

TEST(SocketGridTest, MalformedLineIsRejectedAndNodeSurvives) {
  SocketGrid grid(EphemeralSpig(), TickClock());
  grid.AddUser("alice");
  grid.Start();
  grid.Bootstrap();
  auto& repo = grid.cluster().at(kRepositoryAddress);
  SendRaw(repo.endpoint(), "{\"version\":1,\"msg\n");
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
  while (repo.Rejected().empty() && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ASSERT_EQ(repo.Rejected().size(), 1u);
  EXPECT_EQ(repo.Rejected()[0].rfind("E_SCHEMA", 0), 0u) << repo.Rejected()[0];
  grid.Register("alice", StateSet{1});
  grid.RequestAccess("alice");
  EXPECT_EQ(grid.ActiveServices("alice"), (ServiceSet{1, 2, 3, 4}));
}

}  // namespace
}  // namespace cmms

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

#include <map>
#include <set>

#include "cmms/deployment.h"
#include "cmms/roles.h"
#include "grid_util.h"

namespace cmms {
namespace {

using testing::Enroll;
using testing::ErrorsTo;
using testing::Inject;
using testing::LastServiceList;
using testing::OfType;
using testing::TwoServiceNodes;

// ------------------------------------------------------------ user agent

TEST(UserAgentTest, RevokedDiscoveryCertStopsBeforeGetNode) {
  GridSession s(SpigDeployment());
  Enroll(s, "alice", StateSet{5, 6});
  s.Run({Inject(kMonitorAddress, kCaAddress, Revoke{"discovery"})});
  const RunResult r = s.RequestAccess("alice");
  EXPECT_TRUE(OfType(r.trace, MsgType::kGetNode).empty());
  ASSERT_TRUE(s.user("alice")->last_error().has_value());
  EXPECT_EQ(s.user("alice")->last_error()->code, ErrorCode::kBadPeerCert);
  EXPECT_EQ(s.user("alice")->phase(), UserAgent::Phase::kFailed);
}

TEST(UserAgentTest, InvokeOutsideActiveListIsRefusedLocally) {
  GridSession s(SpigDeployment());
  Enroll(s, "alice", StateSet{5, 6});
  s.RequestAccess("alice");
  ASSERT_EQ(s.user("alice")->active_services(), ServiceSet{2});
  const RunResult r = s.Invoke("alice", 3);
  EXPECT_TRUE(r.trace.entries.empty());
  ASSERT_TRUE(s.user("alice")->last_error().has_value());
  EXPECT_EQ(s.user("alice")->last_error()->code, ErrorCode::kNotAuthorized);
}

TEST(UserAgentTest, RequestBeforeRegistrationFails) {
  GridSession s(SpigDeployment());
  s.Bootstrap();
  s.EnsureUser("alice");
  s.RequestAccess("alice");
  ASSERT_EQ(s.failures().size(), 1u);
  EXPECT_EQ(s.failures()[0].code, ErrorCode::kUnknownSubject);
}

// ------------------------------------------------------------ discovery

TEST(DiscoveryTest, SendsFilteredAndImposedStates) {
  Deployment dep = SpigDeployment();
  dep.grid = GridConfig{16, 4, 8};
  dep.service_nodes.front().policy_table = [&] {
    PolicyTable t(dep.grid);
    for (const auto& [state, entry] : dep.service_nodes.front().policy_table.entries()) {
      t.Set(StateId(state), entry);
    }
    return t;
  }();
  dep.vo_filter = VoFilterConfig{StateSet::Range(1, 12), {{"ravi", StateSet{11, 12}}}};
  GridSession s(dep);
  Enroll(s, "ravi", StateSet{1, 4, 15});
  const RunResult r = s.RequestAccess("ravi");
  const auto eff = OfType(r.trace, MsgType::kSendEffState);
  ASSERT_EQ(eff.size(), 1u);
  EXPECT_EQ(eff[0].As<SendEffState>()->effective_states, (StateSet{1, 4, 11, 12}));
  EXPECT_EQ(eff[0].As<SendEffState>()->user, "ravi");
}

TEST(DiscoveryTest, NoFreeNodeAnswersNoNode) {
  GridSession s(SpigDeployment());
  Enroll(s, "alice", StateSet{5, 6});
  s.Register("bob", StateSet{7});
  // serv1 is reserved for alice when bob's request is decided.
  const RunResult r =
      s.Run({{0, UserAddress("alice"), Command{RequestAccessCmd{kDiscoveryAddress}}},
             {0, UserAddress("bob"), Command{RequestAccessCmd{kDiscoveryAddress}}}});
  EXPECT_EQ(LastServiceList(r.trace, "alice"), ServiceSet{2});
  EXPECT_EQ(ErrorsTo(r.trace, UserAddress("bob")), std::vector<ErrorCode>{ErrorCode::kNoNode});
  EXPECT_TRUE(OfType(r.trace, MsgType::kSendNode, UserAddress("bob")).empty());
  // Released once alice's list is delivered.
  s.RequestAccess("bob");
  EXPECT_EQ(LastServiceList(s.trace(), "bob"), (ServiceSet{3, 4}));
}

TEST(DiscoveryTest, RoundRobinOverFreeNodes) {
  GridSession s(TwoServiceNodes());
  Enroll(s, "alice", StateSet{5, 6});
  s.Register("bob", StateSet{7});
  s.Register("carol", StateSet{1});
  std::vector<std::string> picked;
  for (const char* user : {"alice", "bob", "carol"}) {
    const RunResult r = s.RequestAccess(user);
    const auto sends = OfType(r.trace, MsgType::kSendNode);
    ASSERT_EQ(sends.size(), 1u) << user;
    picked.push_back(sends[0].As<SendNode>()->service_node_addr);
  }
  EXPECT_EQ(picked, (std::vector<std::string>{"serv1", "serv2", "serv1"}));
  EXPECT_EQ(LastServiceList(s.trace(), "bob"), (ServiceSet{3, 4}));
  EXPECT_EQ(LastServiceList(s.trace(), "carol"), (ServiceSet{1, 2, 3, 4}));
}

TEST(DiscoveryTest, BusyNodeIsSkipped) {
  GridSession s(TwoServiceNodes());
  Enroll(s, "alice", StateSet{5, 6});
  s.Register("bob", StateSet{7});
  // Both requests start at the same tick; the second must not reuse serv1.
  s.Run({{0, UserAddress("alice"), Command{RequestAccessCmd{kDiscoveryAddress}}},
         {0, UserAddress("bob"), Command{RequestAccessCmd{kDiscoveryAddress}}}});
  std::set<std::string> picked;
  for (const auto& e : OfType(s.trace(), MsgType::kSendNode)) {
    picked.insert(e.As<SendNode>()->service_node_addr);
  }
  EXPECT_EQ(picked, (std::set<std::string>{"serv1", "serv2"}));
}

TEST(DiscoveryTest, StaleProofRejected) {
  GridSession s(SpigDeployment());
  Enroll(s, "alice", StateSet{5, 6});
  const Certificate cert = *s.user("alice")->own_cert();
  GetNode stale{"alice", cert.serial, 0, {}};
  const RunResult r = s.Run({Inject(UserAddress("alice"), kDiscoveryAddress, stale)});
  EXPECT_EQ(ErrorsTo(r.trace, UserAddress("alice")), std::vector<ErrorCode>{ErrorCode::kAuth});
}

// ------------------------------------------------------------ service node

TEST(ServiceNodeTest, ExpiredTicketIsNoSession) {
  GridSession s(SpigDeployment());
  Enroll(s, "alice", StateSet{5, 6});
  s.RequestAccess("alice");
  s.Run({{0, "serv1", Command{ExpireTicketsCmd{}}}});
  const RunResult r = s.Invoke("alice", 2);
  EXPECT_EQ(ErrorsTo(r.trace, UserAddress("alice")),
            std::vector<ErrorCode>{ErrorCode::kNoSession});
  EXPECT_TRUE(OfType(r.trace, MsgType::kServiceResult).empty());
}

TEST(ServiceNodeTest, TicketTtlElapsesIsNoSession) {
  Deployment dep = SpigDeployment();
  dep.ticket_ttl = 30;
  GridSession s(dep);
  Enroll(s, "alice", StateSet{5, 6});
  s.RequestAccess("alice");
  s.Run({{40, "cli", Command{SendCmd{kRepositoryAddress, GetCert{"serv1"}}}}});
  const RunResult r = s.Invoke("alice", 2);
  EXPECT_EQ(ErrorsTo(r.trace, UserAddress("alice")),
            std::vector<ErrorCode>{ErrorCode::kNoSession});
}

TEST(ServiceNodeTest, LateEffectiveStateStillMaps) {
  SimConfig cfg;
  cfg.faults.push_back({0, DelayLinkFault{kDiscoveryAddress, "serv1", 12}});
  GridSession s(SpigDeployment(), cfg);
  Enroll(s, "alice", StateSet{5, 6});
  const RunResult r = s.RequestAccess("alice");
  ASSERT_EQ(OfType(r.trace, MsgType::kSendEffState).size(), 1u);
  ASSERT_EQ(OfType(r.trace, MsgType::kServReq).size(), 1u);
  Tick eff_sent = 0, req_sent = 0;
  for (const auto& e : r.trace.entries) {
    if (e.envelope.type() == MsgType::kSendEffState) eff_sent = e.tick;
    if (e.envelope.type() == MsgType::kServReq) req_sent = e.tick;
  }
  // Delivery ticks: sent + 1, plus the injected delay on the discovery link.
  EXPECT_LT(req_sent + 1, eff_sent + 1 + 12);
  EXPECT_EQ(LastServiceList(r.trace, "alice"), ServiceSet{2});
  EXPECT_TRUE(ErrorsTo(r.trace, UserAddress("alice")).empty());
}

TEST(ServiceNodeTest, MissingEffectiveStateTimesOut) {
  SimConfig cfg;
  cfg.faults.push_back({0, DelayLinkFault{kDiscoveryAddress, "serv1", 500}});
  GridSession s(SpigDeployment(), cfg);
  Enroll(s, "alice", StateSet{5, 6});
  const RunResult r = s.RequestAccess("alice");
  EXPECT_EQ(ErrorsTo(r.trace, UserAddress("alice")),
            std::vector<ErrorCode>{ErrorCode::kNoSession});
  EXPECT_FALSE(LastServiceList(r.trace, "alice").has_value());
}

TEST(ServiceNodeTest, UnmappedInvokeIsNotAuthorized) {
  GridSession s(SpigDeployment());
  Enroll(s, "alice", StateSet{5, 6});
  s.RequestAccess("alice");
  const Ticket ticket = *s.user("alice")->ticket();
  const RunResult r =
      s.Run({Inject(UserAddress("alice"), "serv1", ServiceInvoke{1, ticket})});
  EXPECT_EQ(ErrorsTo(r.trace, UserAddress("alice")),
            std::vector<ErrorCode>{ErrorCode::kNotAuthorized});
}

TEST(ServiceNodeTest, ForeignTicketIsNoSession) {
  GridSession s(SpigDeployment());
  Enroll(s, "alice", StateSet{5, 6});
  s.RequestAccess("alice");
  Ticket forged = *s.user("alice")->ticket();
  forged.ticket_id = "ffffffffffffffffffffffffffffffff";
  const RunResult r =
      s.Run({Inject(UserAddress("alice"), "serv1", ServiceInvoke{2, forged})});
  EXPECT_EQ(ErrorsTo(r.trace, UserAddress("alice")),
            std::vector<ErrorCode>{ErrorCode::kNoSession});
}

TEST(ServiceNodeTest, ServReqForAnotherUsersTicketIsNoSession) {
  GridSession s(SpigDeployment());
  Enroll(s, "alice", StateSet{5, 6});
  s.Register("mallory", StateSet{1});
  s.RequestAccess("alice");
  const Ticket ticket = *s.user("alice")->ticket();
  const Certificate cert = *s.user("mallory")->own_cert();
  const RunResult r = s.Run(
      {Inject(UserAddress("mallory"), "serv1", ServReq{"mallory", ticket, cert.serial})});
  EXPECT_EQ(ErrorsTo(r.trace, UserAddress("mallory")),
            std::vector<ErrorCode>{ErrorCode::kNoSession});
  EXPECT_FALSE(LastServiceList(r.trace, "mallory").has_value());
}

// ------------------------------------------------------------ forwarding

struct ForwardCase {
  bool at_origin;
  bool at_next;
};

class ForwardingTest : public ::testing::TestWithParam<ForwardCase> {};

TEST_P(ForwardingTest, ResultIffMappedAtBothNodes) {
  const ForwardCase c = GetParam();
  const testing::ForwardOutcome out = testing::RunForwardCase(c.at_origin, c.at_next);
  ASSERT_EQ(out.chosen_node, "serv1");
  if (c.at_origin && c.at_next) {
    ASSERT_EQ(out.results.size(), 1u);
    EXPECT_EQ(out.results[0].As<ServiceResult>()->service_id, 3);
    EXPECT_TRUE(out.errors.empty());
  } else {
    EXPECT_TRUE(out.results.empty());
    EXPECT_EQ(out.errors, std::vector<ErrorCode>{ErrorCode::kNotAuthorized});
  }
  EXPECT_EQ(out.forwards, c.at_origin ? 1u : 0u);
}

INSTANTIATE_TEST_SUITE_P(AllCombinations, ForwardingTest,
                         ::testing::Values(ForwardCase{true, true}, ForwardCase{true, false},
                                           ForwardCase{false, true},
                                           ForwardCase{false, false}),
                         [](const auto& info) {
                           return std::string(info.param.at_origin ? "Origin" : "NoOrigin") +
                                  (info.param.at_next ? "Next" : "NoNext");
                         });

class ForwardTamperTest : public ::testing::Test {
 protected:
  ForwardTamperTest() : s_([] {
    Deployment dep = TwoServiceNodes();
    dep.service_nodes[0].forward_routes = {{2, "serv2"}};
    return dep;
  }()) {
    Enroll(s_, "alice", StateSet{5, 6});
    s_.RequestAccess("alice");
    s_.Invoke("alice", 2);
    const auto fwds = OfType(s_.trace(), MsgType::kForwardReq);
    EXPECT_EQ(fwds.size(), 1u);
    fwd_ = *fwds.back().As<ForwardReq>();
  }
  std::vector<ErrorCode> Send(const ForwardReq& fwd, const std::string& sender = "serv1") {
    const RunResult r = s_.Run({Inject(sender, "serv2", fwd)});
    return ErrorsTo(r.trace, sender);
  }
  GridSession s_;
  ForwardReq fwd_;
};

TEST_F(ForwardTamperTest, GenuineForwardSucceeds) {
  EXPECT_EQ(s_.user("alice")->last_result()->service_id, 2);
}

TEST_F(ForwardTamperTest, WidenedEffectiveStatesRejected) {
  ForwardReq fwd = fwd_;
  fwd.effective_states = StateSet{1};
  EXPECT_EQ(Send(fwd), std::vector<ErrorCode>{ErrorCode::kAuth});
}

TEST_F(ForwardTamperTest, ForgedTicketRejected) {
  ForwardReq fwd = fwd_;
  fwd.ticket.user = "mallory";
  EXPECT_EQ(Send(fwd), std::vector<ErrorCode>{ErrorCode::kAuth});
}

TEST_F(ForwardTamperTest, SpoofedOriginRejected) {
  EXPECT_EQ(Send(fwd_, "cli"), std::vector<ErrorCode>{ErrorCode::kAuth});
}

TEST_F(ForwardTamperTest, ExpiredTicketRejected) {
  s_.Run({{kDefaultTicketTtl + 5, "cli", Command{SendCmd{kRepositoryAddress, GetCert{"ca"}}}}});
  EXPECT_EQ(Send(fwd_), std::vector<ErrorCode>{ErrorCode::kNoSession});
}

// ------------------------------------------------------------ CA, monitor, repository

Certificate CertOf(GridSession& s, const std::string& subject) {
  const Envelope reply = s.FetchCert(subject);
  EXPECT_EQ(reply.type(), MsgType::kCertResponse) << EncodeEnvelope(reply);
  return reply.As<CertResponse>()->cert;
}

Crl CrlOf(GridSession& s, const std::string& subject) {
  return s.FetchCert(subject).As<CertResponse>()->crl;
}

TEST(MonitorTest, CitizenDefaultsToUserState) {
  GridSession s(SpigDeployment());
  Enroll(s, "citizen", std::nullopt);
  EXPECT_EQ(CertOf(s, "citizen").state_list, StateSet{8});
}

TEST(MonitorTest, SeededStatesAreCertified) {
  GridSession s(SpigDeployment());
  Enroll(s, "insp", StateSet{1});
  EXPECT_EQ(CertOf(s, "insp").state_list, StateSet{1});
  EXPECT_EQ(s.user("insp")->own_cert()->state_list, StateSet{1});
}

TEST(MonitorTest, DuplicateRegistrationRejected) {
  GridSession s(SpigDeployment());
  Enroll(s, "alice", StateSet{5, 6});
  const RunResult r = s.Register("alice", std::nullopt);
  EXPECT_EQ(ErrorsTo(r.trace, UserAddress("alice")),
            std::vector<ErrorCode>{ErrorCode::kDuplicateSubject});
}

TEST(MonitorTest, SetStateReissuesAndRevokes) {
  const Deployment dep = SpigDeployment();
  GridSession s(dep);
  Enroll(s, "alice", StateSet{5, 6});
  s.RequestAccess("alice");
  ASSERT_EQ(LastServiceList(s.trace(), "alice"), ServiceSet{2});
  const Certificate old_cert = CertOf(s, "alice");

  s.SetStates("alice", StateSet{2});
  const Certificate new_cert = CertOf(s, "alice");
  const Crl crl = CrlOf(s, "alice");
  EXPECT_EQ(new_cert.state_list, StateSet{2});
  EXPECT_GT(new_cert.serial, old_cert.serial);
  EXPECT_TRUE(crl.contains(old_cert.serial));
  EXPECT_FALSE(crl.contains(new_cert.serial));
  auto signer = MakeSigner(dep.signer);
  const Bytes ca_pub = NodeKeys(dep, kCaAddress).public_key;
  EXPECT_EQ(VerifyCertificate(old_cert, *signer, ca_pub, s.sim().now(), crl),
            CertStatus::kRevoked);
  EXPECT_EQ(VerifyCertificate(new_cert, *signer, ca_pub, s.sim().now(), crl), CertStatus::kOk);
  EXPECT_EQ(s.user("alice")->own_cert()->serial, new_cert.serial);

  const RunResult r = s.RequestAccess("alice");
  const auto eff = OfType(r.trace, MsgType::kSendEffState);
  ASSERT_EQ(eff.size(), 1u);
  EXPECT_EQ(eff[0].As<SendEffState>()->effective_states, StateSet{2});
  EXPECT_EQ(LastServiceList(r.trace, "alice"), ServiceSet{});
  s.Invoke("alice", 2);
  EXPECT_EQ(s.user("alice")->last_error()->code, ErrorCode::kNotAuthorized);
}

TEST(MonitorTest, IdenticalStatesStillReissue) {
  GridSession s(SpigDeployment());
  Enroll(s, "alice", StateSet{5, 6});
  const Certificate before = CertOf(s, "alice");
  s.SetStates("alice", StateSet{5, 6});
  const Certificate after = CertOf(s, "alice");
  EXPECT_GT(after.serial, before.serial);
  EXPECT_EQ(after.state_list, before.state_list);
  EXPECT_TRUE(CrlOf(s, "alice").contains(before.serial));
}

TEST(MonitorTest, OutOfRangeStateRejected) {
  GridSession s(SpigDeployment());
  Enroll(s, "alice", StateSet{5, 6});
  const RunResult r = s.SetStates("alice", StateSet{9});
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].code, ErrorCode::kRange);
  EXPECT_TRUE(r.trace.entries.empty());
  EXPECT_EQ(CertOf(s, "alice").state_list, (StateSet{5, 6}));
}

TEST(MonitorTest, UnknownSubjectRejected) {
  GridSession s(SpigDeployment());
  s.Bootstrap();
  const RunResult r = s.SetStates("nobody", StateSet{2});
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].code, ErrorCode::kUnknownSubject);
}

TEST(MonitorTest, RevokedUserIsRejectedAtDiscovery) {
  GridSession s(SpigDeployment());
  Enroll(s, "alice", StateSet{5, 6});
  s.Revoke("alice");
  const RunResult r = s.RequestAccess("alice");
  EXPECT_EQ(ErrorsTo(r.trace, UserAddress("alice")), std::vector<ErrorCode>{ErrorCode::kCert});
  EXPECT_TRUE(OfType(r.trace, MsgType::kSendNode).empty());
}

TEST(RepositoryTest, UnknownSubjectIsError) {
  GridSession s(SpigDeployment());
  s.Bootstrap();
  const Envelope reply = s.FetchCert("ghost");
  ASSERT_EQ(reply.type(), MsgType::kError);
  EXPECT_EQ(reply.As<ErrorMsg>()->code, ErrorCode::kNotFound);
}

// ------------------------------------------------------------ envelopes

TEST(EnvelopeInvariantTest, MsgIdsUniquePerSenderAndRepliesCorrelate) {
  GridSession s(TwoServiceNodes());
  Enroll(s, "alice", StateSet{5, 6});
  s.Register("bob", StateSet{7});
  s.RequestAccess("alice");
  s.RequestAccess("bob");
  s.Invoke("alice", 2);
  s.Invoke("bob", 4);
  s.SetStates("bob", StateSet{2});
  std::map<std::string, std::set<std::uint64_t>> seen;
  for (const auto& e : s.trace().entries) {
    EXPECT_TRUE(seen[e.envelope.sender].insert(e.envelope.msg_id).second)
        << e.envelope.sender << " reused " << e.envelope.msg_id;
  }
  for (const auto& e : s.trace().entries) {
    if (!e.envelope.correlation_id) continue;
    EXPECT_TRUE(seen[e.envelope.recipient].count(*e.envelope.correlation_id))
        << EncodeEnvelope(e.envelope);
  }
  EXPECT_EQ(s.user("bob")->last_result()->service_id, 4);
}

}  // namespace
}  // namespace cmms

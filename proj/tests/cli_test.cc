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

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "test_util.h"

namespace cmms {
namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  CliTest() : dir_(testing::ScratchDir("cli")) {}
  ~CliTest() override { std::filesystem::remove_all(dir_); }

  CliResult Cli(const std::string& args) {
    const auto err_path = dir_ / "stderr.txt";
    const std::string cmd = std::string("cd '") + dir_.string() + "' && '" + CMMS_CLI_PATH +
                            "' " + args + " 2>'" + err_path.string() + "'";
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = Slurp(err_path);
    return r;
  }

  void Init() { ASSERT_EQ(Cli("init --profile spig --out grid").exit_code, 0); }

  std::filesystem::path dir_;
};

bool HasLine(const std::string& text, const std::string& line) {
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (l == line) return true;
  }
  return false;
}

TEST_F(CliTest, InitWritesDeployment) {
  Init();
  EXPECT_TRUE(std::filesystem::exists(dir_ / "grid" / "deployment.json"));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "grid" / "policies" / "serv1.policy"));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "grid" / "keys" / "ca.pub"));
  const CliResult again = Cli("init --profile spig --out grid");
  EXPECT_EQ(again.exit_code, 2);
  EXPECT_NE(again.err.find("E_EXISTS"), std::string::npos) << again.err;
  EXPECT_EQ(Cli("init --profile spig --out grid --force").exit_code, 0);
}

TEST_F(CliTest, UnknownProfileIsError) {
  EXPECT_EQ(Cli("init --profile nope --out grid").exit_code, 2);
}

TEST_F(CliTest, PolicyShowListsPaperEntries) {
  Init();
  const CliResult r = Cli("policy show -d grid");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(HasLine(r.out, "7: 3,4")) << r.out;
  EXPECT_TRUE(HasLine(r.out, "5: 2,3,4  (raw 94)")) << r.out;
  EXPECT_TRUE(HasLine(r.out, "6: 2  (raw 98)")) << r.out;
}

TEST_F(CliTest, CitizenGetsUserState) {
  Init();
  ASSERT_EQ(Cli("register -d grid --user citizen").exit_code, 0);
  const CliResult r = Cli("show-cert -d grid --user citizen");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("\"state_list\":[8]"), std::string::npos) << r.out;
  EXPECT_TRUE(HasLine(r.out, "states: {8} (User)")) << r.out;
  EXPECT_TRUE(HasLine(r.out, "status: Ok")) << r.out;
  const CliResult dup = Cli("register -d grid --user citizen");
  EXPECT_EQ(dup.exit_code, 2);
  EXPECT_NE(dup.err.find("E_DUPLICATE_SUBJECT"), std::string::npos) << dup.err;
}

TEST_F(CliTest, SetStateReissuesAndListsOldSerial) {
  Init();
  ASSERT_EQ(Cli("register -d grid --user insp --states 1,4").exit_code, 0);
  const CliResult before = Cli("show-cert -d grid --user insp");
  ASSERT_TRUE(HasLine(before.out, "serial: 3")) << before.out;
  ASSERT_EQ(Cli("set-state -d grid --user insp --states 2").exit_code, 0);
  const CliResult after = Cli("show-cert -d grid --user insp");
  EXPECT_TRUE(HasLine(after.out, "states: {2} (Suspended)")) << after.out;
  EXPECT_FALSE(HasLine(after.out, "serial: 3")) << after.out;
  EXPECT_TRUE(HasLine(after.out, "crl: [3]")) << after.out;
}

TEST_F(CliTest, OutOfRangeStateIsError) {
  Init();
  ASSERT_EQ(Cli("register -d grid --user insp").exit_code, 0);
  const CliResult r = Cli("set-state -d grid --user insp --states 9");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("E_RANGE"), std::string::npos) << r.err;
}

TEST_F(CliTest, RequestPrintsWorkedExampleService) {
  Init();
  ASSERT_EQ(Cli("register -d grid --user alice --states 5,6").exit_code, 0);
  const CliResult r = Cli("request -d grid --user alice --invoke 2");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "2 FIR Records");
  EXPECT_NE(r.out.find("result 2: "), std::string::npos) << r.out;
  EXPECT_EQ(Cli("request -d grid --user alice").out, "2 FIR Records\n");
}

TEST_F(CliTest, RequestStateSeven) {
  Init();
  ASSERT_EQ(Cli("register -d grid --user ravi --states 7").exit_code, 0);
  EXPECT_EQ(Cli("request -d grid --user ravi").out,
            "3 Search for INV status\n4 ADD FIR/Criminal Records\n");
}

TEST_F(CliTest, SuspendedUserGetsNothing) {
  Init();
  ASSERT_EQ(Cli("register -d grid --user sus --states 1").exit_code, 0);
  ASSERT_EQ(Cli("set-state -d grid --user sus --states 2").exit_code, 0);
  EXPECT_EQ(Cli("request -d grid --user sus").out, "(no services)\n");
  const CliResult r = Cli("request -d grid --user sus --invoke 1");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("E_NOT_AUTHORIZED"), std::string::npos) << r.err;
}

TEST_F(CliTest, RevokedUserIsCertError) {
  Init();
  ASSERT_EQ(Cli("register -d grid --user gone --states 1").exit_code, 0);
  ASSERT_EQ(Cli("revoke -d grid --user gone").exit_code, 0);
  const CliResult r = Cli("request -d grid --user gone");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("E_CERT"), std::string::npos) << r.err;
}

TEST_F(CliTest, UnregisteredUserIsError) {
  Init();
  EXPECT_EQ(Cli("request -d grid --user ghost").exit_code, 2);
  EXPECT_EQ(Cli("show-cert -d grid --user ghost").exit_code, 2);
}

TEST_F(CliTest, RequestIsDeterministic) {
  Init();
  ASSERT_EQ(Cli("register -d grid --user alice --states 5,6").exit_code, 0);
  ASSERT_EQ(Cli("request -d grid --user alice --invoke 2 --trace a.trace").exit_code, 0);
  ASSERT_EQ(Cli("request -d grid --user alice --invoke 2 --trace b.trace").exit_code, 0);
  EXPECT_EQ(Slurp(dir_ / "a.trace"), Slurp(dir_ / "b.trace"));
  const CliResult r = Cli("trace-diff a.trace b.trace");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "identical\n");
}

TEST_F(CliTest, TraceDiffReportsDivergence) {
  Init();
  ASSERT_EQ(Cli("register -d grid --user alice --states 5,6").exit_code, 0);
  ASSERT_EQ(Cli("register -d grid --user bob --states 7").exit_code, 0);
  ASSERT_EQ(Cli("request -d grid --user alice --trace a.trace").exit_code, 0);
  ASSERT_EQ(Cli("request -d grid --user bob --trace b.trace").exit_code, 0);
  const CliResult r = Cli("trace-diff a.trace b.trace");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("< "), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("> "), std::string::npos) << r.out;
  EXPECT_EQ(Cli("trace-diff a.trace missing.trace").exit_code, 2);
}

TEST_F(CliTest, BundledScenariosPassFromFreshInit) {
  Init();
  const std::string scenarios = (testing::SourceDir() / "scenarios").string();
  const CliResult r = Cli("run-scenario --all --dir '" + scenarios + "' -d grid");
  EXPECT_EQ(r.exit_code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS spig_happy"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("PASS suspend_midflight"), std::string::npos) << r.out;
}

TEST_F(CliTest, ScenarioGoldenMismatchExitsOne) {
  const auto src = testing::SourceDir() / "scenarios";
  std::filesystem::copy_file(src / "spig_happy.scn", dir_ / "happy.scn");
  std::string golden = Slurp(src / "spig_happy.trace");
  const std::size_t at = golden.find("\"msg_id\":1");
  ASSERT_NE(at, std::string::npos);
  golden.replace(at, 10, "\"msg_id\":7");
  std::ofstream(dir_ / "spig_happy.trace", std::ios::binary) << golden;
  const CliResult r = Cli("run-scenario happy.scn");
  EXPECT_EQ(r.exit_code, 1) << r.out << r.err;
  EXPECT_NE(r.out.find("FAIL spig_happy"), std::string::npos) << r.out;
}

TEST_F(CliTest, MalformedScenarioIsError) {
  std::ofstream(dir_ / "bad.scn") << "{\"name\": 3}";
  EXPECT_EQ(Cli("run-scenario bad.scn").exit_code, 2);
  EXPECT_EQ(Cli("run-scenario missing.scn").exit_code, 2);
}

TEST_F(CliTest, SocketTransportMatchesSimulatedOutput) {
  Init();
  ASSERT_EQ(Cli("register -d grid --user alice --states 5,6").exit_code, 0);
  const CliResult sim = Cli("request -d grid --user alice --invoke 2");
  const CliResult sock = Cli("request -d grid --user alice --invoke 2 --transport socket");
  ASSERT_EQ(sock.exit_code, 0) << sock.err;
  EXPECT_EQ(sock.out, sim.out);
}

}  // namespace
}  // namespace cmms

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

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "cmms/error.h"
#include "cmms/policy.h"
#include "test_util.h"

namespace cmms {
namespace {

GridConfig Wide() { return GridConfig{16, 16, 16}; }

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const CmmsError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no CmmsError thrown";
  return ErrorCode::kConfig;
}

TEST(IdSetTest, MaskIsLsbFirst) {
  EXPECT_EQ((StateSet{1}).mask(), 1u);
  EXPECT_EQ((StateSet{1, 4}).mask(), 0b1001u);
  EXPECT_EQ(StateSet::FromMask(0b1001), (StateSet{1, 4}));
  EXPECT_EQ(StateSet::Range(1, 12).size(), 12u);
  EXPECT_EQ((StateSet{3, 1}).ToString(), "{1,3}");
  EXPECT_EQ(CodeOf([] { StateSet s; s.insert(0); }), ErrorCode::kRange);
  EXPECT_EQ(CodeOf([] { StateSet s; s.insert(65); }), ErrorCode::kRange);
}

TEST(GridConfigTest, Validate) {
  EXPECT_NO_THROW(GridConfig::Spig().Validate());
  EXPECT_EQ(CodeOf([] { GridConfig{8, 9, 8}.Validate(); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { GridConfig{0, 4, 8}.Validate(); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { GridConfig{8, 0, 8}.Validate(); }), ErrorCode::kConfig);
  EXPECT_EQ(GridConfig::Spig().service_mask(), 15u);
  EXPECT_EQ(GridConfig::Spig().entry_mask(), 255u);
}

TEST(FilterTest, KeepsOnlyConsideredStates) {
  EXPECT_EQ(Filter(StateSet{1, 4, 15}, StateSet::Range(1, 12)), (StateSet{1, 4}));
  EXPECT_EQ(Filter(StateSet{}, StateSet::Range(1, 12)), StateSet{});
}

TEST(ImposeTest, AddsImposedStates) {
  EXPECT_EQ(Impose(StateSet{1, 4}, StateSet{11, 12}), (StateSet{1, 4, 11, 12}));
  EXPECT_EQ(Impose(StateSet{2, 9}, StateSet{}), (StateSet{2, 9}));
}

TEST(EffectiveStateTest, FilterThenImpose) {
  VoFilterConfig cfg{StateSet::Range(1, 12), {{"ravi", StateSet{11, 12}}}};
  cfg.Validate();
  EXPECT_EQ(EffectiveState(StateSet{1, 4, 15}, cfg, "ravi"), (StateSet{1, 4, 11, 12}));
  EXPECT_EQ(EffectiveState(StateSet{1, 4, 15}, cfg, "someone"), (StateSet{1, 4}));
  VoFilterConfig empty{StateSet::Range(1, 12), {}};
  EXPECT_EQ(EffectiveState(StateSet{}, empty, "x"), StateSet{});
}

TEST(VoFilterConfigTest, ImposedOutsideConsideredRejected) {
  VoFilterConfig cfg{StateSet::Range(1, 12), {{"u", StateSet{13}}}};
  EXPECT_EQ(CodeOf([&] { cfg.Validate(); }), ErrorCode::kConfig);
}

TEST(EncodeTest, Examples) {
  const GridConfig spig = GridConfig::Spig();
  EXPECT_EQ(EncodeServices(ServiceSet{2, 3, 4}, spig).raw, 14u);
  EXPECT_EQ(EncodeServices(ServiceSet{}, spig).raw, 0u);
  EXPECT_EQ(EncodeServices(ServiceSet{3, 4}, spig).raw, 12u);
}

TEST(DecodeTest, WorkedExampleEntries) {
  const GridConfig spig = GridConfig::Spig();
  EXPECT_EQ(DecodeServices(PolicyEntry{94}, spig), (ServiceSet{2, 3, 4}));
  EXPECT_EQ(DecodeServices(PolicyEntry{98}, spig), (ServiceSet{2}));
  EXPECT_EQ(DecodeServices(PolicyEntry{0}, spig), ServiceSet{});
}

TEST(LookupTest, DenyByDefault) {
  PolicyTable t(GridConfig::Spig());
  t.Set(StateId{5}, PolicyEntry{94});
  EXPECT_EQ(Lookup(t, StateId{5}), (ServiceSet{2, 3, 4}));
  EXPECT_EQ(Lookup(t, StateId{6}), ServiceSet{});
}

TEST(PolicyTableTest, RangeChecks) {
  PolicyTable t(GridConfig::Spig());
  EXPECT_EQ(CodeOf([&] { t.Set(StateId{9}, PolicyEntry{1}); }), ErrorCode::kRange);
  EXPECT_EQ(CodeOf([&] { t.Set(StateId{1}, PolicyEntry{256}); }), ErrorCode::kRange);
}

TEST(PolicyMapTest, WorkedExample) {
  PolicyTable t(GridConfig::Spig());
  t.Set(StateId{5}, PolicyEntry{94});
  t.Set(StateId{6}, PolicyEntry{98});
  EXPECT_EQ(PolicyMap(StateSet{5, 6}, t), (ServiceSet{2}));
}

TEST(PolicyMapTest, EmptyEffectiveMapsToNothing) {
  PolicyTable t(GridConfig::Spig());
  t.Set(StateId{1}, PolicyEntry{15});
  EXPECT_EQ(PolicyMap(StateSet{}, t), ServiceSet{});
}

TEST(PolicyMapTest, StateSeven) {
  const GridConfig spig = GridConfig::Spig();
  PolicyTable t(spig);
  t.Set(StateId{7}, EncodeServices(ServiceSet{3, 4}, spig));
  EXPECT_EQ(PolicyMap(StateSet{7}, t), (ServiceSet{3, 4}));
}

TEST(ParsePolicyTest, Examples) {
  const GridConfig spig = GridConfig::Spig();
  EXPECT_EQ(ParsePolicy("7: 3,4", spig), (ParsedPolicy{StateId{7}, ServiceSet{3, 4}}));
  EXPECT_EQ(ParsePolicy("5: 2,3,4", spig), (ParsedPolicy{StateId{5}, ServiceSet{2, 3, 4}}));
  EXPECT_EQ(ParsePolicy("  7 :3 , 4  ", spig), (ParsedPolicy{StateId{7}, ServiceSet{3, 4}}));
}

TEST(ParsePolicyTest, Errors) {
  const GridConfig spig = GridConfig::Spig();
  for (const char* bad : {"1:", "7 3,4", "x: 1", "7: 3,", "7: ,3", "", ": 1", "7: 3 4"}) {
    EXPECT_EQ(CodeOf([&] { ParsePolicy(bad, spig); }), ErrorCode::kParse) << bad;
  }
  EXPECT_EQ(CodeOf([&] { ParsePolicy("9: 1", spig); }), ErrorCode::kRange);
  EXPECT_EQ(CodeOf([&] { ParsePolicy("0: 1", spig); }), ErrorCode::kRange);
  EXPECT_EQ(CodeOf([&] { ParsePolicy("1: 5", spig); }), ErrorCode::kRange);
  EXPECT_EQ(CodeOf([&] { ParsePolicy("1: 2,2", spig); }), ErrorCode::kDup);
}

TEST(RenderPolicyTest, Format) {
  EXPECT_EQ(RenderPolicy(StateId{7}, ServiceSet{4, 3}), "7: 3,4");
}

TEST(PolicyFileTest, LoadsDerivedEntries) {
  const auto t = ParsePolicyText("# sample\n5: 2,3,4\n\n6: 2\n", GridConfig::Spig());
  ASSERT_EQ(t.entries().size(), 2u);
  EXPECT_EQ(t.Get(StateId{5})->raw, 14u);
  EXPECT_EQ(t.Get(StateId{6})->raw, 2u);
}

TEST(PolicyFileTest, EmptyAndDuplicate) {
  EXPECT_TRUE(ParsePolicyText("", GridConfig::Spig()).empty());
  EXPECT_EQ(CodeOf([] { ParsePolicyText("5: 1\n5: 2\n", GridConfig::Spig()); }),
            ErrorCode::kDupState);
}

TEST(PolicyFileTest, ErrorsCarryLineNumbers) {
  try {
    ParsePolicyText("1: 1\n# c\n2: x\n", GridConfig::Spig());
    FAIL();
  } catch (const CmmsError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(e.detail().find("line 3"), std::string::npos) << e.detail();
  }
}

TEST(PolicyFileTest, RoundTripPreservesHighBits) {
  PolicyTable t(GridConfig::Spig());
  t.Set(StateId{1}, PolicyEntry{15});
  t.Set(StateId{5}, PolicyEntry{94});
  t.Set(StateId{6}, PolicyEntry{98});
  t.Set(StateId{2}, PolicyEntry{0});
  const auto dir = testing::ScratchDir("policy");
  SavePolicyFile(t, dir / "p.policy");
  EXPECT_EQ(LoadPolicyFile(dir / "p.policy", GridConfig::Spig()), t);
  std::filesystem::remove_all(dir);
}

TEST(PolicyFileTest, MissingFileIsIo) {
  EXPECT_EQ(CodeOf([] { LoadPolicyFile("/nonexistent/p.policy", GridConfig::Spig()); }),
            ErrorCode::kIo);
}

}  // namespace
}  // namespace cmms

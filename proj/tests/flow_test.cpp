// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace mtun {
namespace {

using namespace std::chrono_literals;

struct FlowFixture : ::testing::Test {
    std::mt19937_64 rng{3};
    MacAddress src = testing::random_mac(rng);
    MacAddress dst = testing::random_mac(rng);
    Sci sci{src, 1};
    HeaderData unicast{dst, src, sci, 0};
    HeaderData broadcast{MacAddress::broadcast(), src, sci, 0};
    Bidf uid = testing::random_bidf(rng);
    Bidf bid = testing::random_bidf(rng);
};

TEST_F(FlowFixture, ClassifyUsesSaAndDestination) {
    MacsecFrame f = testing::random_frame(rng, 60);
    const FlowKey k = classify(f);
    EXPECT_EQ(k.sci, f.sectag.sci);
    EXPECT_EQ(k.an, f.sectag.tci.an);
    EXPECT_EQ(k.dst, f.dst);
    const HeaderData h = header_data_of(f);
    EXPECT_EQ(h.src, f.src);
    EXPECT_EQ(h.flow_key(), k);
    f.sectag.pn += 1;
    EXPECT_EQ(classify(f), k);
}

TEST_F(FlowFixture, UplinkInsertFindExpire) {
    UplinkTable t;
    UplinkFlowEntry e{uid, bid, 10s, {}};
    t.insert({sci, 0}, e, 1s);
    EXPECT_NE(t.find({sci, 0}), nullptr);
    EXPECT_EQ(t.find({sci, 1}), nullptr);
    EXPECT_THROW(t.insert({sci, 1}, UplinkFlowEntry{uid, bid, 1s, {}}, 1s), std::invalid_argument);
    EXPECT_THROW(t.insert({sci, 1}, UplinkFlowEntry{uid, uid, 5s, {}}, 1s), std::invalid_argument);
    t.insert({Sci{src, 2}, 0}, UplinkFlowEntry{bid, uid, 20s, {}}, 1s);
    EXPECT_TRUE(t.expire(10s).empty());
    auto gone = t.expire(11s);
    ASSERT_EQ(gone.size(), 1u);
    EXPECT_EQ(gone[0].first.sci, sci);
    EXPECT_EQ(t.size(), 1u);
}

TEST_F(FlowFixture, UplinkLegsAreFoundByDestinationAndSource) {
    UplinkFlowEntry e{uid, bid, 10s, {}};
    e.legs.push_back({dst, src, uid, 1, {}});
    e.legs.push_back({MacAddress::broadcast(), src, bid, 3, {}});
    EXPECT_EQ(e.find_leg(dst, src)->bidf, uid);
    EXPECT_TRUE(e.find_leg(MacAddress::broadcast(), src)->is_group());
    EXPECT_EQ(e.find_leg(src, dst), nullptr);
}

TEST_F(FlowFixture, BindRequiresSameSaAndDistinctDestinations) {
    DownlinkFlowEntry a(uid, unicast, 1, 4), b(bid, broadcast, 1, 4);
    EXPECT_TRUE(bind(a, b));
    EXPECT_EQ(a.bound, std::vector<Bidf>{bid});
    EXPECT_TRUE(bind(a, b));
    EXPECT_EQ(a.bound.size(), 1u);
    unbind(a, b);
    EXPECT_TRUE(a.bound.empty() && b.bound.empty());

    DownlinkFlowEntry same_dst(bid, unicast, 1, 4);
    EXPECT_FALSE(bind(a, same_dst));
    HeaderData other = broadcast;
    other.an = 1;
    DownlinkFlowEntry other_an(bid, other, 1, 4);
    EXPECT_FALSE(bind(a, other_an));
}

TEST_F(FlowFixture, BoundFlowsConsumeEachOthersPns) {
    DownlinkFlowTable t;
    auto& u = t.insert(uid, unicast, 1, 8, 0s);
    auto& b = t.insert(bid, broadcast, 1, 8, 0s);
    (void)u;
    EXPECT_EQ(b.bound, std::vector<Bidf>{uid});
    int steps = 0;
    auto count = [&](DownlinkFlowEntry&, const WindowStep&) { ++steps; };
    EXPECT_EQ(t.accept(*t.find(uid), 5, 1s, count), WindowResult::Accept);
    EXPECT_EQ(steps, 2);
    EXPECT_TRUE(t.find(bid)->window.is_seen(5));
    EXPECT_EQ(t.accept(*t.find(bid), 5, 1s, count), WindowResult::Replay);
    EXPECT_EQ(t.find(uid)->last_activity, 1s);
    EXPECT_EQ(t.find(bid)->last_activity, 0s);
}

TEST_F(FlowFixture, UnboundFlowsAreIndependent) {
    DownlinkFlowTable t;
    t.set_binding_enabled(false);
    t.insert(uid, unicast, 1, 8, 0s);
    t.insert(bid, broadcast, 1, 8, 0s);
    auto none = [](DownlinkFlowEntry&, const WindowStep&) {};
    EXPECT_EQ(t.accept(*t.find(uid), 5, 1s, none), WindowResult::Accept);
    EXPECT_FALSE(t.find(bid)->window.is_seen(5));
    EXPECT_EQ(t.accept(*t.find(bid), 5, 1s, none), WindowResult::Accept);
}

TEST_F(FlowFixture, EraseUnbindsAndReinsertResets) {
    DownlinkFlowTable t;
    t.insert(uid, unicast, 1, 8, 0s);
    t.insert(bid, broadcast, 1, 8, 0s);
    EXPECT_TRUE(t.erase(uid));
    EXPECT_FALSE(t.erase(uid));
    EXPECT_TRUE(t.find(bid)->bound.empty());
    auto none = [](DownlinkFlowEntry&, const WindowStep&) {};
    t.accept(*t.find(bid), 3, 1s, none);
    t.insert(bid, broadcast, 100, 8, 2s);
    EXPECT_EQ(t.find(bid)->window.lowest(), 100u);
    EXPECT_EQ(t.size(), 1u);
}

TEST_F(FlowFixture, IdleFlowsAreSortedAndTimed) {
    DownlinkFlowTable t;
    t.insert(uid, unicast, 1, 8, 0s);
    t.insert(bid, broadcast, 1, 8, 5s);
    EXPECT_TRUE(t.idle_flows(10s, 10s).empty());
    EXPECT_EQ(t.idle_flows(11s, 10s), std::vector<Bidf>{uid});
    auto both = t.idle_flows(20s, 10s);
    EXPECT_TRUE(std::is_sorted(both.begin(), both.end()));
    EXPECT_EQ(both.size(), 2u);
}

}  // namespace
}  // namespace mtun

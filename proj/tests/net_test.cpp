// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <poll.h>
#include <sys/socket.h>

#include <thread>

#include "mtun/net/config.hpp"
#include "mtun/net/runtime.hpp"
#include "test_util.hpp"

namespace mtun::net {
namespace {

using namespace std::chrono_literals;

std::optional<Bytes> read_frame(const Fd& fd, Duration timeout) {
    pollfd p{fd.get(), POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(timeout).count())) <= 0)
        return std::nullopt;
    Bytes buf(2048);
    const ssize_t n = ::recv(fd.get(), buf.data(), buf.size(), 0);
    if (n <= 0) return std::nullopt;
    buf.resize(static_cast<std::size_t>(n));
    return buf;
}

// Two runtimes on 127.0.0.1, each serving its loop on a thread.
struct Pair {
    std::unique_ptr<GatewayRuntime> rt[2];
    Fd lan[2];
    std::thread th[2];
    std::atomic<bool> stop{false};
    std::vector<std::string> stats;
    std::mutex stats_mu;

    explicit Pair(Scheme scheme, Duration stats_interval = {}) {
        for (int i = 0; i < 2; ++i) {
            auto lp = make_lan_pair();
            EXPECT_TRUE(lp);
            RuntimeConfig rc;
            rc.gateway.scheme = scheme;
            rc.gateway.window = 32;
            rc.tunnel_listen = GatewayId{0x7F000001u, 0};
            rc.mgmt_listen = GatewayId{0x7F000001u, 0};
            rc.tick = 5ms;
            rc.reconnect_interval = 20ms;
            rc.stats_interval = stats_interval;
            auto r = GatewayRuntime::bind(rc, std::move(lp.value().port));
            EXPECT_TRUE(r) << r.error();
            rt[i] = std::move(r.value());
            lan[i] = std::move(lp.value().driver);
        }
        rt[0]->on_stats = [this](const std::string& line) {
            std::lock_guard lock(stats_mu);
            stats.push_back(line);
        };
        for (int i = 0; i < 2; ++i) rt[i]->add_peer({rt[1 - i]->tunnel_endpoint(), rt[1 - i]->mgmt_endpoint()});
        for (int i = 0; i < 2; ++i) {
            rt[i]->start();
            th[i] = std::thread([this, i] { rt[i]->run(stop); });
        }
    }
    ~Pair() { join(); }
    void join() {
        stop = true;
        for (auto& t : th)
            if (t.joinable()) t.join();
    }
    void send(int side, ByteView frame) { ::send(lan[side].get(), frame.data(), frame.size(), 0); }
};

TEST(NetPeer, Parse) {
    auto p = parse_peer("10.0.0.2:4790");
    ASSERT_TRUE(p);
    EXPECT_EQ(p->tunnel.to_string(), "10.0.0.2:4790");
    EXPECT_EQ(p->mgmt.to_string(), "10.0.0.2:4791");
    p = parse_peer("10.0.0.2:4790,10.0.0.9:5000");
    ASSERT_TRUE(p);
    EXPECT_EQ(p->mgmt.to_string(), "10.0.0.9:5000");
    EXPECT_FALSE(parse_peer("10.0.0.2"));
    EXPECT_FALSE(parse_peer("10.0.0.2:4790,nope"));
}

TEST(NetConfig, AppliesPresentKeys) {
    const auto j = nlohmann::json::parse(R"({
        "scheme": "enc", "window": 128, "lan": "tap:t0",
        "tunnel_listen": "127.0.0.1:5000", "stats_interval_s": 2.5,
        "retransmit_initial_ms": 500,
        "peers": ["10.0.0.2:4790", {"tunnel": "10.0.0.3:4790", "mgmt": "10.0.0.3:6000"}]
    })");
    auto s = apply_json(default_setup(), j);
    ASSERT_TRUE(s) << s.error();
    const auto& g = s->runtime.gateway;
    EXPECT_EQ(g.scheme, Scheme::Enc);
    EXPECT_EQ(g.window, 128u);
    EXPECT_EQ(g.retransmit_initial, 500ms);
    EXPECT_EQ(g.queue_limit, GatewayConfig{}.queue_limit);
    EXPECT_EQ(s->lan, "tap:t0");
    EXPECT_EQ(s->runtime.tunnel_listen.to_string(), "127.0.0.1:5000");
    EXPECT_EQ(s->runtime.mgmt_listen.port, kDefaultMgmtPort);
    EXPECT_EQ(s->runtime.stats_interval, 2500ms);
    ASSERT_EQ(s->runtime.peers.size(), 2u);
    EXPECT_EQ(s->runtime.peers[0].mgmt.to_string(), "10.0.0.2:4791");
    EXPECT_EQ(s->runtime.peers[1].mgmt.to_string(), "10.0.0.3:6000");
}

TEST(NetConfig, RejectsBadValues) {
    for (const char* text : {R"([])", R"({"scheme": "aes"})", R"({"window": "big"})",
                             R"({"tunnel_listen": "nowhere"})", R"({"peers": ["10.0.0.2"]})",
                             R"({"peers": [{"tunnel": "10.0.0.2:1", "mgmt": "x"}]})"}) {
        EXPECT_FALSE(apply_json(default_setup(), nlohmann::json::parse(text))) << text;
    }
}

TEST(NetLan, OpenSpecs) {
    EXPECT_FALSE(open_lan(""));
    EXPECT_FALSE(open_lan("udp:127.0.0.1:0"));
    EXPECT_FALSE(open_lan("udp:x/y"));
    EXPECT_FALSE(open_lan("raw:no-such-interface-0"));
    auto udp = open_lan("udp:127.0.0.1:0/127.0.0.1:9");
    ASSERT_TRUE(udp) << udp.error();
    EXPECT_GE(udp.value()->fd(), 0);
}

class NetSchemes : public ::testing::TestWithParam<Scheme> {};

TEST_P(NetSchemes, FramesCrossBothWays) {
    Pair pair(GetParam());
    std::mt19937_64 rng(5);
    const Key128 key = testing::random_key(rng);
    const MacAddress a = testing::random_mac(rng), b = testing::random_mac(rng);
    std::uint32_t pn_a = 1, pn_b = 1;

    // The first frames wait for the announce (and key) to be acknowledged.
    int delivered = 0;
    for (int i = 0; i < 200 && delivered < 50; ++i) {
        const Bytes f = testing::protected_frame(rng, key, Sci{a, 1}, 0, pn_a++, 100, b);
        pair.send(0, f);
        if (auto got = read_frame(pair.lan[1], 500ms)) {
            ++delivered;
            EXPECT_EQ(got->size(), f.size());
        }
    }
    EXPECT_GE(delivered, 50);
    const Bytes reply = testing::protected_frame(rng, key, Sci{b, 1}, 0, pn_b++, 60, a);
    bool back = false;
    for (int i = 0; i < 20 && !back; ++i) {
        pair.send(1, reply);
        auto got = read_frame(pair.lan[0], 200ms);
        back = got && *got == reply;
    }
    EXPECT_TRUE(back);
    pair.join();
    const GatewayStats s = pair.rt[1]->gateway().snapshot_stats();
    EXPECT_GE(s.frames_reconstructed, 50u);
    EXPECT_EQ(s.drop(DropReason::UnknownPeer), 0u);
}

INSTANTIATE_TEST_SUITE_P(Schemes, NetSchemes, ::testing::Values(Scheme::Naive, Scheme::Idf, Scheme::Enc, Scheme::FullEnc),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(NetMgmt, ConnectionWithoutHelloIsClosed) {
    Pair pair(Scheme::Idf);
    auto s = TcpStream::connect(pair.rt[0]->mgmt_endpoint());
    ASSERT_TRUE(s);
    TcpStream stream = std::move(s.value());
    pollfd p{stream.fd(), POLLOUT, 0};
    ASSERT_EQ(::poll(&p, 1, 1000), 1);
    ASSERT_TRUE(stream.finish_connect());
    stream.write(encode(FlowExpireMsg{}));  // a valid message, but not a HELLO
    ASSERT_TRUE(stream.flush());
    bool closed = false;
    for (int i = 0; i < 50 && !closed; ++i) {
        pollfd r{stream.fd(), POLLIN, 0};
        ::poll(&r, 1, 20);
        Bytes sink;
        closed = !stream.read(sink);
    }
    EXPECT_TRUE(closed);
}

TEST(NetMgmt, StatsLinesFollowTheHeader) {
    Pair pair(Scheme::Idf, 20ms);
    std::this_thread::sleep_for(150ms);
    pair.join();
    std::lock_guard lock(pair.stats_mu);
    ASSERT_GE(pair.stats.size(), 2u);
    EXPECT_EQ(pair.stats[0], GatewayStats::csv_header());
    auto commas = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
    for (std::size_t i = 1; i < pair.stats.size(); ++i) EXPECT_EQ(commas(pair.stats[i]), commas(pair.stats[0]));
}

}  // namespace
}  // namespace mtun::net

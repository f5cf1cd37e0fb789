// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "mtun/fullenc.hpp"
#include "test_util.hpp"

namespace mtun {
namespace {

using namespace std::chrono_literals;

struct FullEncPair : ::testing::Test {
    std::mt19937_64 rng{1};
    GatewayId peer{0x0A000001, 4790};
    TunnelKey key = random_tunnel_key(0);
    FullEncCipher tx{key};
    FullEncReceiver rx;

    void SetUp() override { rx.install_key(peer, key, 0s); }

    Bytes frame(std::size_t payload) {
        return testing::protected_frame(rng, testing::random_key(rng), Sci{testing::random_mac(rng), 1}, 0, 1,
                                        payload, testing::random_mac(rng));
    }
    Bytes seal(const Bytes& f) {
        Bytes out;
        EXPECT_TRUE(tx.seal_into(f, out));
        return out;
    }
};

TEST_F(FullEncPair, LayoutMatchesAnIndependentGcmOpen) {
    const Bytes f = frame(100);
    seal(frame(10));
    const Bytes body = seal(f);
    ASSERT_EQ(body.size(), f.size() + kFullEncOverhead);
    EXPECT_EQ(body[0], 0);
    EXPECT_EQ(load_be64(body.data() + 1), 2u);
    std::uint8_t iv[12] = {0};
    iv[0] = body[0];
    std::memcpy(iv + 4, body.data() + 1, 8);
    Block tag;
    std::memcpy(tag.data(), body.data() + body.size() - 16, 16);
    Bytes pt(f.size());
    const AesGcm128 gcm(key.key);
    ASSERT_TRUE(gcm.open(ByteView(iv, 12), ByteView(body.data(), kFullEncPrefix),
                         ByteView(body.data() + kFullEncPrefix, f.size()), tag, pt));
    EXPECT_EQ(pt, f);
}

TEST_F(FullEncPair, RoundTripReplayAndTamper) {
    for (std::size_t len : {0, 10, 500, 1400}) {
        const Bytes f = frame(len);
        const Bytes body = seal(f);
        Bytes out;
        ASSERT_TRUE(rx.decode_into(body, peer, 1s, out));
        EXPECT_EQ(out, f);
        EXPECT_EQ(rx.decode_into(body, peer, 1s, out).error(), FullEncError::Replay);
    }
    Bytes body = seal(frame(50));
    Bytes out;
    for (std::size_t i = 0; i < body.size(); i += 7) {
        Bytes m = body;
        m[i] ^= 0x10;
        auto r = rx.decode_into(m, peer, 1s, out);
        ASSERT_FALSE(r);
        EXPECT_TRUE(r.error() == FullEncError::AuthFailed || r.error() == FullEncError::BadEpoch) << i;
    }
    EXPECT_TRUE(rx.decode_into(body, peer, 1s, out));
    EXPECT_EQ(rx.decode_into(Bytes(kFullEncOverhead - 1), peer, 1s, out).error(), FullEncError::Malformed);
}

TEST_F(FullEncPair, BlockOpsCoverTheWholeFrame) {
    for (std::size_t len : {0, 200, 1400}) {
        const Bytes f = frame(len);
        const std::uint64_t before = tx.block_ops();
        const Bytes body = seal(f);
        const std::uint64_t ops = tx.block_ops() - before;
        EXPECT_EQ(ops, fullenc_block_ops(f.size()));
        EXPECT_GE(ops, f.size() / 16);
        const std::uint64_t rbefore = rx.block_ops();
        Bytes out;
        ASSERT_TRUE(rx.decode_into(body, peer, 1s, out));
        EXPECT_EQ(rx.block_ops() - rbefore, ops);
    }
}

TEST_F(FullEncPair, EpochsAndGrace) {
    const Bytes old_body = seal(frame(20));
    const TunnelKey next = random_tunnel_key(1);
    rx.install_key(peer, next, 5s);
    FullEncCipher tx1(next);
    Bytes b1;
    ASSERT_TRUE(tx1.seal_into(frame(20), b1));
    Bytes out;
    EXPECT_TRUE(rx.decode_into(b1, peer, 6s, out));
    EXPECT_EQ(rx.decode_into(old_body, peer, 7s, out).error(), FullEncError::BadEpoch);
    EXPECT_TRUE(rx.decode_into(b1, std::nullopt, 6s, out).error() == FullEncError::Replay);
}

TEST_F(FullEncPair, ReorderWithinWindowIsAccepted) {
    std::vector<Bytes> bodies;
    for (int i = 0; i < 50; ++i) bodies.push_back(seal(frame(5)));
    std::shuffle(bodies.begin(), bodies.end(), rng);
    Bytes out;
    for (const Bytes& b : bodies) EXPECT_TRUE(rx.decode_into(b, peer, 1s, out));
}

}  // namespace
}  // namespace mtun

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace mtun {
namespace {

TEST(Endpoint, ProtectVerifyRoundTrip) {
    std::mt19937_64 rng(1);
    for (std::size_t len : {0, 1, 46, 47, 100, 1400, int(kMaxPlainPayload)}) {
        const Key128 key = testing::random_key(rng);
        const PlainFrame p = testing::random_plain(rng, len);
        const MacsecFrame f = endpoint_protect(p, key, Sci{p.src, 7}, 1, 99);
        EXPECT_EQ(f.sectag.pn, 99u);
        EXPECT_EQ(f.sectag.tci.an, 1);
        EXPECT_EQ(f.secure_data.size(), len + 2);
        auto back = endpoint_verify(parse_macsec(build_macsec(f).value()).value(), key);
        ASSERT_TRUE(back);
        EXPECT_EQ(*back, p);
    }
}

TEST(Endpoint, RejectsBadArguments) {
    std::mt19937_64 rng(2);
    const Key128 key = testing::random_key(rng);
    const PlainFrame p = testing::random_plain(rng, 10);
    EXPECT_THROW(endpoint_protect(p, key, Sci{}, 0, 0), std::invalid_argument);
    EXPECT_THROW(endpoint_protect(p, key, Sci{}, 4, 1), std::invalid_argument);
    EXPECT_THROW(endpoint_protect(testing::random_plain(rng, kMaxPlainPayload + 1), key, Sci{}, 0, 1),
                 std::invalid_argument);
}

TEST(Endpoint, WrongKeyFails) {
    std::mt19937_64 rng(3);
    const PlainFrame p = testing::random_plain(rng, 64);
    const MacsecFrame f = endpoint_protect(p, testing::random_key(rng), Sci{p.src, 1}, 0, 5);
    EXPECT_EQ(endpoint_verify(f, testing::random_key(rng)).error(), VerifyError::IcvMismatch);
}

// Every single-bit change of a protected frame must be rejected, either by the
// codec or by the ICV.
TEST(Endpoint, TenThousandRandomBitFlipsAreRejected) {
    std::mt19937_64 rng(4);
    int accepted = 0, checked = 0;
    for (int frame = 0; frame < 100; ++frame) {
        const Key128 key = testing::random_key(rng);
        const AesGcm128 gcm(key);
        const Bytes wire = testing::protected_frame(rng, key, Sci{testing::random_mac(rng), 1},
                                                    static_cast<std::uint8_t>(rng() & 3), 1 + rng() % 1000,
                                                    rng() % 200, testing::random_mac(rng));
        for (int flip = 0; flip < 100; ++flip) {
            Bytes m = wire;
            const std::size_t bit = rng() % (m.size() * 8);
            m[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
            ++checked;
            auto parsed = parse_macsec(m);
            if (parsed && endpoint_verify(*parsed, gcm)) ++accepted;
        }
    }
    EXPECT_EQ(checked, 10000);
    EXPECT_EQ(accepted, 0);
}

}  // namespace
}  // namespace mtun

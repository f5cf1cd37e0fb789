// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "mtun/encap.hpp"

namespace mtun {
namespace {

TEST(Encap, HeaderLayout) {
    const Bytes body{1, 2, 3};
    const Bytes out = encap(body, Scheme::Enc).value();
    ASSERT_EQ(out.size(), 11u);
    EXPECT_EQ(out[0], 0x4D);
    EXPECT_EQ(out[1], 0x54);
    EXPECT_EQ(out[2], 0x12);
    for (int i = 3; i < 8; ++i) EXPECT_EQ(out[i], 0);
    EXPECT_EQ(out[8], 1);
}

TEST(Encap, RoundTripEveryScheme) {
    Bytes body(500);
    for (std::size_t i = 0; i < body.size(); ++i) body[i] = static_cast<std::uint8_t>(i * 7);
    for (Scheme s : {Scheme::Naive, Scheme::Idf, Scheme::Enc, Scheme::FullEnc}) {
        const Bytes out = encap(body, s).value();
        auto d = decap(out);
        ASSERT_TRUE(d);
        EXPECT_EQ(d->scheme, s);
        EXPECT_TRUE(std::equal(d->body.begin(), d->body.end(), body.begin(), body.end()));
        EXPECT_EQ(parse_scheme(to_string(s)), s);
    }
    EXPECT_FALSE(parse_scheme("macsec"));
}

TEST(Encap, SizeLimitFollowsPathMtu) {
    EXPECT_EQ(max_encap_body(), 1464u);
    EXPECT_TRUE(encap(Bytes(1464), Scheme::Idf));
    EXPECT_EQ(encap(Bytes(1465), Scheme::Idf).error(), EncapError::TooLarge);
    EXPECT_EQ(encap(Bytes(1465), Scheme::Idf, 9000)->size(), 1473u);
}

TEST(Decap, Errors) {
    const Bytes good = encap(Bytes(20, 9), Scheme::Idf).value();
    EXPECT_EQ(decap(ByteView(good.data(), 7)).error(), EncapError::BadMagic);
    Bytes b = good;
    b[0] ^= 1;
    EXPECT_EQ(decap(b).error(), EncapError::BadMagic);
    b = good;
    b[2] = 0x21;
    EXPECT_EQ(decap(b).error(), EncapError::BadVersion);
    b = good;
    b[2] = 0x14;
    EXPECT_EQ(decap(b).error(), EncapError::UnknownScheme);
    for (int i = 3; i < 8; ++i) {
        b = good;
        b[i] = 0x80;
        EXPECT_EQ(decap(b).error(), EncapError::BadReserved) << i;
    }
    EXPECT_TRUE(decap(encap({}, Scheme::Naive).value()));
}

TEST(GatewayId, ParseAndFormat) {
    auto id = GatewayId::parse("10.0.0.2:4790");
    ASSERT_TRUE(id);
    EXPECT_EQ(id->ipv4, 0x0A000002u);
    EXPECT_EQ(id->port, 4790);
    EXPECT_EQ(id->to_string(), "10.0.0.2:4790");
    for (const char* bad : {"10.0.0:1", "10.0.0.256:1", "10.0.0.1", "10.0.0.1:70000", "10.0.0.1:1x", "a.b.c.d:1"})
        EXPECT_FALSE(GatewayId::parse(bad)) << bad;
}

}  // namespace
}  // namespace mtun

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <set>

#include "mtun/idf.hpp"
#include "test_util.hpp"
#include "window_oracle.hpp"

namespace mtun {
namespace {

using namespace std::chrono_literals;

TEST(Ridf, KeyRepeatsThePnFourTimes) {
    const Key128 k = ridf_key(0x01020304);
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(k[4 * i], 1);
        EXPECT_EQ(k[4 * i + 3], 4);
    }
}

TEST(Ridf, IsSipHashOfBidfUnderPnKey) {
    std::mt19937_64 rng(1);
    const Bidf b = testing::random_bidf(rng);
    for (std::uint32_t pn : {1u, 7u, 0xFFFFFFFFu}) {
        Key128 key;
        for (int i = 0; i < 16; ++i) key[i] = static_cast<std::uint8_t>(pn >> (8 * (3 - i % 4)));
        EXPECT_EQ(derive_ridf(b, pn).value, siphash24(key, b.value));
        EXPECT_EQ(derive_ridf(b, pn), derive_ridf(b, pn));
    }
}

TEST(Ridf, MillionConsecutivePnsAreDistinctAndBalanced) {
    std::mt19937_64 rng(2);
    const Bidf b = testing::random_bidf(rng);
    std::vector<std::uint64_t> v;
    v.reserve(1000000);
    double ones = 0, sq = 0;
    for (std::uint32_t pn = 1; pn <= 1000000; ++pn) {
        const std::uint64_t r = derive_ridf(b, pn).value;
        v.push_back(r);
        const int c = std::popcount(r);
        ones += c;
        sq += double(c) * c;
    }
    std::sort(v.begin(), v.end());
    EXPECT_EQ(std::adjacent_find(v.begin(), v.end()), v.end());
    const double mean = ones / 1e6, var = sq / 1e6 - mean * mean;
    // Popcount of a uniform 64-bit word: mean 32, variance 16.
    EXPECT_NEAR(mean, 32.0, 0.05);
    EXPECT_NEAR(var, 16.0, 0.3);
}

struct IdfPair : ::testing::Test {
    std::mt19937_64 rng{5};
    Key128 key = testing::random_key(rng);
    MacAddress src = testing::random_mac(rng);
    MacAddress dst = testing::random_mac(rng);
    Sci sci{src, 3};
    UplinkFlowEntry entry;
    IdfReceiver rx{8};

    void SetUp() override {
        entry.unicast_bidf = testing::random_bidf(rng);
        entry.broadcast_bidf = testing::random_bidf(rng);
        entry.timeout = 100s;
        entry.legs.push_back({dst, src, entry.unicast_bidf, 1, {}});
        entry.legs.push_back({MacAddress::broadcast(), src, entry.broadcast_bidf, 1, {}});
        rx.add_flow(entry.unicast_bidf, {dst, src, sci, 0}, 1, 0s);
        rx.add_flow(entry.broadcast_bidf, {MacAddress::broadcast(), src, sci, 0}, 1, 0s);
    }

    Bytes frame(std::uint32_t pn, const MacAddress& to, std::size_t payload = 80) {
        return testing::protected_frame(rng, key, sci, 0, pn, payload, to);
    }

    Expected<MacsecFrame, IdfError> roundtrip(const Bytes& wire_frame) {
        const MacsecFrame f = parse_macsec(wire_frame).value();
        auto w = uplink_encode(f, entry);
        if (!w) return w.error();
        auto parsed = parse_idf_wire(serialize(*w));
        if (!parsed) return parsed.error();
        return rx.downlink_decode(*parsed, 1s);
    }
};

TEST_F(IdfPair, EncodeUsesTheLegBidfAndShrinksBy18) {
    const Bytes f = frame(7, dst);
    const MacsecFrame m = parse_macsec(f).value();
    const IdfWireFrame w = uplink_encode(m, entry).value();
    EXPECT_EQ(w.ridf, derive_ridf(entry.unicast_bidf, 7));
    EXPECT_EQ(serialize(w).size(), f.size() - 18);
    EXPECT_EQ(w.secure_data, m.secure_data);
    EXPECT_EQ(w.icv, m.icv);

    const MacsecFrame bc = parse_macsec(frame(8, MacAddress::broadcast())).value();
    EXPECT_EQ(uplink_encode(bc, entry)->ridf, derive_ridf(entry.broadcast_bidf, 8));
    const MacsecFrame other = parse_macsec(frame(9, testing::random_mac(rng))).value();
    EXPECT_EQ(uplink_encode(other, entry).error(), IdfError::UnregisteredFlow);
}

TEST_F(IdfPair, ByteEncoderMatchesStructuredEncoder) {
    const Bytes f = frame(3, dst, 20);
    Bytes out{0xAA};
    idf_encode_into(f, derive_ridf(entry.unicast_bidf, 3), out);
    Bytes want{0xAA};
    const Bytes s = serialize(uplink_encode(parse_macsec(f).value(), entry).value());
    want.insert(want.end(), s.begin(), s.end());
    EXPECT_EQ(out, want);
}

TEST_F(IdfPair, RoundTripIsBitExactAndVerifies) {
    for (std::uint32_t pn = 1; pn <= 50; ++pn) {
        const MacAddress to = pn % 3 ? dst : MacAddress::broadcast();
        const Bytes f = frame(pn, to, 30 + pn * 7);
        auto back = roundtrip(f);
        ASSERT_TRUE(back) << pn << " " << to_string(back.error());
        EXPECT_EQ(build_macsec(*back).value(), f);
        EXPECT_TRUE(endpoint_verify(*back, key));
    }
    EXPECT_EQ(rx.audit(), "");
}

TEST_F(IdfPair, DecodeIntoMatchesStructuredDecode) {
    const Bytes f = frame(1, dst, 44);
    const Bytes body = serialize(uplink_encode(parse_macsec(f).value(), entry).value());
    Bytes out;
    ASSERT_TRUE(rx.decode_into(body, 1s, out));
    EXPECT_EQ(out, f);
    out.clear();
    EXPECT_EQ(rx.decode_into(body, 1s, out).error(), IdfError::Replay);
    EXPECT_TRUE(out.empty());
}

TEST_F(IdfPair, SecondDeliveryIsReplay) {
    const Bytes f = frame(4, dst);
    ASSERT_TRUE(roundtrip(f));
    EXPECT_EQ(roundtrip(f).error(), IdfError::Replay);
}

TEST_F(IdfPair, BeyondWindowIsUnknown) {
    EXPECT_EQ(roundtrip(frame(9, dst)).error(), IdfError::UnknownIdentifier);
    EXPECT_TRUE(roundtrip(frame(8, dst)));
}

TEST_F(IdfPair, WireCarriesNoSensitiveField) {
    // Sentinel field values are distinctive enough that a chance match is negligible.
    UplinkFlowEntry e = entry;
    const MacsecFrame m = parse_macsec(frame(0x5A5A1234, dst, 60)).value();
    const Bytes wire = serialize(uplink_encode(m, e).value());
    auto contains = [&](ByteView needle) {
        return std::search(wire.begin(), wire.end(), needle.begin(), needle.end()) != wire.end();
    };
    std::uint8_t pn[4], sci_bytes[8];
    store_be32(pn, 0x5A5A1234);
    sci.write(sci_bytes);
    EXPECT_FALSE(contains(dst.octets));
    EXPECT_FALSE(contains(src.octets));
    EXPECT_FALSE(contains(ByteView(pn, 4)));
    EXPECT_FALSE(contains(ByteView(sci_bytes, 8)));
    EXPECT_EQ(wire[8] & Tci::kAnMask, 0);
}

TEST_F(IdfPair, BoundFlowsShareTheirPnSequence) {
    // Unicast and broadcast frames of one SA interleave on one PN counter.
    for (std::uint32_t pn = 1; pn <= 200; ++pn) {
        const MacAddress to = pn % 5 == 0 ? MacAddress::broadcast() : dst;
        ASSERT_TRUE(roundtrip(frame(pn, to))) << pn;
    }
    EXPECT_EQ(rx.audit(), "");
}

TEST_F(IdfPair, UnboundFlowsLoseFramesAfterLongPartnerRuns) {
    IdfReceiver unbound(8);
    unbound.flows().set_binding_enabled(false);
    unbound.add_flow(entry.unicast_bidf, {dst, src, sci, 0}, 1, 0s);
    unbound.add_flow(entry.broadcast_bidf, {MacAddress::broadcast(), src, sci, 0}, 1, 0s);
    int lost = 0;
    for (std::uint32_t pn = 1; pn <= 100; ++pn) {
        const MacAddress to = pn % 20 == 0 ? MacAddress::broadcast() : dst;
        const MacsecFrame m = parse_macsec(frame(pn, to)).value();
        if (!unbound.downlink_decode(parse_idf_wire(serialize(uplink_encode(m, entry).value())).value(), 1s)) ++lost;
    }
    EXPECT_EQ(lost, 5);
    EXPECT_EQ(unbound.audit(), "");
}

TEST_F(IdfPair, AnnounceSemantics) {
    const Bidf b = entry.unicast_bidf;
    EXPECT_EQ(rx.add_flow(b, {dst, src, sci, 0}, 1, 0s), IdfReceiver::AddResult::Duplicate);
    EXPECT_EQ(rx.add_flow(b, {dst, src, sci, 0}, 100, 0s), IdfReceiver::AddResult::Reset);
    EXPECT_EQ(rx.flows().find(b)->window.lowest(), 100u);
    EXPECT_EQ(rx.audit(), "");
    EXPECT_EQ(roundtrip(frame(5, dst)).error(), IdfError::UnknownIdentifier);
    EXPECT_TRUE(roundtrip(frame(100, dst)));
    EXPECT_TRUE(rx.remove_flow(b));
    EXPECT_FALSE(rx.remove_flow(b));
    EXPECT_EQ(rx.audit(), "");
    EXPECT_EQ(rx.identifiers().size(), rx.flows().find(entry.broadcast_bidf)->window.slots().size());
}

TEST_F(IdfPair, HashCountsFollowTheWindow) {
    IdfReceiver r(64);
    EXPECT_EQ(r.hash_calls(), 0u);
    r.add_flow(entry.unicast_bidf, {dst, src, sci, 0}, 1, 0s);
    EXPECT_EQ(r.hash_calls(), 64u);
    std::uint64_t uplink = 0;
    for (std::uint32_t pn = 1; pn <= 1000; ++pn) {
        const MacsecFrame m = parse_macsec(frame(pn, dst)).value();
        const IdfWireFrame w = uplink_encode(m, entry).value();
        ++uplink;
        ASSERT_TRUE(r.downlink_decode(w, 1s));
    }
    EXPECT_EQ(uplink, 1000u);
    EXPECT_EQ(r.hash_calls() - 64, 1000u);
}

TEST_F(IdfPair, TableStaysCoherentUnderRandomDelivery) {
    std::mt19937_64 r(9);
    for (int round = 0; round < 30; ++round) {
        IdfReceiver rx2(1 + static_cast<std::uint32_t>(r() % 16));
        rx2.add_flow(entry.unicast_bidf, {dst, src, sci, 0}, 1, 0s);
        rx2.add_flow(entry.broadcast_bidf, {MacAddress::broadcast(), src, sci, 0}, 1, 0s);
        for (std::uint32_t pn : testing::random_pn_sequence(r, 1, rx2.window(), 80)) {
            const MacAddress to = r() % 4 == 0 ? MacAddress::broadcast() : dst;
            const MacsecFrame m = parse_macsec(frame(pn, to, 10)).value();
            (void)rx2.downlink_decode(uplink_encode(m, entry).value(), 1s);
            ASSERT_EQ(rx2.audit(), "") << round;
        }
    }
}

TEST_F(IdfPair, DecodeMatchesTheWindowOracle) {
    std::mt19937_64 r(10);
    for (int round = 0; round < 200; ++round) {
        IdfReceiver rx2(1 + static_cast<std::uint32_t>(r() % 16));
        rx2.add_flow(entry.unicast_bidf, {dst, src, sci, 0}, 1, 0s);
        testing::NaiveWindow oracle(1, rx2.window());
        for (std::uint32_t pn : testing::random_pn_sequence(r, 1, rx2.window(), 40)) {
            const MacsecFrame m = parse_macsec(frame(pn, dst, 10)).value();
            const auto got = rx2.downlink_decode(uplink_encode(m, entry).value(), 1s);
            const WindowResult want = oracle.accept(pn);
            if (want == WindowResult::Accept) {
                ASSERT_TRUE(got);
            } else if (want == WindowResult::Replay) {
                ASSERT_EQ(got.error(), IdfError::Replay);
            } else {
                // Identifiers exist only for the window slots, so a PN outside
                // them is indistinguishable from a forged identifier.
                ASSERT_FALSE(got);
                ASSERT_TRUE(got.error() == IdfError::UnknownIdentifier || got.error() == IdfError::OutOfWindow);
            }
        }
    }
}

TEST(IdfInjection, RandomIdentifiersAgainstTenThousandEntriesAreRejected) {
    std::mt19937_64 rng(11);
    IdfReceiver rx(100);
    for (int i = 0; i < 100; ++i) {
        const MacAddress m = testing::random_mac(rng);
        rx.add_flow(testing::random_bidf(rng), {testing::random_mac(rng), m, Sci{m, 1}, 0}, 1, 0s);
    }
    ASSERT_EQ(rx.identifiers().size(), 10000u);
    // Expected false accepts: 1e5 * 1e4 / 2^64, about 5e-11.
    int accepted = 0;
    Bytes body(80);
    for (int i = 0; i < 100000; ++i) {
        for (auto& b : body) b = static_cast<std::uint8_t>(rng());
        body[8] &= static_cast<std::uint8_t>(~Tci::kAnMask);
        Bytes out;
        if (rx.decode_into(body, 1s, out)) ++accepted;
    }
    EXPECT_EQ(accepted, 0);
}

TEST(IdfWire, ParseRejectsMalformedBodies) {
    EXPECT_EQ(parse_idf_wire(Bytes(kIdfMinBodySize - 1)).error(), IdfError::Malformed);
    EXPECT_TRUE(parse_idf_wire(Bytes(kIdfMinBodySize)));
    Bytes an(40);
    an[8] = 1;
    EXPECT_EQ(parse_idf_wire(an).error(), IdfError::Malformed);
    EXPECT_EQ(parse_idf_wire(Bytes(kMaxFrameSize - 17)).error(), IdfError::Malformed);
}

}  // namespace
}  // namespace mtun

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace mtun {
namespace {

using testing::random_frame;

// Independent statement of the short-length rule: the secure data is the
// moved EtherType plus the payload; SL carries its length up to 48, else 0.
std::uint8_t sl_oracle(std::size_t payload_len) {
    const std::size_t secure = payload_len + 2;
    if (secure > 48) return 0;
    return static_cast<std::uint8_t>(secure);
}

TEST(ShortLength, MatchesOracleForEveryPayloadLength) {
    for (std::size_t payload = 0; payload <= kMaxPlainPayload; ++payload)
        EXPECT_EQ(short_length_for(payload + 2), sl_oracle(payload)) << payload;
}

TEST(ShortLength, FortyBytePayloadGivesFortyTwo) {
    std::mt19937_64 rng(1);
    const Key128 key = testing::random_key(rng);
    const PlainFrame p = testing::random_plain(rng, 40);
    const MacsecFrame f = endpoint_protect(p, key, Sci{p.src, 1}, 0, 1);
    const Bytes wire = build_macsec(f).value();
    EXPECT_EQ(wire[15], 42);
    EXPECT_EQ(wire.size(), kMacsecHeaderSize + 42 + kIcvSize);
}

TEST(SecTag, RoundTripsTenThousandRandomFrames) {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 10000; ++i) {
        const MacsecFrame f = random_frame(rng);
        auto wire = build_macsec(f);
        ASSERT_TRUE(wire) << i;
        ASSERT_EQ(wire->size(), f.wire_size());
        EXPECT_EQ((*wire)[15], short_length_for(f.secure_data.size()));
        auto back = parse_macsec(*wire);
        ASSERT_TRUE(back) << to_string(back.error());
        EXPECT_EQ(*back, f);
        auto header = parse_macsec_header(*wire);
        ASSERT_TRUE(header);
        EXPECT_EQ(header->sectag, f.sectag);
        EXPECT_EQ(header->dst, f.dst);
    }
}

TEST(Limits, LargestPlainPayloadFillsTheLargestFrame) {
    std::mt19937_64 rng(8);
    const Key128 key = testing::random_key(rng);
    PlainFrame p = testing::random_plain(rng, kMaxPlainPayload);
    EXPECT_EQ(build_plain(p).size() + 32, kMaxFrameSize);
    EXPECT_EQ(build_macsec(endpoint_protect(p, key, Sci{p.src, 1}, 0, 1)).value().size(), kMaxFrameSize);
    const PlainFrame empty = testing::random_plain(rng, 0);
    EXPECT_EQ(build_macsec(endpoint_protect(empty, key, Sci{empty.src, 1}, 0, 1)).value().size(),
              kMinMacsecFrameSize);
}

TEST(SecTag, BuildIgnoresCallerShortLength) {
    std::mt19937_64 rng(3);
    MacsecFrame f = random_frame(rng, 20);
    f.sectag.sl = 7;
    const Bytes wire = build_macsec(f).value();
    EXPECT_EQ(wire[15], 20);
}

TEST(SecTag, TciByteLayout) {
    Tci t;
    t.an = 2;
    EXPECT_EQ(t.to_byte(), Tci::kSc | Tci::kE | 2);
    const Tci back = Tci::from_byte(0xFF);
    EXPECT_TRUE(back.v && back.es && back.sc && back.scb && back.e && back.c);
    EXPECT_EQ(back.an, 3);
}

class ParseErrors : public ::testing::Test {
protected:
    void SetUp() override {
        std::mt19937_64 rng(5);
        wire = build_macsec(random_frame(rng, 100)).value();
    }
    Bytes wire;
};

TEST_F(ParseErrors, TooShortAndTooLong) {
    Bytes s(wire.begin(), wire.begin() + kMinMacsecFrameSize - 1);
    EXPECT_EQ(parse_macsec(s).error(), CodecError::TooShort);
    Bytes l(kMaxFrameSize + 1, 0);
    std::copy(wire.begin(), wire.begin() + kMacsecHeaderSize, l.begin());
    EXPECT_EQ(parse_macsec(l).error(), CodecError::TooLong);
}

TEST_F(ParseErrors, WrongEtherType) {
    wire[12] = 0x08;
    wire[13] = 0x00;
    EXPECT_EQ(parse_macsec(wire).error(), CodecError::WrongEtherType);
}

TEST_F(ParseErrors, VersionBitAndReservedSlBits) {
    Bytes v = wire;
    v[14] |= Tci::kV;
    EXPECT_EQ(parse_macsec(v).error(), CodecError::ReservedBitsSet);
    Bytes r = wire;
    r[15] |= 0x40;
    EXPECT_EQ(parse_macsec(r).error(), CodecError::ReservedBitsSet);
}

TEST_F(ParseErrors, MissingScBit) {
    wire[14] &= static_cast<std::uint8_t>(~Tci::kSc);
    EXPECT_EQ(parse_macsec(wire).error(), CodecError::ScAbsent);
}

TEST_F(ParseErrors, InconsistentShortLength) {
    wire[15] = 5;
    EXPECT_EQ(parse_macsec(wire).error(), CodecError::BadShortLength);
}

TEST(Build, RejectsInvariantViolations) {
    std::mt19937_64 rng(9);
    MacsecFrame f = random_frame(rng, 10);
    f.sectag.tci.an = 4;
    EXPECT_EQ(build_macsec(f).error(), CodecError::InvariantViolation);
    f = random_frame(rng, 1);
    EXPECT_EQ(build_macsec(f).error(), CodecError::InvariantViolation);
    f = random_frame(rng, kMaxFrameSize);
    EXPECT_EQ(build_macsec(f).error(), CodecError::InvariantViolation);
}

TEST(Plain, RoundTripAndMkaDetection) {
    std::mt19937_64 rng(11);
    PlainFrame p = testing::random_plain(rng, 60);
    EXPECT_EQ(parse_plain(build_plain(p)).value(), p);
    EXPECT_FALSE(is_mka(build_plain(p)));
    p.ethertype = kEtherTypeEapol;
    EXPECT_TRUE(is_mka(build_plain(p)));
    EXPECT_EQ(ethertype_of(build_plain(p)), kEtherTypeEapol);
    EXPECT_FALSE(ethertype_of(Bytes(13)));
}

TEST(Partition, FieldsTileTheHeaderAndFrame) {
    for (std::size_t size : {kMinMacsecFrameSize, std::size_t{64}, std::size_t{1518}}) {
        std::vector<std::uint8_t> cover(size, 0);
        for (FrameField f : kAllFrameFields) {
            const FieldLocation loc = locate(f, size);
            for (std::size_t i = 0; i < loc.length; ++i) {
                EXPECT_EQ(cover[loc.offset + i] & loc.mask, 0) << to_string(f);
                cover[loc.offset + i] |= loc.mask;
            }
        }
        for (std::size_t i = 0; i < size; ++i) EXPECT_EQ(cover[i], 0xFF) << "byte " << i;
    }
}

TEST(Partition, SensitiveSetIsDisjointFromCarriedFields) {
    for (FrameField f : kNonSensitiveHeaderFields) EXPECT_FALSE(is_sensitive(f));
    EXPECT_TRUE(is_sensitive(FrameField::Pn));
    EXPECT_TRUE(is_sensitive(FrameField::An));
    EXPECT_FALSE(is_sensitive(FrameField::SecureData));
}

TEST(MacAddress, ParseAndFormat) {
    auto m = MacAddress::parse("02:1a:ff:00:10:ee");
    ASSERT_TRUE(m);
    EXPECT_EQ(m->to_string(), "02:1a:ff:00:10:ee");
    EXPECT_FALSE(MacAddress::parse("02:1a:ff:00:10"));
    EXPECT_FALSE(MacAddress::parse("zz:1a:ff:00:10:ee"));
    EXPECT_TRUE(MacAddress::broadcast().is_broadcast());
    EXPECT_TRUE(MacAddress::broadcast().is_multicast());
}

TEST(Sci, U64RoundTrip) {
    const Sci s{*MacAddress::parse("00:11:22:33:44:55"), 0x0102};
    EXPECT_EQ(s.to_u64(), 0x0011223344550102ULL);
    EXPECT_EQ(Sci::from_u64(s.to_u64()), s);
}

}  // namespace
}  // namespace mtun

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Ethernet and IEEE 802.1AE (MACsec) frame codec.
//
// Wire layout of a MACsec frame with SCI present:
//
//   0      6      12     14   15   16       20          28           N-16   N
//   +------+------+------+----+----+--------+-----------+------------+------+
//   | dst  | src  |88E5  |TCI | SL |   PN   |    SCI    | secure data| ICV  |
//   |      |      |      |+AN |    |        |           | (enc type +|      |
//   |      |      |      |    |    |        |           |  payload)  |      |
//   +------+------+------+----+----+--------+-----------+------------+------+
//
// All multi-byte fields are big-endian.

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "mtun/bytes.hpp"
#include "mtun/crypto.hpp"

namespace mtun {

inline constexpr std::uint16_t kEtherTypeMacsec = 0x88E5;
inline constexpr std::uint16_t kEtherTypeEapol = 0x888E;

inline constexpr std::size_t kMacSize = 6;
inline constexpr std::size_t kEthHeaderSize = 14;
inline constexpr std::size_t kSecTagSize = 16;  // EtherType + TCI/AN + SL + PN + SCI
inline constexpr std::size_t kMacsecHeaderSize = 2 * kMacSize + kSecTagSize;  // 28
inline constexpr std::size_t kIcvSize = 16;
inline constexpr std::size_t kMinSecureData = 2;
inline constexpr std::size_t kMinMacsecFrameSize = kMacsecHeaderSize + kMinSecureData + kIcvSize;
inline constexpr std::size_t kMaxFrameSize = 1518;
inline constexpr std::size_t kMacsecOverhead = kSecTagSize + kIcvSize;  // added to a plain frame
inline constexpr std::size_t kMaxPlainPayload = kMaxFrameSize - kEthHeaderSize - kMacsecOverhead;
inline constexpr std::size_t kShortLengthLimit = 48;

struct MacAddress {
    std::array<std::uint8_t, 6> octets{};

    static constexpr MacAddress broadcast() { return {{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}}; }
    static std::optional<MacAddress> parse(std::string_view text);

    constexpr bool is_broadcast() const {
        for (auto o : octets)
            if (o != 0xff) return false;
        return true;
    }
    constexpr bool is_multicast() const { return (octets[0] & 0x01) != 0; }
    std::uint64_t to_u64() const;
    std::string to_string() const;

    auto operator<=>(const MacAddress&) const = default;
    template <typename H>
    friend H AbslHashValue(H h, const MacAddress& m) {
        return H::combine(std::move(h), m.to_u64());
    }
};

struct Sci {
    MacAddress system_id;
    std::uint16_t port = 0;

    static constexpr std::size_t kSize = 8;
    std::uint64_t to_u64() const;
    static Sci from_u64(std::uint64_t v);
    void write(std::uint8_t* out) const;
    static Sci read(const std::uint8_t* in);

    auto operator<=>(const Sci&) const = default;
};

struct Tci {
    bool v = false;
    bool es = false;
    bool sc = true;
    bool scb = false;
    bool e = true;
    bool c = false;
    std::uint8_t an = 0;

    static constexpr std::uint8_t kV = 0x80;
    static constexpr std::uint8_t kEs = 0x40;
    static constexpr std::uint8_t kSc = 0x20;
    static constexpr std::uint8_t kScb = 0x10;
    static constexpr std::uint8_t kE = 0x08;
    static constexpr std::uint8_t kC = 0x04;
    static constexpr std::uint8_t kAnMask = 0x03;

    std::uint8_t to_byte() const;
    static Tci from_byte(std::uint8_t b);

    bool operator==(const Tci&) const = default;
};

struct SecTag {
    Tci tci;
    std::uint8_t sl = 0;
    std::uint32_t pn = 0;
    Sci sci;

    bool operator==(const SecTag&) const = default;
};

struct MacsecFrame {
    MacAddress dst;
    MacAddress src;
    SecTag sectag;
    Bytes secure_data;
    Block icv{};

    std::size_t wire_size() const { return kMacsecHeaderSize + secure_data.size() + kIcvSize; }
    bool operator==(const MacsecFrame&) const = default;
};

struct PlainFrame {
    MacAddress dst;
    MacAddress src;
    std::uint16_t ethertype = 0;
    Bytes payload;

    bool operator==(const PlainFrame&) const = default;
};

enum class CodecError : std::uint8_t {
    TooShort,
    TooLong,
    WrongEtherType,
    ReservedBitsSet,  // V bit or the two reserved high bits of the SL octet
    ScAbsent,
    BadShortLength,
    InvariantViolation,
};
std::string_view to_string(CodecError e);

/// SL octet value for a secure-data length (moved EtherType + payload).
constexpr std::uint8_t short_length_for(std::size_t secure_data_len) {
    return secure_data_len <= kShortLengthLimit ? static_cast<std::uint8_t>(secure_data_len) : 0;
}

Expected<MacsecFrame, CodecError> parse_macsec(ByteView bytes);

/// Header fields of a serialized MACsec frame. Validation is identical to
/// parse_macsec; secure data and ICV stay in the caller's buffer.
struct MacsecHeader {
    MacAddress dst;
    MacAddress src;
    SecTag sectag;
};
Expected<MacsecHeader, CodecError> parse_macsec_header(ByteView bytes);

/// Serializes `frame`; SL is recomputed from secure_data, the caller's value is ignored.
Expected<Bytes, CodecError> build_macsec(const MacsecFrame& frame);

/// Writes the 28 header bytes (dst, src, EtherType, SecTAG) for `frame`
/// with SL recomputed. Used as GCM additional data.
void write_macsec_header(const MacsecFrame& frame, std::uint8_t* out);

/// EtherType of a raw Ethernet frame, or nullopt if shorter than 14 bytes.
std::optional<std::uint16_t> ethertype_of(ByteView frame);

/// Key-agreement (EAPOL) traffic that the gateway diverts to the management channel.
bool is_mka(ByteView frame);

Bytes build_plain(const PlainFrame& frame);
Expected<PlainFrame, CodecError> parse_plain(ByteView bytes);

// Field-level sensitivity partition of a MACsec frame. Layout code and tests
// both consult this table.
enum class FrameField : std::uint8_t { Dst, Src, EtherType, TciFlags, An, Sl, Pn, Sci, SecureData, Icv };

struct FieldLocation {
    std::size_t offset;  // byte offset in the serialized frame
    std::size_t length;  // bytes
    std::uint8_t mask;   // significant bits within each byte
};

inline constexpr std::array<FrameField, 10> kAllFrameFields{
    FrameField::Dst, FrameField::Src, FrameField::EtherType, FrameField::TciFlags, FrameField::An,
    FrameField::Sl,  FrameField::Pn,  FrameField::Sci,       FrameField::SecureData, FrameField::Icv};

inline constexpr std::array<FrameField, 6> kSensitiveFields{
    FrameField::Dst, FrameField::Src, FrameField::EtherType, FrameField::Pn, FrameField::Sci, FrameField::An};

inline constexpr std::array<FrameField, 2> kNonSensitiveHeaderFields{FrameField::TciFlags, FrameField::Sl};

constexpr bool is_sensitive(FrameField f) {
    for (auto s : kSensitiveFields)
        if (s == f) return true;
    return false;
}

FieldLocation locate(FrameField field, std::size_t frame_size);
std::string_view to_string(FrameField f);

}  // namespace mtun

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Management channel messages. The channel itself is assumed to be an
// authenticated, reliable, ordered byte stream between two gateways.
//
//   0       2     3     4         8
//   +-------+-----+-----+---------+----------------+
//   | magic | ver |kind | length  | body (length)  |
//   +-------+-----+-----+---------+----------------+
//
// Bodies (big-endian):
//   HELLO          gateway(6)
//   FLOW_ANNOUNCE  bidf(16) dst(6) src(6) sci(8) an(1) pn(4) cast(1)
//   FLOW_LEARNED   bidf(16) dst(6) src(6) sci(8) an(1) learner(6)
//   FLOW_EXPIRE    bidf(16)
//   REKEY          epoch(1) key(16)
//   MKA_FORWARD    EAPOL frame
//   ACK            acked kind(1) reference(16)
//
// A gateway id is ipv4(4) port(2).

#pragma once

#include <deque>
#include <optional>
#include <string_view>
#include <variant>

#include "mtun/flow.hpp"
#include "mtun/keyring.hpp"

namespace mtun {

inline constexpr std::uint16_t kMgmtMagic = 0x4D47;
inline constexpr std::uint8_t kMgmtVersion = 1;
inline constexpr std::size_t kMgmtHeaderSize = 8;
inline constexpr std::size_t kMgmtMaxBody = 64 * 1024;

enum class MgmtKind : std::uint8_t {
    Hello = 1,
    FlowAnnounce = 2,
    FlowLearned = 3,
    FlowExpire = 4,
    Rekey = 5,
    MkaForward = 6,
    Ack = 7,
};
std::string_view to_string(MgmtKind k);

struct HelloMsg {
    GatewayId gateway;
    bool operator==(const HelloMsg&) const = default;
};

struct FlowAnnounceMsg {
    Bidf bidf;
    HeaderData header;
    std::uint32_t pn = 1;  // first PN of the flow, >= 1
    bool broadcast = false;
    bool operator==(const FlowAnnounceMsg&) const = default;
};

struct FlowLearnedMsg {
    Bidf bidf;
    HeaderData header;
    GatewayId learner;
    bool operator==(const FlowLearnedMsg&) const = default;
};

struct FlowExpireMsg {
    Bidf bidf;
    bool operator==(const FlowExpireMsg&) const = default;
};

struct RekeyMsg {
    std::uint8_t epoch = 0;
    Key128 key{};
    bool operator==(const RekeyMsg&) const = default;
};

struct MkaForwardMsg {
    Bytes frame;
    bool operator==(const MkaForwardMsg&) const = default;
};

/// Acknowledges an announce (reference = bidf) or a rekey (reference[0] = epoch).
struct AckMsg {
    MgmtKind acked = MgmtKind::FlowAnnounce;
    std::array<std::uint8_t, 16> reference{};

    static AckMsg for_announce(const Bidf& bidf) { return {MgmtKind::FlowAnnounce, bidf.value}; }
    static AckMsg for_rekey(std::uint8_t epoch) {
        AckMsg a{MgmtKind::Rekey, {}};
        a.reference[0] = epoch;
        return a;
    }
    bool operator==(const AckMsg&) const = default;
};

using MgmtMessage =
    std::variant<HelloMsg, FlowAnnounceMsg, FlowLearnedMsg, FlowExpireMsg, RekeyMsg, MkaForwardMsg, AckMsg>;

MgmtKind kind_of(const MgmtMessage& m);

enum class MgmtError : std::uint8_t { BadMagic, BadVersion, UnknownKind, BadLength, Truncated, InvalidField };
std::string_view to_string(MgmtError e);

Bytes encode(const MgmtMessage& m);
/// Decodes exactly one message occupying all of `bytes`.
Expected<MgmtMessage, MgmtError> decode_mgmt(ByteView bytes);

/// Splits a byte stream into messages. After the first framing error the
/// stream cannot be resynchronized and stays failed.
class MgmtStreamDecoder {
public:
    void feed(ByteView bytes);
    /// Next complete message, an error, or nullopt when more bytes are needed.
    std::optional<Expected<MgmtMessage, MgmtError>> next();
    bool failed() const { return failed_.has_value(); }
    std::size_t buffered() const { return buf_.size() - pos_; }

private:
    Bytes buf_;
    std::size_t pos_ = 0;
    std::optional<MgmtError> failed_;
};

}  // namespace mtun

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Unprotected carrier header placed in front of every scheme body inside a
// UDP datagram:
//
//   0        2        3                          8
//   +--------+--------+--------------------------+
//   | magic  |ver|sch |     reserved (zero)      |
//   +--------+--------+--------------------------+

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "mtun/bytes.hpp"

namespace mtun {

enum class Scheme : std::uint8_t { Naive = 0, Idf = 1, Enc = 2, FullEnc = 3 };

std::string_view to_string(Scheme s);
std::optional<Scheme> parse_scheme(std::string_view name);

inline constexpr std::uint16_t kEncapMagic = 0x4D54;
inline constexpr std::uint8_t kEncapVersion = 1;
inline constexpr std::size_t kEncapHeaderSize = 8;
inline constexpr std::size_t kIpUdpOverhead = 28;
inline constexpr std::size_t kDefaultPathMtu = 1500;
inline constexpr std::uint16_t kDefaultTunnelPort = 4790;
inline constexpr std::uint16_t kDefaultMgmtPort = 4791;

constexpr std::size_t max_encap_body(std::size_t path_mtu = kDefaultPathMtu) {
    return path_mtu - kIpUdpOverhead - kEncapHeaderSize;
}

/// IPv4 address and UDP port of a tunnel gateway.
struct GatewayId {
    std::uint32_t ipv4 = 0;
    std::uint16_t port = 0;

    static std::optional<GatewayId> parse(std::string_view text);  // "a.b.c.d:port"
    std::string to_string() const;

    auto operator<=>(const GatewayId&) const = default;

    template <typename H>
    friend H AbslHashValue(H h, const GatewayId& g) {
        return H::combine(std::move(h), g.ipv4, g.port);
    }
};

enum class EncapError : std::uint8_t { TooLarge, BadMagic, BadVersion, UnknownScheme, BadReserved };
std::string_view to_string(EncapError e);

Expected<Bytes, EncapError> encap(ByteView body, Scheme scheme, std::size_t path_mtu = kDefaultPathMtu);

/// Writes the 8-byte header into `out[0..8)`.
void write_encap_header(std::uint8_t* out, Scheme scheme);

struct Decapped {
    Scheme scheme;
    ByteView body;  // aliases the input payload
};
Expected<Decapped, EncapError> decap(ByteView payload);

}  // namespace mtun

template <>
struct std::hash<mtun::GatewayId> {
    std::size_t operator()(const mtun::GatewayId& g) const noexcept {
        return std::hash<std::uint64_t>{}((std::uint64_t{g.ipv4} << 16) | g.port);
    }
};

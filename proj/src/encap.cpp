// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/encap.hpp"

#include <charconv>
#include <cstring>

namespace mtun {

std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::Naive: return "naive";
        case Scheme::Idf: return "idf";
        case Scheme::Enc: return "enc";
        case Scheme::FullEnc: return "fullenc";
    }
    return "?";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
    for (Scheme s : {Scheme::Naive, Scheme::Idf, Scheme::Enc, Scheme::FullEnc})
        if (to_string(s) == name) return s;
    return std::nullopt;
}

std::optional<GatewayId> GatewayId::parse(std::string_view text) {
    GatewayId id;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int i = 0; i < 4; ++i) {
        unsigned octet = 0;
        auto [next, ec] = std::from_chars(p, end, octet);
        if (ec != std::errc{} || octet > 255) return std::nullopt;
        id.ipv4 = (id.ipv4 << 8) | octet;
        p = next;
        const char want = i < 3 ? '.' : ':';
        if (p == end || *p != want) return std::nullopt;
        ++p;
    }
    unsigned port = 0;
    auto [next, ec] = std::from_chars(p, end, port);
    if (ec != std::errc{} || next != end || port > 0xffff) return std::nullopt;
    id.port = static_cast<std::uint16_t>(port);
    return id;
}

std::string GatewayId::to_string() const {
    return std::to_string(ipv4 >> 24) + "." + std::to_string((ipv4 >> 16) & 0xff) + "." +
           std::to_string((ipv4 >> 8) & 0xff) + "." + std::to_string(ipv4 & 0xff) + ":" +
           std::to_string(port);
}

std::string_view to_string(EncapError e) {
    switch (e) {
        case EncapError::TooLarge: return "TooLarge";
        case EncapError::BadMagic: return "BadMagic";
        case EncapError::BadVersion: return "BadVersion";
        case EncapError::UnknownScheme: return "UnknownScheme";
        case EncapError::BadReserved: return "BadReserved";
    }
    return "?";
}

void write_encap_header(std::uint8_t* out, Scheme scheme) {
    store_be16(out, kEncapMagic);
    out[2] = static_cast<std::uint8_t>((kEncapVersion << 4) | static_cast<std::uint8_t>(scheme));
    std::memset(out + 3, 0, kEncapHeaderSize - 3);
}

Expected<Bytes, EncapError> encap(ByteView body, Scheme scheme, std::size_t path_mtu) {
    if (body.size() > max_encap_body(path_mtu)) return EncapError::TooLarge;
    Bytes out(kEncapHeaderSize + body.size());
    write_encap_header(out.data(), scheme);
    if (!body.empty()) std::memcpy(out.data() + kEncapHeaderSize, body.data(), body.size());
    return out;
}

Expected<Decapped, EncapError> decap(ByteView payload) {
    if (payload.size() < kEncapHeaderSize) return EncapError::BadMagic;
    const std::uint8_t* p = payload.data();
    if (load_be16(p) != kEncapMagic) return EncapError::BadMagic;
    if ((p[2] >> 4) != kEncapVersion) return EncapError::BadVersion;
    const std::uint8_t scheme = p[2] & 0x0f;
    if (scheme > static_cast<std::uint8_t>(Scheme::FullEnc)) return EncapError::UnknownScheme;
    for (std::size_t i = 3; i < kEncapHeaderSize; ++i)
        if (p[i] != 0) return EncapError::BadReserved;
    return Decapped{static_cast<Scheme>(scheme), payload.subspan(kEncapHeaderSize)};
}

}  // namespace mtun

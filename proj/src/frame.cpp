// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/frame.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>

namespace mtun {

namespace {
constexpr std::uint8_t kSlReservedMask = 0xC0;
constexpr std::size_t kOffEtherType = 12;
constexpr std::size_t kOffTci = 14;
constexpr std::size_t kOffSl = 15;
constexpr std::size_t kOffPn = 16;
constexpr std::size_t kOffSci = 20;

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
}  // namespace

std::string to_hex(ByteView bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0xf]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    Bytes out;
    out.reserve(hex.size() / 2);
    int hi = -1;
    for (char c : hex) {
        int v = hex_value(c);
        if (v < 0) continue;
        if (hi < 0) {
            hi = v;
        } else {
            out.push_back(static_cast<std::uint8_t>((hi << 4) | v));
            hi = -1;
        }
    }
    return out;
}

std::optional<MacAddress> MacAddress::parse(std::string_view text) {
    MacAddress mac;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        if (pos + 2 > text.size()) return std::nullopt;
        int hi = hex_value(text[pos]);
        int lo = hex_value(text[pos + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        mac.octets[i] = static_cast<std::uint8_t>((hi << 4) | lo);
        pos += 2;
        if (i < 5) {
            if (pos >= text.size() || (text[pos] != ':' && text[pos] != '-')) return std::nullopt;
            ++pos;
        }
    }
    if (pos != text.size()) return std::nullopt;
    return mac;
}

std::uint64_t MacAddress::to_u64() const {
    std::uint64_t v = 0;
    for (auto o : octets) v = (v << 8) | o;
    return v;
}

std::string MacAddress::to_string() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets[0], octets[1], octets[2],
                  octets[3], octets[4], octets[5]);
    return buf;
}

std::uint64_t Sci::to_u64() const { return (system_id.to_u64() << 16) | port; }

Sci Sci::from_u64(std::uint64_t v) {
    Sci sci;
    sci.port = static_cast<std::uint16_t>(v);
    v >>= 16;
    for (int i = 5; i >= 0; --i, v >>= 8) sci.system_id.octets[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
    return sci;
}

void Sci::write(std::uint8_t* out) const {
    std::memcpy(out, system_id.octets.data(), 6);
    store_be16(out + 6, port);
}

Sci Sci::read(const std::uint8_t* in) {
    Sci sci;
    std::memcpy(sci.system_id.octets.data(), in, 6);
    sci.port = load_be16(in + 6);
    return sci;
}

std::uint8_t Tci::to_byte() const {
    std::uint8_t b = an & kAnMask;
    if (v) b |= kV;
    if (es) b |= kEs;
    if (sc) b |= kSc;
    if (scb) b |= kScb;
    if (e) b |= kE;
    if (c) b |= kC;
    return b;
}

Tci Tci::from_byte(std::uint8_t b) {
    Tci t;
    t.v = b & kV;
    t.es = b & kEs;
    t.sc = b & kSc;
    t.scb = b & kScb;
    t.e = b & kE;
    t.c = b & kC;
    t.an = b & kAnMask;
    return t;
}

std::string_view to_string(CodecError e) {
    switch (e) {
        case CodecError::TooShort: return "TooShort";
        case CodecError::TooLong: return "TooLong";
        case CodecError::WrongEtherType: return "WrongEtherType";
        case CodecError::ReservedBitsSet: return "ReservedBitsSet";
        case CodecError::ScAbsent: return "ScAbsent";
        case CodecError::BadShortLength: return "BadShortLength";
        case CodecError::InvariantViolation: return "InvariantViolation";
    }
    return "?";
}

Expected<MacsecHeader, CodecError> parse_macsec_header(ByteView bytes) {
    if (bytes.size() < kMinMacsecFrameSize) return CodecError::TooShort;
    if (bytes.size() > kMaxFrameSize) return CodecError::TooLong;
    const std::uint8_t* p = bytes.data();
    if (load_be16(p + kOffEtherType) != kEtherTypeMacsec) return CodecError::WrongEtherType;

    const std::uint8_t tci_byte = p[kOffTci];
    const std::uint8_t sl_byte = p[kOffSl];
    if ((tci_byte & Tci::kV) || (sl_byte & kSlReservedMask)) return CodecError::ReservedBitsSet;
    if (!(tci_byte & Tci::kSc)) return CodecError::ScAbsent;

    const std::size_t secure_len = bytes.size() - kMacsecHeaderSize - kIcvSize;
    if (sl_byte != short_length_for(secure_len)) return CodecError::BadShortLength;

    MacsecHeader h;
    std::memcpy(h.dst.octets.data(), p, 6);
    std::memcpy(h.src.octets.data(), p + 6, 6);
    h.sectag.tci = Tci::from_byte(tci_byte);
    h.sectag.sl = sl_byte;
    h.sectag.pn = load_be32(p + kOffPn);
    h.sectag.sci = Sci::read(p + kOffSci);
    return h;
}

Expected<MacsecFrame, CodecError> parse_macsec(ByteView bytes) {
    auto h = parse_macsec_header(bytes);
    if (!h) return h.error();
    MacsecFrame f;
    f.dst = h->dst;
    f.src = h->src;
    f.sectag = h->sectag;
    const std::size_t secure_len = bytes.size() - kMacsecHeaderSize - kIcvSize;
    f.secure_data.assign(bytes.begin() + kMacsecHeaderSize, bytes.begin() + kMacsecHeaderSize + secure_len);
    std::memcpy(f.icv.data(), bytes.data() + bytes.size() - kIcvSize, kIcvSize);
    return f;
}

void write_macsec_header(const MacsecFrame& frame, std::uint8_t* out) {
    std::memcpy(out, frame.dst.octets.data(), 6);
    std::memcpy(out + 6, frame.src.octets.data(), 6);
    store_be16(out + kOffEtherType, kEtherTypeMacsec);
    out[kOffTci] = frame.sectag.tci.to_byte();
    out[kOffSl] = short_length_for(frame.secure_data.size());
    store_be32(out + kOffPn, frame.sectag.pn);
    frame.sectag.sci.write(out + kOffSci);
}

Expected<Bytes, CodecError> build_macsec(const MacsecFrame& frame) {
    const Tci& t = frame.sectag.tci;
    if (t.an > 3 || t.v || !t.sc) return CodecError::InvariantViolation;
    if (frame.secure_data.size() < kMinSecureData) return CodecError::InvariantViolation;
    if (frame.wire_size() > kMaxFrameSize) return CodecError::InvariantViolation;

    Bytes out(frame.wire_size());
    write_macsec_header(frame, out.data());
    std::memcpy(out.data() + kMacsecHeaderSize, frame.secure_data.data(), frame.secure_data.size());
    std::memcpy(out.data() + out.size() - kIcvSize, frame.icv.data(), kIcvSize);
    return out;
}

std::optional<std::uint16_t> ethertype_of(ByteView frame) {
    if (frame.size() < kEthHeaderSize) return std::nullopt;
    return load_be16(frame.data() + kOffEtherType);
}

bool is_mka(ByteView frame) { return ethertype_of(frame) == kEtherTypeEapol; }

Bytes build_plain(const PlainFrame& frame) {
    Bytes out;
    out.reserve(kEthHeaderSize + frame.payload.size());
    out.insert(out.end(), frame.dst.octets.begin(), frame.dst.octets.end());
    out.insert(out.end(), frame.src.octets.begin(), frame.src.octets.end());
    out.push_back(static_cast<std::uint8_t>(frame.ethertype >> 8));
    out.push_back(static_cast<std::uint8_t>(frame.ethertype));
    out.insert(out.end(), frame.payload.begin(), frame.payload.end());
    return out;
}

Expected<PlainFrame, CodecError> parse_plain(ByteView bytes) {
    if (bytes.size() < kEthHeaderSize) return CodecError::TooShort;
    if (bytes.size() > kMaxFrameSize) return CodecError::TooLong;
    PlainFrame f;
    std::memcpy(f.dst.octets.data(), bytes.data(), 6);
    std::memcpy(f.src.octets.data(), bytes.data() + 6, 6);
    f.ethertype = load_be16(bytes.data() + 12);
    f.payload.assign(bytes.begin() + kEthHeaderSize, bytes.end());
    return f;
}

FieldLocation locate(FrameField field, std::size_t frame_size) {
    switch (field) {
        case FrameField::Dst: return {0, 6, 0xff};
        case FrameField::Src: return {6, 6, 0xff};
        case FrameField::EtherType: return {kOffEtherType, 2, 0xff};
        case FrameField::TciFlags: return {kOffTci, 1, static_cast<std::uint8_t>(~Tci::kAnMask)};
        case FrameField::An: return {kOffTci, 1, Tci::kAnMask};
        case FrameField::Sl: return {kOffSl, 1, 0xff};
        case FrameField::Pn: return {kOffPn, 4, 0xff};
        case FrameField::Sci: return {kOffSci, 8, 0xff};
        case FrameField::SecureData:
            return {kMacsecHeaderSize, frame_size - kMacsecHeaderSize - kIcvSize, 0xff};
        case FrameField::Icv: return {frame_size - kIcvSize, kIcvSize, 0xff};
    }
    return {0, 0, 0};
}

std::string_view to_string(FrameField f) {
    switch (f) {
        case FrameField::Dst: return "dst";
        case FrameField::Src: return "src";
        case FrameField::EtherType: return "ethertype";
        case FrameField::TciFlags: return "tci";
        case FrameField::An: return "an";
        case FrameField::Sl: return "sl";
        case FrameField::Pn: return "pn";
        case FrameField::Sci: return "sci";
        case FrameField::SecureData: return "secure_data";
        case FrameField::Icv: return "icv";
    }
    return "?";
}

}  // namespace mtun

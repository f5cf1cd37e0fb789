// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/mgmt.hpp"

#include <cstring>

namespace mtun {

namespace {

class Writer {
public:
    explicit Writer(Bytes& out) : out_(out) {}
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        u8(static_cast<std::uint8_t>(v >> 8));
        u8(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }
    void raw(ByteView b) { append(out_, b); }
    void mac(const MacAddress& m) { raw(m.octets); }
    void sci(const Sci& s) {
        mac(s.system_id);
        u16(s.port);
    }
    void gateway(const GatewayId& g) {
        u32(g.ipv4);
        u16(g.port);
    }

private:
    Bytes& out_;
};

class Reader {
public:
    explicit Reader(ByteView in) : in_(in) {}
    std::uint8_t u8() { return in_[pos_++]; }
    std::uint16_t u16() {
        auto v = load_be16(in_.data() + pos_);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        auto v = load_be32(in_.data() + pos_);
        pos_ += 4;
        return v;
    }
    template <std::size_t N>
    void raw(std::array<std::uint8_t, N>& out) {
        std::memcpy(out.data(), in_.data() + pos_, N);
        pos_ += N;
    }
    MacAddress mac() {
        MacAddress m;
        raw(m.octets);
        return m;
    }
    Sci sci() {
        Sci s = Sci::read(in_.data() + pos_);
        pos_ += 8;
        return s;
    }
    GatewayId gateway() {
        GatewayId g;
        g.ipv4 = u32();
        g.port = u16();
        return g;
    }

private:
    ByteView in_;
    std::size_t pos_ = 0;
};

constexpr std::size_t kHelloSize = 6;
constexpr std::size_t kAnnounceSize = 16 + 6 + 6 + 8 + 1 + 4 + 1;
constexpr std::size_t kLearnedSize = 16 + 6 + 6 + 8 + 1 + 6;
constexpr std::size_t kExpireSize = 16;
constexpr std::size_t kRekeySize = 17;
constexpr std::size_t kAckSize = 17;

bool valid_kind(std::uint8_t k) { return k >= 1 && k <= 7; }

Expected<MgmtMessage, MgmtError> decode_body(MgmtKind kind, ByteView body) {
    auto need = [&](std::size_t n) { return body.size() == n; };
    Reader r(body);
    switch (kind) {
        case MgmtKind::Hello: {
            if (!need(kHelloSize)) return MgmtError::BadLength;
            return MgmtMessage{HelloMsg{r.gateway()}};
        }
        case MgmtKind::FlowAnnounce: {
            if (!need(kAnnounceSize)) return MgmtError::BadLength;
            FlowAnnounceMsg m;
            r.raw(m.bidf.value);
            m.header.dst = r.mac();
            m.header.src = r.mac();
            m.header.sci = r.sci();
            m.header.an = r.u8();
            m.pn = r.u32();
            const std::uint8_t cast = r.u8();
            if (m.header.an > 3 || m.pn == 0 || cast > 1) return MgmtError::InvalidField;
            m.broadcast = cast == 1;
            return MgmtMessage{m};
        }
        case MgmtKind::FlowLearned: {
            if (!need(kLearnedSize)) return MgmtError::BadLength;
            FlowLearnedMsg m;
            r.raw(m.bidf.value);
            m.header.dst = r.mac();
            m.header.src = r.mac();
            m.header.sci = r.sci();
            m.header.an = r.u8();
            m.learner = r.gateway();
            if (m.header.an > 3) return MgmtError::InvalidField;
            return MgmtMessage{m};
        }
        case MgmtKind::FlowExpire: {
            if (!need(kExpireSize)) return MgmtError::BadLength;
            FlowExpireMsg m;
            r.raw(m.bidf.value);
            return MgmtMessage{m};
        }
        case MgmtKind::Rekey: {
            if (!need(kRekeySize)) return MgmtError::BadLength;
            RekeyMsg m;
            m.epoch = r.u8();
            r.raw(m.key);
            return MgmtMessage{m};
        }
        case MgmtKind::MkaForward: {
            if (body.size() < kEthHeaderSize || body.size() > kMaxFrameSize) return MgmtError::BadLength;
            if (!is_mka(body)) return MgmtError::InvalidField;
            return MgmtMessage{MkaForwardMsg{Bytes(body.begin(), body.end())}};
        }
        case MgmtKind::Ack: {
            if (!need(kAckSize)) return MgmtError::BadLength;
            AckMsg m;
            const std::uint8_t acked = r.u8();
            if (acked != static_cast<std::uint8_t>(MgmtKind::FlowAnnounce) &&
                acked != static_cast<std::uint8_t>(MgmtKind::Rekey))
                return MgmtError::InvalidField;
            m.acked = static_cast<MgmtKind>(acked);
            r.raw(m.reference);
            return MgmtMessage{m};
        }
    }
    return MgmtError::UnknownKind;
}

}  // namespace

std::string_view to_string(MgmtKind k) {
    switch (k) {
        case MgmtKind::Hello: return "HELLO";
        case MgmtKind::FlowAnnounce: return "FLOW_ANNOUNCE";
        case MgmtKind::FlowLearned: return "FLOW_LEARNED";
        case MgmtKind::FlowExpire: return "FLOW_EXPIRE";
        case MgmtKind::Rekey: return "REKEY";
        case MgmtKind::MkaForward: return "MKA_FORWARD";
        case MgmtKind::Ack: return "ACK";
    }
    return "?";
}

std::string_view to_string(MgmtError e) {
    switch (e) {
        case MgmtError::BadMagic: return "BadMagic";
        case MgmtError::BadVersion: return "BadVersion";
        case MgmtError::UnknownKind: return "UnknownKind";
        case MgmtError::BadLength: return "BadLength";
        case MgmtError::Truncated: return "Truncated";
        case MgmtError::InvalidField: return "InvalidField";
    }
    return "?";
}

MgmtKind kind_of(const MgmtMessage& m) {
    return std::visit(
        [](const auto& v) -> MgmtKind {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, HelloMsg>) return MgmtKind::Hello;
            if constexpr (std::is_same_v<T, FlowAnnounceMsg>) return MgmtKind::FlowAnnounce;
            if constexpr (std::is_same_v<T, FlowLearnedMsg>) return MgmtKind::FlowLearned;
            if constexpr (std::is_same_v<T, FlowExpireMsg>) return MgmtKind::FlowExpire;
            if constexpr (std::is_same_v<T, RekeyMsg>) return MgmtKind::Rekey;
            if constexpr (std::is_same_v<T, MkaForwardMsg>) return MgmtKind::MkaForward;
            if constexpr (std::is_same_v<T, AckMsg>) return MgmtKind::Ack;
        },
        m);
}

Bytes encode(const MgmtMessage& m) {
    Bytes out;
    Writer w(out);
    w.u16(kMgmtMagic);
    w.u8(kMgmtVersion);
    w.u8(static_cast<std::uint8_t>(kind_of(m)));
    w.u32(0);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, HelloMsg>) {
                w.gateway(v.gateway);
            } else if constexpr (std::is_same_v<T, FlowAnnounceMsg>) {
                w.raw(v.bidf.value);
                w.mac(v.header.dst);
                w.mac(v.header.src);
                w.sci(v.header.sci);
                w.u8(v.header.an);
                w.u32(v.pn);
                w.u8(v.broadcast ? 1 : 0);
            } else if constexpr (std::is_same_v<T, FlowLearnedMsg>) {
                w.raw(v.bidf.value);
                w.mac(v.header.dst);
                w.mac(v.header.src);
                w.sci(v.header.sci);
                w.u8(v.header.an);
                w.gateway(v.learner);
            } else if constexpr (std::is_same_v<T, FlowExpireMsg>) {
                w.raw(v.bidf.value);
            } else if constexpr (std::is_same_v<T, RekeyMsg>) {
                w.u8(v.epoch);
                w.raw(v.key);
            } else if constexpr (std::is_same_v<T, MkaForwardMsg>) {
                w.raw(v.frame);
            } else if constexpr (std::is_same_v<T, AckMsg>) {
                w.u8(static_cast<std::uint8_t>(v.acked));
                w.raw(v.reference);
            }
        },
        m);
    store_be32(out.data() + 4, static_cast<std::uint32_t>(out.size() - kMgmtHeaderSize));
    return out;
}

namespace {

// Validates a header; returns the body length.
Expected<std::size_t, MgmtError> check_header(const std::uint8_t* p) {
    if (load_be16(p) != kMgmtMagic) return MgmtError::BadMagic;
    if (p[2] != kMgmtVersion) return MgmtError::BadVersion;
    if (!valid_kind(p[3])) return MgmtError::UnknownKind;
    const std::uint32_t len = load_be32(p + 4);
    if (len > kMgmtMaxBody) return MgmtError::BadLength;
    return std::size_t{len};
}

}  // namespace

Expected<MgmtMessage, MgmtError> decode_mgmt(ByteView bytes) {
    if (bytes.size() < kMgmtHeaderSize) return MgmtError::Truncated;
    auto len = check_header(bytes.data());
    if (!len) return len.error();
    if (bytes.size() < kMgmtHeaderSize + *len) return MgmtError::Truncated;
    if (bytes.size() > kMgmtHeaderSize + *len) return MgmtError::BadLength;
    return decode_body(static_cast<MgmtKind>(bytes[3]), bytes.subspan(kMgmtHeaderSize));
}

void MgmtStreamDecoder::feed(ByteView bytes) {
    if (failed_) return;
    if (pos_ > 0 && pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    } else if (pos_ > 4096) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
        pos_ = 0;
    }
    append(buf_, bytes);
}

std::optional<Expected<MgmtMessage, MgmtError>> MgmtStreamDecoder::next() {
    if (failed_) return std::nullopt;
    if (buffered() < kMgmtHeaderSize) return std::nullopt;
    const std::uint8_t* p = buf_.data() + pos_;
    auto len = check_header(p);
    if (!len) {
        failed_ = len.error();
        return Expected<MgmtMessage, MgmtError>(len.error());
    }
    if (buffered() < kMgmtHeaderSize + *len) return std::nullopt;
    auto msg = decode_body(static_cast<MgmtKind>(p[3]), ByteView(p + kMgmtHeaderSize, *len));
    pos_ += kMgmtHeaderSize + *len;
    return msg;
}

}  // namespace mtun

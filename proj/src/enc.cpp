// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/enc.hpp"

#include <algorithm>
#include <cstring>

namespace mtun {

namespace {

Block xor3(const Block& a, const Block& b, const Block& c) {
    Block out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] ^ b[i] ^ c[i];
    return out;
}

}  // namespace

HeaderBlocks HeaderBlocks::from_frame(ByteView frame) {
    HeaderBlocks b;
    std::memcpy(b.p1.data(), frame.data(), 16);
    std::memcpy(b.p2.data(), frame.data() + 16, 16);
    return b;
}

void HeaderBlocks::write(std::uint8_t* out) const {
    std::memcpy(out, p1.data(), 16);
    std::memcpy(out + 16, p2.data(), 16);
}

CipherBlocks HeaderCipher::encrypt(const HeaderBlocks& p) const {
    CipherBlocks c;
    c.c2 = aes_.encrypt(p.p2);
    c.c1 = aes_.encrypt(xor3(p.p1, p.p2, c.c2));
    block_ops_ += 2;
    return c;
}

HeaderBlocks HeaderCipher::decrypt(const CipherBlocks& c) const {
    HeaderBlocks p;
    p.p2 = aes_.decrypt(c.c2);
    p.p1 = xor3(aes_.decrypt(c.c1), p.p2, c.c2);
    block_ops_ += 2;
    return p;
}

CipherBlocks header_encrypt(const HeaderBlocks& blocks, const TunnelKey& key) {
    return HeaderCipher(key).encrypt(blocks);
}

HeaderBlocks header_decrypt(const CipherBlocks& c, const TunnelKey& key) { return HeaderCipher(key).decrypt(c); }

std::string_view to_string(EncError e) {
    switch (e) {
        case EncError::Malformed: return "Malformed";
        case EncError::UnregisteredFlow: return "UnregisteredFlow";
        case EncError::UnknownFlow: return "UnknownFlow";
        case EncError::HeaderMismatch: return "HeaderMismatch";
        case EncError::BadEpoch: return "BadEpoch";
        case EncError::Replay: return "Replay";
        case EncError::OutOfWindow: return "OutOfWindow";
    }
    return "?";
}

Bytes serialize(const EncWireFrame& wire) {
    Bytes out(wire.wire_size());
    out[0] = wire.epoch;
    std::memcpy(out.data() + 1, wire.c1.data(), 16);
    std::memcpy(out.data() + 17, wire.c2.data(), 16);
    std::memcpy(out.data() + kEncHeaderSize, wire.tail.data(), wire.tail.size());
    return out;
}

Expected<EncWireFrame, EncError> parse_enc_wire(ByteView body) {
    if (body.size() < kEncMinBodySize || body.size() > kMaxFrameSize + kEncSizeDelta) return EncError::Malformed;
    EncWireFrame w;
    w.epoch = body[0];
    std::memcpy(w.c1.data(), body.data() + 1, 16);
    std::memcpy(w.c2.data(), body.data() + 17, 16);
    w.tail.assign(body.begin() + kEncHeaderSize, body.end());
    return w;
}

Expected<EncWireFrame, EncError> uplink_encode(const MacsecFrame& frame, const UplinkFlowEntry& entry,
                                               const HeaderCipher& cipher) {
    if (!entry.find_leg(frame.dst, frame.src)) return EncError::UnregisteredFlow;
    auto bytes = build_macsec(frame);
    if (!bytes) return EncError::Malformed;
    Bytes body;
    enc_encode_into(*bytes, cipher, body);
    return parse_enc_wire(body);
}

void enc_encode_into(ByteView frame, const HeaderCipher& cipher, Bytes& out) {
    const CipherBlocks c = cipher.encrypt(HeaderBlocks::from_frame(frame));
    std::uint8_t header[kEncHeaderSize];
    header[0] = cipher.epoch();
    std::memcpy(header + 1, c.c1.data(), 16);
    std::memcpy(header + 17, c.c2.data(), 16);
    append(out, header);
    append(out, frame.subspan(kEncBlockBytes));
}

// ---------------------------------------------------------------------------

EncReceiver::AddResult EncReceiver::add_flow(const Bidf& bidf, const HeaderData& header, std::uint32_t pn,
                                             Timestamp now, const GatewayId& origin) {
    if (pn == 0) return AddResult::Duplicate;
    AddResult result = AddResult::Created;
    if (DownlinkFlowEntry* existing = flows_.find(bidf)) {
        if (pn <= existing->announced_pn) return AddResult::Duplicate;
        remove_flow(bidf);
        result = AddResult::Reset;
    }
    DownlinkFlowEntry& flow = flows_.insert(bidf, header, pn, window_, now);
    flow.origin = origin;
    flow.announced_pn = pn;
    by_key_[header.flow_key()].push_back(bidf);
    return result;
}

bool EncReceiver::remove_flow(const Bidf& bidf) {
    DownlinkFlowEntry* flow = flows_.find(bidf);
    if (!flow) return false;
    auto it = by_key_.find(flow->header.flow_key());
    if (it != by_key_.end()) {
        std::erase(it->second, bidf);
        if (it->second.empty()) by_key_.erase(it);
    }
    return flows_.erase(bidf);
}

void EncReceiver::install_key(const GatewayId& peer, const TunnelKey& key, Timestamp now) {
    keys_.try_emplace(peer, grace_).first->second.install(key, now);
}

const EncKeyring* EncReceiver::keyring(const GatewayId& peer) const {
    auto it = keys_.find(peer);
    return it == keys_.end() ? nullptr : &it->second;
}

std::uint64_t EncReceiver::block_ops() const {
    std::uint64_t n = 0;
    for (const auto& [peer, ring] : keys_) n += ring.block_ops();
    return n;
}

DownlinkFlowEntry* EncReceiver::match(const std::uint8_t* h, std::size_t frame_size, const GatewayId& peer,
                                      EncError& why) {
    why = EncError::HeaderMismatch;
    if (load_be16(h + 12) != kEtherTypeMacsec) return nullptr;
    const std::uint8_t tci = h[14];
    const std::uint8_t sl = h[15];
    if ((tci & Tci::kV) || !(tci & Tci::kSc)) return nullptr;
    if (sl != short_length_for(frame_size - kMacsecHeaderSize - kIcvSize)) return nullptr;
    if (load_be32(h + 16) == 0) return nullptr;

    FlowKey key;
    std::memcpy(key.dst.octets.data(), h, 6);
    key.an = tci & Tci::kAnMask;
    key.sci = Sci::read(h + 20);
    auto it = by_key_.find(key);
    if (it == by_key_.end()) {
        why = EncError::UnknownFlow;
        return nullptr;
    }
    for (const Bidf& id : it->second) {
        DownlinkFlowEntry* flow = flows_.find(id);
        if (flow && flow->origin == peer && std::memcmp(flow->header.src.octets.data(), h + 6, 6) == 0) return flow;
    }
    return nullptr;
}

Expected<std::monostate, EncError> EncReceiver::try_key(ByteView body, const GatewayId& peer,
                                                        const HeaderCipher& cipher, Timestamp now, Bytes& out) {
    CipherBlocks c;
    std::memcpy(c.c1.data(), body.data() + 1, 16);
    std::memcpy(c.c2.data(), body.data() + 17, 16);
    const HeaderBlocks p = cipher.decrypt(c);
    std::uint8_t header[kEncBlockBytes];
    p.write(header);

    const std::size_t frame_size = body.size() - 1;
    EncError why;
    DownlinkFlowEntry* flow = match(header, frame_size, peer, why);
    if (!flow) return why;

    const WindowResult r = flows_.accept(*flow, load_be32(header + 16), now, [](auto&, const auto&) {});
    if (r == WindowResult::Replay) return EncError::Replay;
    if (r == WindowResult::OutOfWindow) return EncError::OutOfWindow;

    append(out, header);
    append(out, body.subspan(kEncHeaderSize));
    return std::monostate{};
}

Expected<std::monostate, EncError> EncReceiver::decode_into(ByteView body, const std::optional<GatewayId>& peer,
                                                            Timestamp now, Bytes& out) {
    if (body.size() < kEncMinBodySize || body.size() > kMaxFrameSize + kEncSizeDelta) return EncError::Malformed;
    const std::uint8_t epoch = body[0];
    if (peer) {
        auto it = keys_.find(*peer);
        const HeaderCipher* cipher = it == keys_.end() ? nullptr : it->second.lookup(epoch, now);
        if (!cipher) return EncError::BadEpoch;
        return try_key(body, *peer, *cipher, now, out);
    }
    EncError best = EncError::BadEpoch;
    for (const auto& [id, ring] : keys_) {
        const HeaderCipher* cipher = ring.lookup(epoch, now);
        if (!cipher) continue;
        auto r = try_key(body, id, *cipher, now, out);
        if (r) return r;
        // Window verdicts come from a matched header and outrank lookup misses.
        if (best == EncError::BadEpoch || r.error() == EncError::Replay || r.error() == EncError::OutOfWindow)
            best = r.error();
    }
    return best;
}

Expected<MacsecFrame, EncError> EncReceiver::downlink_decode(const EncWireFrame& wire, const GatewayId& peer,
                                                             Timestamp now) {
    Bytes out;
    auto r = decode_into(serialize(wire), peer, now, out);
    if (!r) return r.error();
    auto frame = parse_macsec(out);
    if (!frame) return EncError::Malformed;
    return std::move(frame).value();
}

}  // namespace mtun

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/fullenc.hpp"

#include <cstring>

namespace mtun {

namespace {

void make_iv(std::uint8_t epoch, std::uint64_t counter, std::uint8_t* iv) {
    iv[0] = epoch;
    iv[1] = iv[2] = iv[3] = 0;
    store_be64(iv + 4, counter);
}

}  // namespace

bool FullEncCipher::seal_into(ByteView frame, Bytes& out) {
    if (tx_counter_ >= kMaxPn) return false;
    const std::uint64_t counter = ++tx_counter_;
    const std::size_t base = out.size();
    out.resize(base + kFullEncOverhead + frame.size());
    std::uint8_t* p = out.data() + base;
    p[0] = epoch_;
    store_be64(p + 1, counter);
    std::uint8_t iv[AesGcm128::kIvSize];
    make_iv(epoch_, counter, iv);
    const Block tag = gcm_.seal(iv, ByteView(p, kFullEncPrefix), frame, MutableByteView(p + kFullEncPrefix, frame.size()));
    std::memcpy(p + kFullEncPrefix + frame.size(), tag.data(), tag.size());
    block_ops_ += fullenc_block_ops(frame.size());
    return true;
}

std::optional<std::uint64_t> FullEncCipher::open_into(ByteView body, Bytes& out) const {
    const std::size_t n = body.size() - kFullEncOverhead;
    const std::uint64_t counter = load_be64(body.data() + 1);
    std::uint8_t iv[AesGcm128::kIvSize];
    make_iv(body[0], counter, iv);
    Block tag;
    std::memcpy(tag.data(), body.data() + body.size() - tag.size(), tag.size());
    const std::size_t base = out.size();
    out.resize(base + n);
    block_ops_ += fullenc_block_ops(n);
    if (!gcm_.open(iv, body.first(kFullEncPrefix), body.subspan(kFullEncPrefix, n), tag,
                   MutableByteView(out.data() + base, n))) {
        out.resize(base);
        return std::nullopt;
    }
    return counter;
}

std::string_view to_string(FullEncError e) {
    switch (e) {
        case FullEncError::Malformed: return "Malformed";
        case FullEncError::BadEpoch: return "BadEpoch";
        case FullEncError::AuthFailed: return "AuthFailed";
        case FullEncError::Replay: return "Replay";
        case FullEncError::OutOfWindow: return "OutOfWindow";
    }
    return "?";
}

void FullEncReceiver::install_key(const GatewayId& peer, const TunnelKey& key, Timestamp now) {
    keys_.try_emplace(peer, grace_).first->second.install(key, now);
}

const FullEncKeyring* FullEncReceiver::keyring(const GatewayId& peer) const {
    auto it = keys_.find(peer);
    return it == keys_.end() ? nullptr : &it->second;
}

std::uint64_t FullEncReceiver::block_ops() const {
    std::uint64_t n = 0;
    for (const auto& [peer, ring] : keys_) n += ring.block_ops();
    return n;
}

Expected<std::monostate, FullEncError> FullEncReceiver::try_key(ByteView body, FullEncCipher& cipher, Bytes& out) {
    const std::size_t base = out.size();
    auto counter = cipher.open_into(body, out);
    if (!counter) return FullEncError::AuthFailed;
    if (*counter == 0 || *counter > kMaxPn) {
        out.resize(base);
        return FullEncError::Malformed;
    }
    const WindowStep step = cipher.rx_window().accept(static_cast<std::uint32_t>(*counter));
    if (step.result == WindowResult::Accept) return std::monostate{};
    out.resize(base);
    return step.result == WindowResult::Replay ? FullEncError::Replay : FullEncError::OutOfWindow;
}

Expected<std::monostate, FullEncError> FullEncReceiver::decode_into(ByteView body,
                                                                    const std::optional<GatewayId>& peer,
                                                                    Timestamp now, Bytes& out) {
    if (body.size() < kFullEncOverhead + kMinMacsecFrameSize || body.size() > kFullEncOverhead + kMaxFrameSize)
        return FullEncError::Malformed;
    const std::uint8_t epoch = body[0];
    if (peer) {
        auto it = keys_.find(*peer);
        FullEncCipher* cipher = it == keys_.end() ? nullptr : it->second.lookup(epoch, now);
        if (!cipher) return FullEncError::BadEpoch;
        return try_key(body, *cipher, out);
    }
    FullEncError best = FullEncError::BadEpoch;
    for (auto& [id, ring] : keys_) {
        FullEncCipher* cipher = ring.lookup(epoch, now);
        if (!cipher) continue;
        auto r = try_key(body, *cipher, out);
        if (r) return r;
        if (best == FullEncError::BadEpoch || r.error() != FullEncError::AuthFailed) best = r.error();
    }
    return best;
}

}  // namespace mtun

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/gateway.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace mtun {

namespace {

std::size_t wire_body_size(Scheme s, std::size_t frame_size) {
    switch (s) {
        case Scheme::Naive: return frame_size;
        case Scheme::Idf: return frame_size - (kMacsecHeaderSize - kIdfHeaderSize);
        case Scheme::Enc: return frame_size + 1;
        case Scheme::FullEnc: return frame_size + kFullEncOverhead;
    }
    return frame_size;
}

std::uint32_t frame_pn(ByteView frame) { return load_be32(frame.data() + 16); }

DropReason reason_of(IdfError e) {
    switch (e) {
        case IdfError::Malformed: return DropReason::Malformed;
        case IdfError::UnregisteredFlow: return DropReason::UnknownIdentifier;
        case IdfError::UnknownIdentifier: return DropReason::UnknownIdentifier;
        case IdfError::Replay: return DropReason::Replay;
        case IdfError::OutOfWindow: return DropReason::OutOfWindow;
    }
    return DropReason::Malformed;
}

DropReason reason_of(EncError e) {
    switch (e) {
        case EncError::Malformed: return DropReason::Malformed;
        case EncError::UnregisteredFlow: return DropReason::UnknownFlow;
        case EncError::UnknownFlow: return DropReason::UnknownFlow;
        case EncError::HeaderMismatch: return DropReason::HeaderMismatch;
        case EncError::BadEpoch: return DropReason::BadEpoch;
        case EncError::Replay: return DropReason::Replay;
        case EncError::OutOfWindow: return DropReason::OutOfWindow;
    }
    return DropReason::Malformed;
}

DropReason reason_of(FullEncError e) {
    switch (e) {
        case FullEncError::Malformed: return DropReason::Malformed;
        case FullEncError::BadEpoch: return DropReason::BadEpoch;
        case FullEncError::AuthFailed: return DropReason::AuthFailed;
        case FullEncError::Replay: return DropReason::Replay;
        case FullEncError::OutOfWindow: return DropReason::OutOfWindow;
    }
    return DropReason::Malformed;
}

}  // namespace

std::string GatewayConfig::validate() const {
    if (peers.empty()) return "at least one peer is required";
    for (std::size_t i = 0; i < peers.size(); ++i) {
        if (peers[i] == self) return "peer list contains the gateway itself: " + self.to_string();
        for (std::size_t j = 0; j < i; ++j)
            if (peers[i] == peers[j]) return "duplicate peer " + peers[i].to_string();
    }
    if (window == 0 || window > 4096) return "window must lie in [1, 4096]";
    if (flow_timeout <= Duration::zero()) return "flow timeout must be positive";
    if (queue_limit == 0) return "queue limit must be positive";
    if (path_mtu < kIpUdpOverhead + kEncapHeaderSize + kMinMacsecFrameSize + kFullEncOverhead)
        return "path MTU too small";
    if (rekey_grace < Duration::zero()) return "rekey grace must not be negative";
    if (retransmit_initial <= Duration::zero() || retransmit_max < retransmit_initial)
        return "retransmit intervals invalid";
    return {};
}

std::string_view to_string(DropReason r) {
    switch (r) {
        case DropReason::NotMacsec: return "NotMacsec";
        case DropReason::UnsupportedShape: return "UnsupportedShape";
        case DropReason::BadEncap: return "BadEncap";
        case DropReason::SchemeMismatch: return "SchemeMismatch";
        case DropReason::UnknownPeer: return "UnknownPeer";
        case DropReason::Malformed: return "Malformed";
        case DropReason::UnknownIdentifier: return "UnknownIdentifier";
        case DropReason::UnknownFlow: return "UnknownFlow";
        case DropReason::HeaderMismatch: return "HeaderMismatch";
        case DropReason::BadEpoch: return "BadEpoch";
        case DropReason::AuthFailed: return "AuthFailed";
        case DropReason::Replay: return "Replay";
        case DropReason::OutOfWindow: return "OutOfWindow";
        case DropReason::TooLarge: return "TooLarge";
        case DropReason::UnregisteredQueueOverflow: return "UnregisteredQueueOverflow";
        case DropReason::NoTunnelKey: return "NoTunnelKey";
        case DropReason::MgmtMalformed: return "MgmtMalformed";
        case DropReason::MkaBufferOverflow: return "MkaBufferOverflow";
        case DropReason::kCount: break;
    }
    return "?";
}

std::uint64_t GatewayStats::total_drops() const {
    std::uint64_t n = 0;
    for (auto d : drops) n += d;
    return n;
}

std::vector<std::pair<std::string, std::uint64_t>> GatewayStats::counters() const {
    std::vector<std::pair<std::string, std::uint64_t>> c = {
        {"lan_frames_in", lan_frames_in},
        {"lan_frames_out", lan_frames_out},
        {"lan_bytes_in", lan_bytes_in},
        {"lan_bytes_out", lan_bytes_out},
        {"frames_tunneled", frames_tunneled},
        {"frames_reconstructed", frames_reconstructed},
        {"frames_local", frames_local},
        {"datagrams_out", datagrams_out},
        {"datagrams_in", datagrams_in},
        {"tunnel_bytes_out", tunnel_bytes_out},
        {"tunnel_bytes_in", tunnel_bytes_in},
        {"mka_forwarded", mka_forwarded},
        {"mka_received", mka_received},
        {"mgmt_out", mgmt_out},
        {"mgmt_in", mgmt_in},
        {"announces_sent", announces_sent},
        {"announce_retransmits", announce_retransmits},
        {"learned_sent", learned_sent},
        {"learned_conflicts", learned_conflicts},
        {"expires_sent", expires_sent},
        {"flows_expired", flows_expired},
        {"rekeys", rekeys},
        {"rekey_timeouts", rekey_timeouts},
        {"hash_uplink", hash_uplink},
        {"hash_downlink", hash_downlink},
        {"block_ops_uplink", block_ops_uplink},
        {"block_ops_downlink", block_ops_downlink},
        {"identifier_collisions", identifier_collisions},
    };
    for (std::size_t i = 0; i < kDropReasonCount; ++i)
        c.emplace_back("drop_" + std::string(to_string(static_cast<DropReason>(i))), drops[i]);
    return c;
}

std::string GatewayStats::csv_header() {
    std::ostringstream os;
    bool first = true;
    for (const auto& [name, v] : GatewayStats{}.counters()) {
        os << (first ? "" : ",") << name;
        first = false;
    }
    return os.str();
}

std::string GatewayStats::csv_row() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [name, v] : counters()) {
        os << (first ? "" : ",") << v;
        first = false;
    }
    return os.str();
}

// ---------------------------------------------------------------------------

Gateway::Gateway(GatewayConfig config, GatewayIo& io)
    : config_(std::move(config)),
      io_(io),
      idf_(config_.window),
      enc_(config_.window, config_.rekey_grace),
      full_(config_.rekey_grace) {
    if (auto err = config_.validate(); !err.empty()) throw std::invalid_argument(err);
    peers_.reserve(config_.peers.size());
    for (std::size_t i = 0; i < config_.peers.size(); ++i) {
        peers_.emplace_back(config_.peers[i], config_.rekey_grace);
        peer_index_.emplace(config_.peers[i], i);
    }
    idf_.flows().set_binding_enabled(config_.binding);
    enc_.flows().set_binding_enabled(config_.binding);
}

std::vector<Gateway::LegTx*> Gateway::sorted_legs() {
    std::vector<LegTx*> out;
    out.reserve(legs_.size());
    for (auto& [bidf, leg] : legs_) out.push_back(&leg);
    std::sort(out.begin(), out.end(), [](const LegTx* a, const LegTx* b) { return a->announce.bidf < b->announce.bidf; });
    return out;
}

std::optional<std::size_t> Gateway::peer_index(const GatewayId& id) const {
    auto it = peer_index_.find(id);
    if (it == peer_index_.end()) return std::nullopt;
    return it->second;
}

bool Gateway::send_mgmt(PeerState& peer, const MgmtMessage& msg) {
    const Bytes bytes = encode(msg);
    if (!io_.mgmt_send(peer.id, bytes)) return false;
    ++stats_.mgmt_out;
    return true;
}

void Gateway::start(Timestamp now) {
    if (started_) return;
    started_ = true;
    last_hello_ = now;
    for (auto& peer : peers_) {
        send_mgmt(peer, HelloMsg{config_.self});
        if (config_.scheme == Scheme::Enc || config_.scheme == Scheme::FullEnc) start_rekey(peer, now);
    }
}

// ---------------------------------------------------------------------------
// LAN side

void Gateway::on_lan_frame(ByteView frame, Timestamp now) {
    ++stats_.lan_frames_in;
    stats_.lan_bytes_in += frame.size();
    if (is_mka(frame)) {
        forward_mka(frame);
        return;
    }
    auto h = parse_macsec_header(frame);
    if (!h) {
        drop(DropReason::NotMacsec);
        return;
    }
    const Tci& t = h->sectag.tci;
    if (!t.e || t.c || t.es || t.scb) {
        drop(DropReason::UnsupportedShape);
        return;
    }
    if (h->sectag.pn == 0 || h->src.is_multicast()) {
        drop(DropReason::Malformed);
        return;
    }
    local_macs_.insert(h->src);
    if (!h->dst.is_multicast() && local_macs_.contains(h->dst)) {
        ++stats_.frames_local;
        return;
    }
    if (wire_body_size(config_.scheme, frame.size()) > max_encap_body(config_.path_mtu)) {
        drop(DropReason::TooLarge);
        return;
    }
    if (config_.scheme == Scheme::Naive || config_.scheme == Scheme::FullEnc) {
        uplink_by_mac(frame, *h);
    } else {
        check_learning(*h);
        uplink_flow(frame, *h, now);
    }
}

void Gateway::forward_mka(ByteView frame) {
    for (auto& peer : peers_) {
        if (peer.mka_buffer.size() >= config_.mka_buffer) {
            peer.mka_buffer.pop_front();
            drop(DropReason::MkaBufferOverflow);
        }
        peer.mka_buffer.emplace_back(frame.begin(), frame.end());
        flush_mka(peer);
    }
}

void Gateway::flush_mka(PeerState& peer) {
    while (!peer.mka_buffer.empty()) {
        if (!send_mgmt(peer, MkaForwardMsg{peer.mka_buffer.front()})) return;
        peer.mka_buffer.pop_front();
        ++stats_.mka_forwarded;
    }
}

void Gateway::enqueue(std::deque<Bytes>& q, ByteView frame) {
    if (q.size() >= config_.queue_limit) {
        q.pop_front();
        drop(DropReason::UnregisteredQueueOverflow);
    }
    q.emplace_back(frame.begin(), frame.end());
}

bool Gateway::encode_for(PeerState& peer, ByteView frame, const Ridf* ridf, Bytes& dgram) {
    dgram.resize(kEncapHeaderSize);
    write_encap_header(dgram.data(), config_.scheme);
    switch (config_.scheme) {
        case Scheme::Naive:
            append(dgram, frame);
            return true;
        case Scheme::Idf:
            idf_encode_into(frame, *ridf, dgram);
            return true;
        case Scheme::Enc: {
            const HeaderCipher* cipher = peer.enc_tx.current();
            if (!cipher) return false;
            enc_encode_into(frame, *cipher, dgram);
            return true;
        }
        case Scheme::FullEnc: {
            FullEncCipher* cipher = peer.full_tx.current();
            return cipher && cipher->seal_into(frame, dgram);
        }
    }
    return false;
}

void Gateway::uplink_by_mac(ByteView frame, const MacsecHeader& h) {
    ++stats_.frames_tunneled;
    auto send_to = [&](PeerState& peer) {
        if (!peer.key_queue.empty() || !encode_for(peer, frame, nullptr, scratch_)) {
            enqueue(peer.key_queue, frame);
            return;
        }
        io_.tunnel_send(peer.id, scratch_);
        ++stats_.datagrams_out;
        stats_.tunnel_bytes_out += scratch_.size();
    };
    if (!h.dst.is_multicast()) {
        if (auto it = remote_macs_.find(h.dst); it != remote_macs_.end()) {
            send_to(peers_[it->second]);
            return;
        }
    }
    for (auto& peer : peers_) send_to(peer);
}

void Gateway::uplink_flow(ByteView frame, const MacsecHeader& h, Timestamp now) {
    const SaKey sa{h.sectag.sci, h.sectag.tci.an};
    UplinkFlowEntry* entry = uplink_.find(sa);
    if (!entry) {
        UplinkFlowEntry fresh;
        io_.random_bytes(fresh.unicast_bidf.value);
        do {
            io_.random_bytes(fresh.broadcast_bidf.value);
        } while (fresh.broadcast_bidf == fresh.unicast_bidf);
        fresh.timeout = now + config_.flow_timeout;
        entry = &uplink_.insert(sa, std::move(fresh), now);
        // An unacknowledged key has carried no traffic yet and covers the new SA too.
        if (config_.scheme == Scheme::Enc)
            for (auto& peer : peers_)
                if (!peer.pending_key) start_rekey(peer, now);
    }
    entry->timeout = now + config_.flow_timeout;

    FlowLeg* flow_leg = entry->find_leg(h.dst, h.src);
    LegTx* leg = nullptr;
    if (!flow_leg) {
        leg = &register_leg(*entry, sa, h, now);
        flow_leg = entry->find_leg(h.dst, h.src);
    } else {
        auto it = legs_.find(flow_leg->bidf);
        if (it == legs_.end()) return;
        leg = &it->second;
    }
    ++stats_.frames_tunneled;
    send_leg_frame(*leg, *flow_leg, frame);
}

Gateway::LegTx& Gateway::register_leg(UplinkFlowEntry& entry, const SaKey& sa, const MacsecHeader& h,
                                      Timestamp now) {
    const bool group = h.dst.is_multicast();
    auto used = [&](const Bidf& b) {
        return std::any_of(entry.legs.begin(), entry.legs.end(), [&](const FlowLeg& l) { return l.bidf == b; });
    };
    Bidf bidf = group ? entry.broadcast_bidf : entry.unicast_bidf;
    while (used(bidf) || legs_.contains(bidf)) io_.random_bytes(bidf.value);

    FlowLeg fl;
    fl.dst = h.dst;
    fl.src = h.src;
    fl.bidf = bidf;
    fl.first_pn = h.sectag.pn;
    entry.legs.push_back(fl);

    LegTx& leg = legs_[bidf];
    leg.sa = sa;
    leg.announce.bidf = bidf;
    leg.announce.header = HeaderData{h.dst, h.src, h.sectag.sci, h.sectag.tci.an};
    leg.announce.pn = h.sectag.pn;
    leg.announce.broadcast = group;
    leg.peers.assign(peers_.size(), PeerLegTx{});
    for (std::size_t i = 0; i < peers_.size(); ++i) send_announce(leg, i, now);
    return leg;
}

void Gateway::send_announce(LegTx& leg, std::size_t i, Timestamp now) {
    PeerLegTx& p = leg.peers[i];
    const bool retransmit = p.backoff > Duration::zero();
    send_mgmt(peers_[i], leg.announce);
    p.last_sent = now;
    p.backoff = retransmit ? std::min(2 * p.backoff, config_.retransmit_max) : config_.retransmit_initial;
    if (retransmit)
        ++stats_.announce_retransmits;
    else
        ++stats_.announces_sent;
}

void Gateway::send_leg_frame(LegTx& leg, const FlowLeg& flow_leg, ByteView frame) {
    std::optional<Ridf> ridf;
    auto send_to = [&](std::size_t i) {
        PeerLegTx& p = leg.peers[i];
        if (!p.acked || !p.queue.empty()) {
            enqueue(p.queue, frame);
            return;
        }
        if (config_.scheme == Scheme::Idf && !ridf) {
            ridf = derive_ridf(flow_leg.bidf, frame_pn(frame));
            ++stats_.hash_uplink;
        }
        if (!encode_for(peers_[i], frame, ridf ? &*ridf : nullptr, scratch_)) {
            enqueue(p.queue, frame);
            return;
        }
        io_.tunnel_send(peers_[i].id, scratch_);
        ++stats_.datagrams_out;
        stats_.tunnel_bytes_out += scratch_.size();
    };
    if (flow_leg.is_group() || flow_leg.remote_gateways.empty()) {
        for (std::size_t i = 0; i < peers_.size(); ++i) send_to(i);
        return;
    }
    for (const GatewayId& g : flow_leg.remote_gateways)
        if (auto i = peer_index(g)) send_to(*i);
}

void Gateway::flush_leg(LegTx& leg, std::size_t i) {
    PeerLegTx& p = leg.peers[i];
    if (!p.acked) return;
    while (!p.queue.empty()) {
        const Bytes& frame = p.queue.front();
        Ridf ridf;
        if (config_.scheme == Scheme::Idf) {
            ridf = derive_ridf(leg.announce.bidf, frame_pn(frame));
            ++stats_.hash_uplink;
        }
        if (!encode_for(peers_[i], frame, &ridf, scratch_)) return;
        io_.tunnel_send(peers_[i].id, scratch_);
        ++stats_.datagrams_out;
        stats_.tunnel_bytes_out += scratch_.size();
        p.queue.pop_front();
    }
}

void Gateway::check_learning(const MacsecHeader& h) {
    if (reverse_.empty() || h.dst.is_multicast()) return;
    auto it = reverse_.find(std::pair{h.dst.to_u64(), h.src.to_u64()});
    if (it == reverse_.end()) return;
    auto pi = peer_index(it->second.origin);
    if (!pi) {
        reverse_.erase(it);
        return;
    }
    const FlowLearnedMsg msg{it->second.bidf, it->second.header, config_.self};
    if (send_mgmt(peers_[*pi], msg)) {
        ++stats_.learned_sent;
        reverse_.erase(it);
    }
}

void Gateway::remember_reverse(const Bidf& bidf, const HeaderData& header, const GatewayId& origin) {
    if (header.dst.is_multicast()) return;
    reverse_[std::pair{header.src.to_u64(), header.dst.to_u64()}] = ReverseRef{bidf, origin, header};
}

void Gateway::forget_reverse(const Bidf& bidf, const HeaderData& header) {
    auto it = reverse_.find(std::pair{header.src.to_u64(), header.dst.to_u64()});
    if (it != reverse_.end() && it->second.bidf == bidf) reverse_.erase(it);
}

// ---------------------------------------------------------------------------
// Tunnel side

void Gateway::on_tunnel_packet(ByteView datagram, const std::optional<GatewayId>& from, Timestamp now) {
    ++stats_.datagrams_in;
    stats_.tunnel_bytes_in += datagram.size();
    auto d = decap(datagram);
    if (!d) {
        drop(DropReason::BadEncap);
        return;
    }
    if (d->scheme != config_.scheme) {
        drop(DropReason::SchemeMismatch);
        return;
    }
    std::optional<std::size_t> pi;
    if (from) pi = peer_index(*from);
    if (config_.filter_peer_source && !pi) {
        drop(DropReason::UnknownPeer);
        return;
    }
    const std::optional<GatewayId> peer = pi ? std::optional<GatewayId>(peers_[*pi].id) : std::nullopt;

    scratch_.clear();
    const ByteView body = d->body;
    switch (config_.scheme) {
        case Scheme::Naive:
        case Scheme::FullEnc: {
            if (config_.scheme == Scheme::Naive) {
                append(scratch_, body);
            } else if (auto r = full_.decode_into(body, peer, now, scratch_); !r) {
                drop(reason_of(r.error()));
                return;
            }
            auto h = parse_macsec_header(scratch_);
            if (!h) {
                drop(DropReason::Malformed);
                return;
            }
            if (pi && !h->src.is_multicast() && !local_macs_.contains(h->src)) remote_macs_[h->src] = *pi;
            break;
        }
        case Scheme::Idf:
            if (auto r = idf_.decode_into(body, now, scratch_); !r) {
                drop(reason_of(r.error()));
                return;
            }
            break;
        case Scheme::Enc:
            if (auto r = enc_.decode_into(body, peer, now, scratch_); !r) {
                drop(reason_of(r.error()));
                return;
            }
            break;
    }
    io_.lan_send(scratch_);
    ++stats_.frames_reconstructed;
    ++stats_.lan_frames_out;
    stats_.lan_bytes_out += scratch_.size();
}

// ---------------------------------------------------------------------------
// Management side

void Gateway::on_mgmt_bytes(const GatewayId& peer, ByteView bytes, Timestamp now) {
    auto pi = peer_index(peer);
    if (!pi) {
        drop(DropReason::UnknownPeer);
        return;
    }
    MgmtStreamDecoder& dec = peers_[*pi].decoder;
    dec.feed(bytes);
    while (auto m = dec.next()) {
        if (!*m) {
            drop(DropReason::MgmtMalformed);
            continue;
        }
        on_mgmt_message(peer, **m, now);
    }
    if (dec.failed()) dec = MgmtStreamDecoder{};
}

void Gateway::reset_mgmt_stream(const GatewayId& peer) {
    if (auto pi = peer_index(peer)) peers_[*pi].decoder = MgmtStreamDecoder{};
}

void Gateway::install_rx_key(const GatewayId& peer, const TunnelKey& key, Timestamp now) {
    if (config_.scheme == Scheme::Enc) enc_.install_key(peer, key, now);
    if (config_.scheme == Scheme::FullEnc) full_.install_key(peer, key, now);
}

void Gateway::remove_downlink(const Bidf& bidf, const std::optional<GatewayId>& origin) {
    const DownlinkFlowTable& table = config_.scheme == Scheme::Idf ? idf_.flows() : enc_.flows();
    const DownlinkFlowEntry* flow = table.find(bidf);
    if (!flow || (origin && flow->origin != *origin)) return;
    forget_reverse(bidf, flow->header);
    if (config_.scheme == Scheme::Idf)
        idf_.remove_flow(bidf);
    else
        enc_.remove_flow(bidf);
    ++stats_.flows_expired;
}

void Gateway::on_mgmt_message(const GatewayId& from, const MgmtMessage& msg, Timestamp now) {
    auto pi = peer_index(from);
    if (!pi) {
        drop(DropReason::UnknownPeer);
        return;
    }
    ++stats_.mgmt_in;
    PeerState& peer = peers_[*pi];
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, HelloMsg>) {
                flush_mka(peer);
            } else if constexpr (std::is_same_v<T, FlowAnnounceMsg>) {
                if (config_.scheme == Scheme::Idf || config_.scheme == Scheme::Enc) {
                    const auto created = config_.scheme == Scheme::Idf
                                             ? idf_.add_flow(m.bidf, m.header, m.pn, now, from) != IdfReceiver::AddResult::Duplicate
                                             : enc_.add_flow(m.bidf, m.header, m.pn, now, from) != EncReceiver::AddResult::Duplicate;
                    if (created) remember_reverse(m.bidf, m.header, from);
                }
                send_mgmt(peer, AckMsg::for_announce(m.bidf));
            } else if constexpr (std::is_same_v<T, FlowLearnedMsg>) {
                UplinkFlowEntry* entry = uplink_.find(m.header.sa());
                FlowLeg* leg = entry ? entry->find_leg(m.header.dst, m.header.src) : nullptr;
                if (!leg || leg->bidf != m.bidf || leg->is_group() || !peer_index(m.learner)) return;
                if (!leg->remote_gateways.empty() &&
                    (leg->remote_gateways.size() != 1 || leg->remote_gateways[0] != m.learner))
                    ++stats_.learned_conflicts;
                leg->remote_gateways = {m.learner};
            } else if constexpr (std::is_same_v<T, FlowExpireMsg>) {
                if (config_.scheme == Scheme::Idf || config_.scheme == Scheme::Enc) remove_downlink(m.bidf, from);
            } else if constexpr (std::is_same_v<T, RekeyMsg>) {
                install_rx_key(from, TunnelKey{m.key, m.epoch}, now);
                send_mgmt(peer, AckMsg::for_rekey(m.epoch));
            } else if constexpr (std::is_same_v<T, MkaForwardMsg>) {
                io_.lan_send(m.frame);
                ++stats_.mka_received;
                ++stats_.lan_frames_out;
                stats_.lan_bytes_out += m.frame.size();
            } else if constexpr (std::is_same_v<T, AckMsg>) {
                if (m.acked == MgmtKind::FlowAnnounce) {
                    auto it = legs_.find(Bidf{m.reference});
                    if (it == legs_.end()) return;
                    it->second.peers[*pi].acked = true;
                    flush_leg(it->second, *pi);
                    return;
                }
                if (!peer.pending_key || peer.pending_key->epoch != m.reference[0]) return;
                if (config_.scheme == Scheme::Enc) peer.enc_tx.install(*peer.pending_key, now);
                if (config_.scheme == Scheme::FullEnc) peer.full_tx.install(*peer.pending_key, now);
                peer.pending_key.reset();
                if (config_.scheme == Scheme::FullEnc) {
                    while (!peer.key_queue.empty()) {
                        if (!encode_for(peer, peer.key_queue.front(), nullptr, scratch_)) break;
                        io_.tunnel_send(peer.id, scratch_);
                        ++stats_.datagrams_out;
                        stats_.tunnel_bytes_out += scratch_.size();
                        peer.key_queue.pop_front();
                    }
                } else {
                    for (LegTx* leg : sorted_legs())
                        if (!leg->peers[*pi].queue.empty()) flush_leg(*leg, *pi);
                }
            }
        },
        msg);
}

void Gateway::start_rekey(PeerState& peer, Timestamp now) {
    TunnelKey key;
    key.epoch = peer.next_epoch++;
    io_.random_bytes(key.key);
    if (!peer.pending_key) {
        peer.rekey_first = now;
        peer.rekey_timed_out = false;
    }
    peer.pending_key = key;
    peer.rekey_last = now;
    peer.rekey_backoff = config_.retransmit_initial;
    ++stats_.rekeys;
    send_mgmt(peer, RekeyMsg{key.epoch, key.key});
}

// ---------------------------------------------------------------------------
// Timer

void Gateway::expire(Timestamp now) {
    for (auto& [sa, entry] : uplink_.expire(now)) {
        for (const FlowLeg& leg : entry.legs) {
            if (config_.propagate_expire) {
                for (auto& peer : peers_)
                    if (send_mgmt(peer, FlowExpireMsg{leg.bidf})) ++stats_.expires_sent;
            }
            legs_.erase(leg.bidf);
            ++stats_.flows_expired;
        }
    }
    if (!config_.propagate_expire && (config_.scheme == Scheme::Idf || config_.scheme == Scheme::Enc)) {
        const DownlinkFlowTable& table = config_.scheme == Scheme::Idf ? idf_.flows() : enc_.flows();
        for (const Bidf& bidf : table.idle_flows(now, config_.flow_timeout)) remove_downlink(bidf, std::nullopt);
    }
}

void Gateway::on_timer(Timestamp now) {
    expire(now);
    for (LegTx* leg : sorted_legs()) {
        for (std::size_t i = 0; i < leg->peers.size(); ++i) {
            const PeerLegTx& p = leg->peers[i];
            if (!p.acked && now - p.last_sent >= p.backoff) send_announce(*leg, i, now);
        }
    }
    for (auto& peer : peers_) {
        if (peer.pending_key) {
            if (!peer.rekey_timed_out && now - peer.rekey_first >= config_.rekey_timeout) {
                peer.rekey_timed_out = true;
                ++stats_.rekey_timeouts;
            }
            if (now - peer.rekey_last >= peer.rekey_backoff) {
                send_mgmt(peer, RekeyMsg{peer.pending_key->epoch, peer.pending_key->key});
                peer.rekey_last = now;
                peer.rekey_backoff = std::min(2 * peer.rekey_backoff, config_.retransmit_max);
            }
        }
        flush_mka(peer);
    }
    if (now - last_hello_ >= config_.hello_interval) {
        last_hello_ = now;
        for (auto& peer : peers_) send_mgmt(peer, HelloMsg{config_.self});
    }
}

void Gateway::on_mgmt_connected(const GatewayId& id, Timestamp now) {
    auto pi = peer_index(id);
    if (!pi) return;
    PeerState& peer = peers_[*pi];
    if (peer.pending_key) {
        send_mgmt(peer, RekeyMsg{peer.pending_key->epoch, peer.pending_key->key});
        peer.rekey_last = now;
    }
    for (LegTx* leg : sorted_legs())
        if (!leg->peers[*pi].acked) send_announce(*leg, *pi, now);
    flush_mka(peer);
}

// ---------------------------------------------------------------------------

GatewayStats Gateway::snapshot_stats() const {
    GatewayStats s = stats_;
    s.hash_downlink = idf_.hash_calls();
    s.identifier_collisions = idf_.collisions();
    s.block_ops_uplink = 0;
    for (const auto& peer : peers_) s.block_ops_uplink += peer.enc_tx.block_ops() + peer.full_tx.block_ops();
    s.block_ops_downlink = enc_.block_ops() + full_.block_ops();
    return s;
}

std::optional<std::uint8_t> Gateway::tx_epoch(const GatewayId& peer) const {
    auto pi = peer_index(peer);
    if (!pi) return std::nullopt;
    return config_.scheme == Scheme::FullEnc ? peers_[*pi].full_tx.current_epoch() : peers_[*pi].enc_tx.current_epoch();
}

bool Gateway::announce_acked(const Bidf& bidf, const GatewayId& peer) const {
    auto it = legs_.find(bidf);
    auto pi = peer_index(peer);
    return it != legs_.end() && pi && it->second.peers[*pi].acked;
}

}  // namespace mtun

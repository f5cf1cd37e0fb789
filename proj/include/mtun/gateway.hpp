// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Tunnel gateway engine. A gateway owns every table and is driven by four
// entry points (LAN frame, tunnel datagram, management bytes, timer) which the
// caller serializes. All output goes through GatewayIo.

#pragma once

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include <array>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "mtun/enc.hpp"
#include "mtun/encap.hpp"
#include "mtun/fullenc.hpp"
#include "mtun/idf.hpp"
#include "mtun/mgmt.hpp"

namespace mtun {

struct GatewayConfig {
    GatewayId self;
    std::vector<GatewayId> peers;
    Scheme scheme = Scheme::Idf;
    std::uint32_t window = kDefaultWindow;
    Duration flow_timeout = kDefaultFlowTimeout;
    std::size_t queue_limit = 128;  // per flow and peer, drop-oldest
    std::size_t mka_buffer = 16;    // per peer
    std::size_t path_mtu = kDefaultPathMtu;
    Duration rekey_grace = kDefaultRekeyGrace;
    Duration rekey_timeout = std::chrono::seconds(10);
    Duration hello_interval = std::chrono::seconds(5);
    Duration retransmit_initial = std::chrono::seconds(1);
    Duration retransmit_max = std::chrono::seconds(8);
    bool propagate_expire = true;
    bool filter_peer_source = false;
    bool binding = true;  // test hook: bind flows of one SA on the downlink

    /// Empty when valid, otherwise a description of the first problem.
    std::string validate() const;
};

enum class DropReason : std::uint8_t {
    NotMacsec,
    UnsupportedShape,
    BadEncap,
    SchemeMismatch,
    UnknownPeer,
    Malformed,
    UnknownIdentifier,
    UnknownFlow,
    HeaderMismatch,
    BadEpoch,
    AuthFailed,
    Replay,
    OutOfWindow,
    TooLarge,
    UnregisteredQueueOverflow,
    NoTunnelKey,
    MgmtMalformed,
    MkaBufferOverflow,
    kCount,
};
inline constexpr std::size_t kDropReasonCount = static_cast<std::size_t>(DropReason::kCount);
std::string_view to_string(DropReason r);

struct GatewayStats {
    std::uint64_t lan_frames_in = 0;
    std::uint64_t lan_frames_out = 0;
    std::uint64_t lan_bytes_in = 0;
    std::uint64_t lan_bytes_out = 0;
    std::uint64_t frames_tunneled = 0;
    std::uint64_t frames_reconstructed = 0;
    std::uint64_t frames_local = 0;  // LAN frames addressed to a local station
    std::uint64_t datagrams_out = 0;
    std::uint64_t datagrams_in = 0;
    std::uint64_t tunnel_bytes_out = 0;
    std::uint64_t tunnel_bytes_in = 0;
    std::uint64_t mka_forwarded = 0;
    std::uint64_t mka_received = 0;
    std::uint64_t mgmt_out = 0;
    std::uint64_t mgmt_in = 0;
    std::uint64_t announces_sent = 0;
    std::uint64_t announce_retransmits = 0;
    std::uint64_t learned_sent = 0;
    std::uint64_t learned_conflicts = 0;
    std::uint64_t expires_sent = 0;
    std::uint64_t flows_expired = 0;
    std::uint64_t rekeys = 0;
    std::uint64_t rekey_timeouts = 0;
    std::uint64_t hash_uplink = 0;
    std::uint64_t hash_downlink = 0;
    std::uint64_t block_ops_uplink = 0;
    std::uint64_t block_ops_downlink = 0;
    std::uint64_t identifier_collisions = 0;
    std::array<std::uint64_t, kDropReasonCount> drops{};

    std::uint64_t drop(DropReason r) const { return drops[static_cast<std::size_t>(r)]; }
    std::uint64_t total_drops() const;

    static std::string csv_header();
    std::string csv_row() const;
    /// Named counters in CSV column order.
    std::vector<std::pair<std::string, std::uint64_t>> counters() const;
};

class GatewayIo {
public:
    virtual ~GatewayIo() = default;
    virtual void lan_send(ByteView frame) = 0;
    virtual void tunnel_send(const GatewayId& peer, ByteView datagram) = 0;
    /// False when the peer's management channel is down.
    virtual bool mgmt_send(const GatewayId& peer, ByteView message) = 0;
    virtual void random_bytes(MutableByteView out) { secure_random(out); }
};

class Gateway {
public:
    /// Throws std::invalid_argument on an invalid configuration.
    Gateway(GatewayConfig config, GatewayIo& io);

    void start(Timestamp now);
    void on_lan_frame(ByteView frame, Timestamp now);
    /// `from` is the datagram's source when it is known.
    void on_tunnel_packet(ByteView datagram, const std::optional<GatewayId>& from, Timestamp now);
    /// Raw bytes of the management stream from `peer`.
    void on_mgmt_bytes(const GatewayId& peer, ByteView bytes, Timestamp now);
    void on_mgmt_message(const GatewayId& peer, const MgmtMessage& msg, Timestamp now);
    void on_timer(Timestamp now);
    /// The sending channel to `peer` (re)opened: pending announces and keys go out now.
    void on_mgmt_connected(const GatewayId& peer, Timestamp now);
    /// Drops the partial management stream state of `peer` (connection reset).
    void reset_mgmt_stream(const GatewayId& peer);

    GatewayStats snapshot_stats() const;
    const GatewayConfig& config() const { return config_; }

    // Read-only views for tests and tools.
    const UplinkTable& uplink() const { return uplink_; }
    const IdfReceiver& idf() const { return idf_; }
    const EncReceiver& enc() const { return enc_; }
    std::optional<std::uint8_t> tx_epoch(const GatewayId& peer) const;
    bool announce_acked(const Bidf& bidf, const GatewayId& peer) const;

private:
    struct PeerLegTx {
        bool acked = false;
        Timestamp last_sent{};
        Duration backoff{};
        std::deque<Bytes> queue;
    };
    struct LegTx {
        SaKey sa;
        FlowAnnounceMsg announce;
        std::vector<PeerLegTx> peers;
    };
    struct PeerState {
        GatewayId id;
        std::deque<Bytes> mka_buffer;
        EncKeyring enc_tx;
        FullEncKeyring full_tx;
        std::optional<TunnelKey> pending_key;
        Timestamp rekey_first{};
        Timestamp rekey_last{};
        Duration rekey_backoff{};
        bool rekey_timed_out = false;
        std::uint8_t next_epoch = 0;
        std::deque<Bytes> key_queue;  // full-frame scheme: frames waiting for the first key
        MgmtStreamDecoder decoder;

        PeerState(const GatewayId& g, Duration grace) : id(g), enc_tx(grace), full_tx(grace) {}
    };
    struct ReverseRef {
        Bidf bidf;
        GatewayId origin;
        HeaderData header;
    };

    void drop(DropReason r) { ++stats_.drops[static_cast<std::size_t>(r)]; }
    std::optional<std::size_t> peer_index(const GatewayId& id) const;
    std::vector<LegTx*> sorted_legs();  // table order varies between processes
    bool send_mgmt(PeerState& peer, const MgmtMessage& msg);

    void forward_mka(ByteView frame);
    void flush_mka(PeerState& peer);
    void uplink_flow(ByteView frame, const MacsecHeader& h, Timestamp now);
    void uplink_by_mac(ByteView frame, const MacsecHeader& h);
    LegTx& register_leg(UplinkFlowEntry& entry, const SaKey& sa, const MacsecHeader& h, Timestamp now);
    void send_leg_frame(LegTx& leg, const FlowLeg& flow_leg, ByteView frame);
    bool encode_for(PeerState& peer, ByteView frame, const Ridf* ridf, Bytes& dgram);
    void enqueue(std::deque<Bytes>& q, ByteView frame);
    void flush_leg(LegTx& leg, std::size_t peer);
    void check_learning(const MacsecHeader& h);
    void start_rekey(PeerState& peer, Timestamp now);
    void send_announce(LegTx& leg, std::size_t peer, Timestamp now);
    void expire(Timestamp now);
    void install_rx_key(const GatewayId& peer, const TunnelKey& key, Timestamp now);
    void remember_reverse(const Bidf& bidf, const HeaderData& header, const GatewayId& origin);
    void forget_reverse(const Bidf& bidf, const HeaderData& header);
    void remove_downlink(const Bidf& bidf, const std::optional<GatewayId>& origin);

    GatewayConfig config_;
    GatewayIo& io_;
    GatewayStats stats_;
    std::vector<PeerState> peers_;
    absl::flat_hash_map<GatewayId, std::size_t> peer_index_;

    UplinkTable uplink_;
    absl::flat_hash_map<Bidf, LegTx> legs_;
    IdfReceiver idf_;
    EncReceiver enc_;
    FullEncReceiver full_;

    absl::flat_hash_set<MacAddress> local_macs_;
    absl::flat_hash_map<MacAddress, std::size_t> remote_macs_;  // address learning for naive / full-frame
    absl::flat_hash_map<std::pair<std::uint64_t, std::uint64_t>, ReverseRef> reverse_;  // (remote src, local dst)
    Timestamp last_hello_{};
    bool started_ = false;
    Bytes scratch_;
};

}  // namespace mtun

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Real-mode gateway: one poll loop serving the LAN attachment, the UDP tunnel
// socket and the TCP management channels.
//
// Each gateway dials every peer's management listener and uses that
// connection for sending only; its first message is a HELLO naming the
// sender. Accepted connections are receive-only and are attributed to the
// peer named by their leading HELLO.

#pragma once

#include <atomic>
#include <functional>
#include <memory>

#include "mtun/gateway.hpp"
#include "mtun/net/lan.hpp"

namespace mtun::net {

struct PeerEndpoint {
    GatewayId tunnel;  // doubles as the peer's gateway id
    GatewayId mgmt;
};

struct RuntimeConfig {
    GatewayConfig gateway;  // `self` and `peers` are filled from the fields below
    GatewayId tunnel_listen;
    GatewayId mgmt_listen;
    std::vector<PeerEndpoint> peers;
    Duration tick = std::chrono::milliseconds(50);
    Duration reconnect_interval = std::chrono::seconds(1);
    Duration stats_interval{0};  // zero: no periodic stats
};

/// Parses "tunnel[,mgmt]"; the management port defaults to the tunnel port + 1.
std::optional<PeerEndpoint> parse_peer(std::string_view text);

class GatewayRuntime final : private GatewayIo {
public:
    /// Binds the sockets. Port 0 picks an ephemeral port; see endpoints below.
    static Expected<std::unique_ptr<GatewayRuntime>, std::string> bind(RuntimeConfig config,
                                                                       std::unique_ptr<LanPort> lan);

    GatewayId tunnel_endpoint() const { return udp_.local(); }
    GatewayId mgmt_endpoint() const { return listener_.local(); }
    void add_peer(const PeerEndpoint& peer);

    /// Builds the gateway. Throws std::invalid_argument on a bad configuration.
    void start();
    /// Serves events until `stop` is set.
    void run(const std::atomic<bool>& stop);
    /// One poll round waiting at most `timeout`.
    void poll_once(Duration timeout);

    /// Called with a CSV row (header first) every stats interval.
    std::function<void(const std::string&)> on_stats;

    Gateway& gateway() { return *gateway_; }
    Timestamp now() const;

private:
    GatewayRuntime(RuntimeConfig config, std::unique_ptr<LanPort> lan, UdpSocket udp, TcpListener listener);

    struct Outgoing {
        PeerEndpoint peer;
        std::optional<TcpStream> stream;
        Timestamp last_attempt{-std::chrono::hours(1)};
    };
    struct Incoming {
        TcpStream stream;
        std::optional<GatewayId> peer;
        Bytes pending;  // bytes read before the HELLO identified the peer
    };

    void lan_send(ByteView frame) override;
    void tunnel_send(const GatewayId& peer, ByteView datagram) override;
    bool mgmt_send(const GatewayId& peer, ByteView message) override;

    void dial(Timestamp now);
    void serve_incoming(Incoming& in, Timestamp now);
    void tick(Timestamp now);

    RuntimeConfig config_;
    std::unique_ptr<LanPort> lan_;
    UdpSocket udp_;
    TcpListener listener_;
    std::unique_ptr<Gateway> gateway_;
    std::vector<Outgoing> out_;
    std::vector<Incoming> in_;
    Bytes buf_;
    std::chrono::steady_clock::time_point epoch_;
    Timestamp last_tick_{};
    Timestamp last_stats_{};
    bool stats_header_sent_ = false;
};

}  // namespace mtun::net

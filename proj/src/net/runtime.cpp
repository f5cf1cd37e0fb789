// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/net/runtime.hpp"

#include <poll.h>

#include <algorithm>
#include <stdexcept>

namespace mtun::net {

std::optional<PeerEndpoint> parse_peer(std::string_view text) {
    const auto comma = text.find(',');
    auto tunnel = GatewayId::parse(text.substr(0, comma));
    if (!tunnel) return std::nullopt;
    PeerEndpoint p{*tunnel, GatewayId{tunnel->ipv4, static_cast<std::uint16_t>(tunnel->port + 1)}};
    if (comma != std::string_view::npos) {
        auto mgmt = GatewayId::parse(text.substr(comma + 1));
        if (!mgmt) return std::nullopt;
        p.mgmt = *mgmt;
    }
    return p;
}

Expected<std::unique_ptr<GatewayRuntime>, std::string> GatewayRuntime::bind(RuntimeConfig config,
                                                                            std::unique_ptr<LanPort> lan) {
    if (!lan) return std::string("no LAN attachment");
    auto udp = UdpSocket::bind(config.tunnel_listen);
    if (!udp) return udp.error();
    auto listener = TcpListener::listen(config.mgmt_listen);
    if (!listener) return listener.error();
    auto peers = std::move(config.peers);
    std::unique_ptr<GatewayRuntime> rt(
        new GatewayRuntime(std::move(config), std::move(lan), std::move(udp.value()), std::move(listener.value())));
    for (const auto& p : peers) rt->add_peer(p);
    return rt;
}

GatewayRuntime::GatewayRuntime(RuntimeConfig config, std::unique_ptr<LanPort> lan, UdpSocket udp,
                               TcpListener listener)
    : config_(std::move(config)),
      lan_(std::move(lan)),
      udp_(std::move(udp)),
      listener_(std::move(listener)),
      epoch_(std::chrono::steady_clock::now()) {
    config_.gateway.self = udp_.local();
    config_.gateway.peers.clear();
}

void GatewayRuntime::add_peer(const PeerEndpoint& peer) {
    if (gateway_) throw std::logic_error("add_peer after start");
    config_.gateway.peers.push_back(peer.tunnel);
    out_.push_back(Outgoing{peer, std::nullopt});
}

Timestamp GatewayRuntime::now() const { return std::chrono::steady_clock::now() - epoch_; }

void GatewayRuntime::start() {
    if (gateway_) return;
    gateway_ = std::make_unique<Gateway>(config_.gateway, static_cast<GatewayIo&>(*this));
    const Timestamp t = now();
    dial(t);
    gateway_->start(t);
    last_tick_ = last_stats_ = t;
}

void GatewayRuntime::run(const std::atomic<bool>& stop) {
    start();
    while (!stop.load(std::memory_order_relaxed)) poll_once(config_.tick);
}

// ---------------------------------------------------------------------------
// GatewayIo

void GatewayRuntime::lan_send(ByteView frame) { lan_->send(frame); }

void GatewayRuntime::tunnel_send(const GatewayId& peer, ByteView datagram) { udp_.send_to(peer, datagram); }

bool GatewayRuntime::mgmt_send(const GatewayId& peer, ByteView message) {
    for (auto& o : out_) {
        if (o.peer.tunnel != peer) continue;
        if (!o.stream || !o.stream->open() || !o.stream->connected()) return false;
        o.stream->write(message);
        return o.stream->flush();
    }
    return false;
}

// ---------------------------------------------------------------------------

void GatewayRuntime::dial(Timestamp now) {
    for (auto& o : out_) {
        if (o.stream && o.stream->open()) continue;
        if (now - o.last_attempt < config_.reconnect_interval) continue;
        o.last_attempt = now;
        auto s = TcpStream::connect(o.peer.mgmt);
        if (!s) {
            o.stream.reset();
            continue;
        }
        o.stream = std::move(s.value());
        o.stream->write(encode(HelloMsg{config_.gateway.self}));
        if (o.stream->connected()) {
            o.stream->flush();
            gateway_->on_mgmt_connected(o.peer.tunnel, now);
        }
    }
}

void GatewayRuntime::serve_incoming(Incoming& in, Timestamp now) {
    Bytes& data = in.pending;
    const bool alive = in.stream.read(data);
    if (!in.peer && data.size() >= kMgmtHeaderSize + 6) {
        auto first = decode_mgmt(ByteView(data).first(kMgmtHeaderSize + 6));
        const auto* hello = first ? std::get_if<HelloMsg>(&first.value()) : nullptr;
        const auto& peers = config_.gateway.peers;
        if (!hello || std::find(peers.begin(), peers.end(), hello->gateway) == peers.end()) {
            in.stream.close();
            return;
        }
        for (auto& other : in_)
            if (&other != &in && other.peer == hello->gateway) {
                other.peer.reset();
                other.stream.close();
            }
        in.peer = hello->gateway;
        gateway_->reset_mgmt_stream(*in.peer);
    }
    if (in.peer && !data.empty()) {
        gateway_->on_mgmt_bytes(*in.peer, data, now);
        data.clear();
    }
    if (!alive) in.stream.close();
}

void GatewayRuntime::tick(Timestamp now) {
    if (now - last_tick_ < config_.tick) return;
    last_tick_ = now;
    dial(now);
    gateway_->on_timer(now);
    if (config_.stats_interval > Duration::zero() && on_stats && now - last_stats_ >= config_.stats_interval) {
        last_stats_ = now;
        if (!stats_header_sent_) {
            on_stats(GatewayStats::csv_header());
            stats_header_sent_ = true;
        }
        on_stats(gateway_->snapshot_stats().csv_row());
    }
}

void GatewayRuntime::poll_once(Duration timeout) {
    start();
    std::vector<pollfd> fds;
    fds.push_back({lan_->fd(), POLLIN, 0});
    fds.push_back({udp_.fd(), POLLIN, 0});
    fds.push_back({listener_.fd(), POLLIN, 0});
    for (auto& o : out_) {
        const bool open = o.stream && o.stream->open();
        fds.push_back({open ? o.stream->fd() : -1,
                       static_cast<short>(POLLIN | (open && o.stream->wants_write() ? POLLOUT : 0)), 0});
    }
    for (auto& in : in_) fds.push_back({in.stream.fd(), POLLIN, 0});

    const Timestamp before = now();
    const Duration until_tick = std::max(Duration::zero(), last_tick_ + config_.tick - before);
    const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(std::min(timeout, until_tick));
    ::poll(fds.data(), fds.size(), static_cast<int>(wait.count()));
    Timestamp t = now();

    if (fds[0].revents & POLLIN)
        for (int i = 0; i < 256 && lan_->recv(buf_); ++i) gateway_->on_lan_frame(buf_, t);
    if (fds[1].revents & POLLIN) {
        GatewayId from;
        for (int i = 0; i < 256 && udp_.recv_from(buf_, from); ++i) gateway_->on_tunnel_packet(buf_, from, t);
    }
    if (fds[2].revents & POLLIN)
        while (auto s = listener_.accept()) in_.push_back(Incoming{std::move(*s), std::nullopt, {}});

    for (std::size_t i = 0; i < out_.size(); ++i) {
        const short ev = fds[3 + i].revents;
        auto& o = out_[i];
        if (!ev || !o.stream) continue;
        if (ev & (POLLERR | POLLHUP)) {
            o.stream->close();
            continue;
        }
        if (ev & POLLOUT) {
            const bool was_connected = o.stream->connected();
            if (o.stream->finish_connect()) {
                o.stream->flush();
                if (!was_connected) gateway_->on_mgmt_connected(o.peer.tunnel, t);
            }
        }
        if (ev & POLLIN) {
            Bytes discard;
            if (!o.stream->read(discard)) o.stream->close();
        }
    }
    const std::size_t base = 3 + out_.size();
    const std::size_t incoming = in_.size();
    for (std::size_t i = 0; i < incoming && base + i < fds.size(); ++i)
        if (fds[base + i].revents) serve_incoming(in_[i], t);
    for (auto it = in_.begin(); it != in_.end();) {
        if (it->stream.open()) {
            ++it;
            continue;
        }
        if (it->peer) gateway_->reset_mgmt_stream(*it->peer);
        it = in_.erase(it);
    }
    tick(now());
}

}  // namespace mtun::net

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>

#include "mtun/gateway.hpp"

namespace mtun::testing {

// A set of gateways wired back to back: management and tunnel output is
// queued and delivered on pump(), LAN output is recorded per gateway.
class Mesh {
public:
    struct Node;

    struct Io : GatewayIo {
        Mesh* mesh = nullptr;
        std::size_t index = 0;
        std::mt19937_64 rng;
        void lan_send(ByteView frame) override { mesh->nodes_[index]->lan_out.emplace_back(frame.begin(), frame.end()); }
        void tunnel_send(const GatewayId& peer, ByteView d) override {
            mesh->tunnel_.push_back({index, peer, Bytes(d.begin(), d.end())});
        }
        bool mgmt_send(const GatewayId& peer, ByteView m) override {
            if (mesh->mgmt_down) return false;
            mesh->mgmt_.push_back({index, peer, Bytes(m.begin(), m.end())});
            return true;
        }
        void random_bytes(MutableByteView out) override {
            for (auto& b : out) b = static_cast<std::uint8_t>(rng());
        }
    };

    struct Node {
        GatewayId id;
        Io io;
        std::unique_ptr<Gateway> gw;
        std::vector<Bytes> lan_out;
    };

    struct Msg {
        std::size_t from;
        GatewayId to;
        Bytes bytes;
    };

    Mesh(Scheme scheme, std::size_t n, std::function<void(GatewayConfig&)> tweak = {}) {
        for (std::size_t i = 0; i < n; ++i) {
            auto node = std::make_unique<Node>();
            node->id = GatewayId{0x0A000001u + static_cast<std::uint32_t>(i), 4790};
            nodes_.push_back(std::move(node));
        }
        for (std::size_t i = 0; i < n; ++i) {
            Node& node = *nodes_[i];
            node.io.mesh = this;
            node.io.index = i;
            node.io.rng.seed(100 + i);
            GatewayConfig cfg;
            cfg.self = node.id;
            cfg.scheme = scheme;
            cfg.window = 16;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) cfg.peers.push_back(nodes_[j]->id);
            if (tweak) tweak(cfg);
            node.gw = std::make_unique<Gateway>(cfg, node.io);
            node.gw->start(now);
        }
    }

    Gateway& gw(std::size_t i) { return *nodes_[i]->gw; }
    Node& node(std::size_t i) { return *nodes_[i]; }
    std::size_t index_of(const GatewayId& id) const {
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i]->id == id) return i;
        throw std::out_of_range("unknown gateway");
    }

    /// Delivers queued messages until quiet. `keep_mgmt` may discard management messages.
    void pump(const std::function<bool(const Msg&)>& keep_mgmt = {}) {
        while (!mgmt_.empty() || !tunnel_.empty()) {
            while (!mgmt_.empty()) {
                Msg m = std::move(mgmt_.front());
                mgmt_.pop_front();
                if (keep_mgmt && !keep_mgmt(m)) continue;
                mgmt_log.push_back(m);
                gw(index_of(m.to)).on_mgmt_bytes(nodes_[m.from]->id, m.bytes, now);
            }
            while (!tunnel_.empty()) {
                Msg m = std::move(tunnel_.front());
                tunnel_.pop_front();
                tunnel_log.push_back(m);
                gw(index_of(m.to)).on_tunnel_packet(m.bytes, nodes_[m.from]->id, now);
            }
        }
    }
    /// Tunnel datagrams and management messages stay queued until pump().
    std::size_t queued_tunnel() const { return tunnel_.size(); }
    void drop_queued_tunnel() { tunnel_.clear(); }

    Timestamp now{};
    bool mgmt_down = false;
    std::vector<Msg> mgmt_log;
    std::vector<Msg> tunnel_log;

private:
    std::vector<std::unique_ptr<Node>> nodes_;
    std::deque<Msg> mgmt_;
    std::deque<Msg> tunnel_;
};

}  // namespace mtun::testing

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/net/config.hpp"

namespace mtun::net {

using nlohmann::json;

GatewaySetup default_setup() {
    GatewaySetup s;
    s.runtime.tunnel_listen = GatewayId{0, kDefaultTunnelPort};
    s.runtime.mgmt_listen = GatewayId{0, kDefaultMgmtPort};
    return s;
}

namespace {

void set_ms(const json& j, const char* key, Duration& out) {
    if (j.contains(key))
        out = std::chrono::duration_cast<Duration>(std::chrono::duration<double, std::milli>(j.at(key).get<double>()));
}

std::optional<GatewayId> endpoint(const json& j, const char* key) {
    return GatewayId::parse(j.at(key).get<std::string>());
}

}  // namespace

Expected<GatewaySetup, std::string> apply_json(GatewaySetup s, const json& j) {
    try {
        if (!j.is_object()) return std::string("configuration must be a JSON object");
        GatewayConfig& g = s.runtime.gateway;
        if (j.contains("scheme")) {
            auto scheme = parse_scheme(j.at("scheme").get<std::string>());
            if (!scheme) return std::string("unknown scheme");
            g.scheme = *scheme;
        }
        g.window = j.value("window", g.window);
        g.queue_limit = j.value("queue_limit", g.queue_limit);
        g.mka_buffer = j.value("mka_buffer", g.mka_buffer);
        g.path_mtu = j.value("path_mtu", g.path_mtu);
        g.propagate_expire = j.value("propagate_expire", g.propagate_expire);
        g.filter_peer_source = j.value("filter_peer_source", g.filter_peer_source);
        set_ms(j, "flow_timeout_ms", g.flow_timeout);
        set_ms(j, "rekey_grace_ms", g.rekey_grace);
        set_ms(j, "rekey_timeout_ms", g.rekey_timeout);
        set_ms(j, "hello_interval_ms", g.hello_interval);
        set_ms(j, "retransmit_initial_ms", g.retransmit_initial);
        set_ms(j, "retransmit_max_ms", g.retransmit_max);

        s.lan = j.value("lan", s.lan);
        for (const char* key : {"tunnel_listen", "mgmt_listen"}) {
            if (!j.contains(key)) continue;
            auto e = endpoint(j, key);
            if (!e) return std::string("bad endpoint for ") + key;
            (std::string_view(key) == "tunnel_listen" ? s.runtime.tunnel_listen : s.runtime.mgmt_listen) = *e;
        }
        if (j.contains("stats_interval_s"))
            s.runtime.stats_interval = std::chrono::duration_cast<Duration>(
                std::chrono::duration<double>(j.at("stats_interval_s").get<double>()));
        if (j.contains("peers")) {
            s.runtime.peers.clear();
            for (const json& p : j.at("peers")) {
                std::optional<PeerEndpoint> peer;
                if (p.is_string()) {
                    peer = parse_peer(p.get<std::string>());
                } else {
                    auto tunnel = endpoint(p, "tunnel");
                    if (tunnel) {
                        peer = PeerEndpoint{*tunnel, GatewayId{tunnel->ipv4, static_cast<std::uint16_t>(tunnel->port + 1)}};
                        if (p.contains("mgmt")) {
                            auto mgmt = endpoint(p, "mgmt");
                            if (!mgmt) return std::string("bad peer management endpoint");
                            peer->mgmt = *mgmt;
                        }
                    }
                }
                if (!peer) return std::string("bad peer entry");
                s.runtime.peers.push_back(*peer);
            }
        }
        return s;
    } catch (const json::exception& e) {
        return std::string("config: ") + e.what();
    }
}

}  // namespace mtun::net

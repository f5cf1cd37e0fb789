// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// msec-gw: real-mode tunnel gateway.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

#include "mtun/net/config.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MACsec tunnel gateway"};
    std::string config_path, scheme, lan, tun_listen, mgmt_listen;
    std::vector<std::string> peers;
    double stats_interval = -1;
    std::uint32_t window = 0;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--scheme", scheme, "naive, idf, enc or fullenc");
    app.add_option("--lan-if", lan, "LAN attachment: IFNAME, raw:IFNAME, tap:NAME or udp:LOCAL/REMOTE");
    app.add_option("--tun-listen", tun_listen, "tunnel UDP endpoint a.b.c.d:port (also this gateway's id)");
    app.add_option("--mgmt-listen", mgmt_listen, "management TCP endpoint a.b.c.d:port");
    app.add_option("--peer", peers, "peer gateway TUNNEL[,MGMT]; repeatable, replaces configured peers");
    app.add_option("--stats-interval", stats_interval, "print counters as CSV every SECS seconds");
    app.add_option("--window", window, "replay window size");
    CLI11_PARSE(app, argc, argv);

    auto fail = [](const std::string& msg) {
        std::cerr << "msec-gw: " << msg << '\n';
        return 2;
    };

    mtun::net::GatewaySetup setup = mtun::net::default_setup();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) return fail("cannot read " + config_path);
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) return fail(config_path + ": not valid JSON");
        auto applied = mtun::net::apply_json(std::move(setup), j);
        if (!applied) return fail(applied.error());
        setup = std::move(applied.value());
    }
    auto& g = setup.runtime.gateway;
    if (!scheme.empty()) {
        auto s = mtun::parse_scheme(scheme);
        if (!s) return fail("unknown scheme " + scheme);
        g.scheme = *s;
    }
    if (window) g.window = window;
    if (!lan.empty()) setup.lan = lan;
    if (!tun_listen.empty()) {
        auto e = mtun::GatewayId::parse(tun_listen);
        if (!e) return fail("bad --tun-listen");
        setup.runtime.tunnel_listen = *e;
    }
    if (!mgmt_listen.empty()) {
        auto e = mtun::GatewayId::parse(mgmt_listen);
        if (!e) return fail("bad --mgmt-listen");
        setup.runtime.mgmt_listen = *e;
    }
    if (!peers.empty()) {
        setup.runtime.peers.clear();
        for (const auto& p : peers) {
            auto e = mtun::net::parse_peer(p);
            if (!e) return fail("bad --peer " + p);
            setup.runtime.peers.push_back(*e);
        }
    }
    if (stats_interval >= 0)
        setup.runtime.stats_interval =
            std::chrono::duration_cast<mtun::Duration>(std::chrono::duration<double>(stats_interval));
    if (setup.lan.empty()) return fail("no LAN attachment (--lan-if)");
    if (setup.runtime.peers.empty()) return fail("no peers");

    auto port = mtun::net::open_lan(setup.lan);
    if (!port) return fail(port.error());
    auto rt = mtun::net::GatewayRuntime::bind(setup.runtime, std::move(port.value()));
    if (!rt) return fail(rt.error());
    auto& runtime = *rt.value();
    runtime.on_stats = [](const std::string& line) { std::cout << line << std::endl; };
    try {
        runtime.start();
    } catch (const std::invalid_argument& e) {
        return fail(e.what());
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "msec-gw: " << mtun::to_string(g.scheme) << " gateway " << runtime.tunnel_endpoint().to_string()
              << ", management " << runtime.mgmt_endpoint().to_string() << '\n';
    runtime.run(g_stop);
    return 0;
}

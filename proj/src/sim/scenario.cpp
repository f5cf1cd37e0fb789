// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/sim/scenario.hpp"

#include <set>

namespace mtun::sim {

std::string_view to_string(AttackKind k) {
    switch (k) {
        case AttackKind::Replay: return "replay";
        case AttackKind::Inject: return "inject";
        case AttackKind::Mutate: return "mutate";
        case AttackKind::Drop: return "drop";
        case AttackKind::Delay: return "delay";
    }
    return "?";
}

std::optional<AttackKind> parse_attack_kind(std::string_view s) {
    for (auto k : {AttackKind::Replay, AttackKind::Inject, AttackKind::Mutate, AttackKind::Drop, AttackKind::Delay})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

std::string Scenario::validate() const {
    if (lans.size() < 2) return "at least two LANs are required";
    if (lans.size() > 250) return "too many LANs";
    if (window == 0) return "window must be positive";
    if (pn_ceiling < 2) return "pn_ceiling must be at least 2";
    if (duration <= Duration::zero()) return "duration must be positive";
    if (timer_interval <= Duration::zero()) return "timer_interval must be positive";
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(net.loss) || !prob(net.duplicate) || !prob(net.reorder)) return "net probabilities must lie in [0, 1]";
    if (net.latency < Duration::zero() || net.jitter < Duration::zero()) return "negative latency";

    std::set<std::string> lan_names, devices;
    for (const auto& lan : lans) {
        if (!lan_names.insert(lan.name).second) return "duplicate LAN name " + lan.name;
        for (const auto& d : lan.devices)
            if (!devices.insert(d.name).second) return "duplicate device name " + d.name;
    }
    for (const auto& t : traffic) {
        if (!devices.count(t.from)) return "unknown traffic source " + t.from;
        if (t.to != "broadcast" && !devices.count(t.to)) return "unknown traffic destination " + t.to;
        if (t.to == t.from) return "traffic to self from " + t.from;
        if (t.min_payload > t.max_payload || t.max_payload > kMaxPlainPayload) return "bad payload range";
        if (t.min_payload + kEthHeaderSize + kMacsecOverhead < kMinMacsecFrameSize) return "payload below minimum frame";
        if (t.interval <= Duration::zero()) return "traffic interval must be positive";
    }
    for (const auto& m : mka) {
        if (!devices.count(m.from)) return "unknown key-agreement source " + m.from;
        if (m.size < 18 || m.size > 1500) return "key-agreement frame size out of range";
        if (m.interval <= Duration::zero()) return "key-agreement interval must be positive";
    }
    for (const auto& a : attacks) {
        if (!a.target.empty() && !lan_names.count(a.target)) return "unknown attack target " + a.target;
        if (!prob(a.probability)) return "attack probability must lie in [0, 1]";
        if (a.kind == AttackKind::Inject && (a.count == 0 || a.interval <= Duration::zero()))
            return "inject needs a count and a positive interval";
    }
    for (const auto& f : mgmt_faults)
        if (!lan_names.count(f.from) || !lan_names.count(f.to) || f.from == f.to) return "bad management fault link";
    return {};
}

namespace {

using nlohmann::json;

Duration ms(const json& j, const char* key, Duration fallback) {
    if (!j.contains(key)) return fallback;
    return std::chrono::duration_cast<Duration>(std::chrono::duration<double, std::milli>(j.at(key).get<double>()));
}

Timestamp ms_at(const json& j, const char* key, Timestamp fallback) { return ms(j, key, fallback); }

}  // namespace

Expected<Scenario, std::string> scenario_from_json(const json& j) {
    try {
        Scenario s;
        s.seed = j.value("seed", s.seed);
        if (j.contains("scheme")) {
            auto scheme = parse_scheme(j.at("scheme").get<std::string>());
            if (!scheme) return std::string("unknown scheme");
            s.scheme = *scheme;
        }
        s.window = j.value("window", s.window);
        s.duration = ms(j, "duration_ms", s.duration);
        s.pn_ceiling = j.value("pn_ceiling", s.pn_ceiling);
        s.binding = j.value("binding", s.binding);
        s.propagate_expire = j.value("propagate_expire", s.propagate_expire);
        s.flow_timeout = ms(j, "flow_timeout_ms", s.flow_timeout);
        s.rekey_grace = ms(j, "rekey_grace_ms", s.rekey_grace);
        s.lan_latency = ms(j, "lan_latency_ms", s.lan_latency);
        s.mgmt_latency = ms(j, "mgmt_latency_ms", s.mgmt_latency);
        s.timer_interval = ms(j, "timer_interval_ms", s.timer_interval);
        s.transcript = j.value("transcript", s.transcript);

        if (j.contains("net")) {
            const json& n = j.at("net");
            s.net.loss = n.value("loss", s.net.loss);
            s.net.duplicate = n.value("duplicate", s.net.duplicate);
            s.net.reorder = n.value("reorder", s.net.reorder);
            s.net.max_displacement = n.value("max_displacement", s.net.max_displacement);
            s.net.reorder_unit = ms(n, "reorder_unit_ms", s.net.reorder_unit);
            s.net.latency = ms(n, "latency_ms", s.net.latency);
            s.net.jitter = ms(n, "jitter_ms", s.net.jitter);
        }
        for (const json& l : j.value("lans", json::array())) {
            LanSpec lan;
            lan.name = l.at("name").get<std::string>();
            for (const json& d : l.value("devices", json::array())) {
                DeviceSpec dev;
                dev.name = d.at("name").get<std::string>();
                if (d.contains("mac")) {
                    dev.mac = MacAddress::parse(d.at("mac").get<std::string>());
                    if (!dev.mac) return "bad MAC address for " + dev.name;
                }
                dev.port = d.value("port", dev.port);
                lan.devices.push_back(std::move(dev));
            }
            s.lans.push_back(std::move(lan));
        }
        for (const json& t : j.value("traffic", json::array())) {
            TrafficSpec ts;
            ts.from = t.at("from").get<std::string>();
            ts.to = t.at("to").get<std::string>();
            ts.count = t.at("count").get<std::uint64_t>();
            ts.start = ms_at(t, "start_ms", ts.start);
            ts.interval = ms(t, "interval_ms", ts.interval);
            ts.min_payload = t.value("min_payload", ts.min_payload);
            ts.max_payload = t.value("max_payload", ts.max_payload);
            ts.ethertype = t.value("ethertype", ts.ethertype);
            s.traffic.push_back(std::move(ts));
        }
        for (const json& m : j.value("mka", json::array())) {
            MkaSpec ms_;
            ms_.from = m.at("from").get<std::string>();
            ms_.count = m.at("count").get<std::uint64_t>();
            ms_.start = ms_at(m, "start_ms", ms_.start);
            ms_.interval = ms(m, "interval_ms", ms_.interval);
            ms_.size = m.value("size", ms_.size);
            s.mka.push_back(std::move(ms_));
        }
        for (const json& a : j.value("attacks", json::array())) {
            AttackSpec as;
            auto kind = parse_attack_kind(a.at("kind").get<std::string>());
            if (!kind) return std::string("unknown attack kind");
            as.kind = *kind;
            as.start = ms_at(a, "start_ms", as.start);
            as.end = ms_at(a, "end_ms", as.end);
            as.count = a.value("count", as.count);
            as.skip = a.value("skip", as.skip);
            as.probability = a.value("probability", as.probability);
            as.delay = ms(a, "delay_ms", as.delay);
            as.interval = ms(a, "interval_ms", as.interval);
            as.target = a.value("target", as.target);
            as.raw = a.value("raw", as.raw);
            s.attacks.push_back(std::move(as));
        }
        for (const json& f : j.value("mgmt_faults", json::array())) {
            MgmtFaultSpec fs;
            fs.from = f.at("from").get<std::string>();
            fs.to = f.at("to").get<std::string>();
            fs.down_from = ms_at(f, "down_from_ms", fs.down_from);
            fs.down_until = ms_at(f, "down_until_ms", fs.down_until);
            fs.drop = f.value("drop", fs.drop);
            fs.drop_after = ms_at(f, "drop_after_ms", fs.drop_after);
            s.mgmt_faults.push_back(std::move(fs));
        }
        if (auto err = s.validate(); !err.empty()) return err;
        return s;
    } catch (const json::exception& e) {
        return std::string("scenario: ") + e.what();
    }
}

// ---------------------------------------------------------------------------

std::uint64_t ScenarioResult::drops(DropReason r) const {
    std::uint64_t n = 0;
    for (const auto& g : gateways) n += g.stats.drop(r);
    return n;
}

const GatewayReport* ScenarioResult::gateway(std::string_view name) const {
    for (const auto& g : gateways)
        if (g.name == name) return &g;
    return nullptr;
}

const DeviceReport* ScenarioResult::device(std::string_view name) const {
    for (const auto& d : devices)
        if (d.name == name) return &d;
    return nullptr;
}

std::string ScenarioResult::transcript_csv() const {
    std::string out = "time_ns,site,event,frame_hash\n";
    for (const auto& line : transcript) {
        out += line;
        out += '\n';
    }
    return out;
}

nlohmann::json ScenarioResult::summary() const {
    using nlohmann::json;
    json j;
    j["expected_deliveries"] = expected_deliveries;
    j["exact_deliveries"] = exact_deliveries;
    j["unexpected_deliveries"] = unexpected_deliveries;
    j["genuine_icv_failures"] = genuine_icv_failures;
    j["conservation_violations"] = conservation_violations;
    j["events"] = events;
    j["net"] = {{"sent", net.sent},
                {"lost", net.lost},
                {"duplicated", net.duplicated},
                {"reordered", net.reordered},
                {"delivered", net.delivered},
                {"in_flight", net.in_flight},
                {"attacker_dropped", net.attacker_dropped},
                {"attacker_delayed", net.attacker_delayed},
                {"mutated", net.mutated},
                {"replayed", net.replayed},
                {"injected", net.injected},
                {"mgmt_sent", net.mgmt_sent},
                {"mgmt_lost", net.mgmt_lost},
                {"mgmt_refused", net.mgmt_refused}};
    j["attack"] = {{"outcomes", attack.outcomes}, {"by_class", attack.by_class}, {"accepted", attack.accepted}};
    for (const auto& d : devices) {
        j["devices"][d.name] = {{"lan", d.lan},
                                {"sent", d.sent},
                                {"mka_sent", d.mka_sent},
                                {"received", d.received},
                                {"icv_failures", d.icv_failures},
                                {"malformed", d.malformed},
                                {"duplicates", d.duplicates},
                                {"mka_received", d.mka_received},
                                {"ignored", d.ignored},
                                {"rollovers", d.rollovers}};
    }
    for (const auto& g : gateways) {
        json counters;
        for (const auto& [name, value] : g.stats.counters()) counters[name] = value;
        j["gateways"][g.name] = counters;
    }
    return j;
}

}  // namespace mtun::sim

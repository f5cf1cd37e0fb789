// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Scenario description and results of the deterministic simulator.

#pragma once

#include <chrono>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtun/gateway.hpp"

namespace mtun::sim {

using namespace std::chrono_literals;

inline constexpr Timestamp kForever{std::numeric_limits<Timestamp::rep>::max() / 4};

/// Impairments applied to every genuine tunnel datagram.
struct NetModel {
    double loss = 0.0;
    double duplicate = 0.0;
    double reorder = 0.0;                   // probability of an extra hold-back
    std::uint32_t max_displacement = 4;     // hold-back in reorder units
    Duration reorder_unit = 100us;
    Duration latency = 1ms;
    Duration jitter = 0ns;
};

struct DeviceSpec {
    std::string name;
    std::optional<MacAddress> mac;  // derived from the device index when unset
    std::uint16_t port = 1;
};

struct LanSpec {
    std::string name;
    std::vector<DeviceSpec> devices;
};

/// `count` frames from device `from` to device `to` or "broadcast".
struct TrafficSpec {
    std::string from;
    std::string to;
    std::uint64_t count = 0;
    Timestamp start{};
    Duration interval = 100us;
    std::size_t min_payload = 46;
    std::size_t max_payload = 1000;
    std::uint16_t ethertype = 0x0800;
};

/// Key-agreement frames (EAPOL, sent in the clear) from one device.
struct MkaSpec {
    std::string from;
    std::uint64_t count = 0;
    Timestamp start{};
    Duration interval = 1s;
    std::size_t size = 60;
};

enum class AttackKind : std::uint8_t { Replay, Inject, Mutate, Drop, Delay };
std::string_view to_string(AttackKind k);
std::optional<AttackKind> parse_attack_kind(std::string_view s);

/// An attacker on the tunnel path. Replay, Mutate, Drop and Delay act on
/// genuine datagrams; Inject sends fresh ones.
struct AttackSpec {
    AttackKind kind = AttackKind::Replay;
    Timestamp start{};
    Timestamp end = kForever;
    std::uint64_t count = 0;   // datagrams affected, 0 = no limit (Inject requires a count)
    std::uint64_t skip = 0;    // matching datagrams left alone first
    double probability = 1.0;  // per matching datagram
    Duration delay = 1ms;      // Replay: capture to resend; Delay: extra hold
    Duration interval = 1us;   // Inject spacing
    std::string target;        // LAN whose gateway is targeted, empty = all
    bool raw = false;          // Inject: no valid carrier header
};

/// Management channel from the gateway of LAN `from` to that of LAN `to`.
struct MgmtFaultSpec {
    std::string from;
    std::string to;
    Timestamp down_from = kForever;
    Timestamp down_until = kForever;
    std::uint32_t drop = 0;  // messages silently lost once `drop_after` passed
    Timestamp drop_after{};
};

struct Scenario {
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::Idf;
    std::uint32_t window = kDefaultWindow;
    Duration duration = 10s;
    std::uint32_t pn_ceiling = 1u << 16;
    bool binding = true;
    bool propagate_expire = true;
    Duration flow_timeout = kDefaultFlowTimeout;
    Duration rekey_grace = kDefaultRekeyGrace;
    Duration lan_latency = 5us;
    Duration mgmt_latency = 1ms;
    Duration timer_interval = 100ms;
    NetModel net;
    std::vector<LanSpec> lans;
    std::vector<TrafficSpec> traffic;
    std::vector<MkaSpec> mka;
    std::vector<AttackSpec> attacks;
    std::vector<MgmtFaultSpec> mgmt_faults;
    bool transcript = true;

    /// Empty when valid.
    std::string validate() const;
};

/// Reads a scenario; durations are given in milliseconds ("*_ms" keys).
Expected<Scenario, std::string> scenario_from_json(const nlohmann::json& j);

struct DeviceReport {
    std::string name;
    std::string lan;
    std::uint64_t sent = 0;
    std::uint64_t mka_sent = 0;
    std::uint64_t received = 0;  // ICV verified
    std::uint64_t icv_failures = 0;
    std::uint64_t malformed = 0;
    std::uint64_t duplicates = 0;  // verified again with a seen (SCI, AN, PN)
    std::uint64_t mka_received = 0;
    std::uint64_t ignored = 0;  // addressed to another station
    std::uint64_t rollovers = 0;
};

struct GatewayReport {
    std::string name;
    GatewayId id;
    GatewayStats stats;
};

struct NetReport {
    std::uint64_t sent = 0;  // genuine datagrams handed to the network
    std::uint64_t lost = 0;
    std::uint64_t duplicated = 0;
    std::uint64_t reordered = 0;
    std::uint64_t delivered = 0;
    std::uint64_t in_flight = 0;  // scheduled after the end of the run
    std::uint64_t attacker_dropped = 0;
    std::uint64_t attacker_delayed = 0;
    std::uint64_t mutated = 0;
    std::uint64_t replayed = 0;
    std::uint64_t injected = 0;
    std::uint64_t mgmt_sent = 0;
    std::uint64_t mgmt_lost = 0;
    std::uint64_t mgmt_refused = 0;
};

/// Fate of attacker datagrams. Outcome keys: "gw:<DropReason>", "device:accept",
/// "device:first_copy" (a copy of a genuine frame whose original never arrived),
/// "device:reject", "lan:ignored", "net:pending".
struct AttackReport {
    std::map<std::string, std::uint64_t> outcomes;
    std::map<std::string, std::map<std::string, std::uint64_t>> by_class;  // class -> outcome -> count
    std::uint64_t accepted = 0;  // attacker frames verified by a station
};

struct ScenarioResult {
    std::vector<DeviceReport> devices;
    std::vector<GatewayReport> gateways;
    NetReport net;
    AttackReport attack;
    std::uint64_t expected_deliveries = 0;
    std::uint64_t exact_deliveries = 0;
    std::uint64_t unexpected_deliveries = 0;  // verified genuine frames nobody expected
    std::uint64_t genuine_icv_failures = 0;   // reconstructed genuine frames rejected by a station
    std::vector<std::string> conservation_violations;
    std::vector<std::string> transcript;  // "time_ns,site,event,frame_hash"
    std::uint64_t events = 0;

    std::uint64_t missing_deliveries() const { return expected_deliveries - exact_deliveries; }
    std::uint64_t drops(DropReason r) const;
    const GatewayReport* gateway(std::string_view name) const;
    const DeviceReport* device(std::string_view name) const;
    std::string transcript_csv() const;
    nlohmann::json summary() const;
};

}  // namespace mtun::sim

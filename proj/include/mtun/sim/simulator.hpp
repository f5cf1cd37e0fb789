// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <random>

#include "mtun/sim/event_queue.hpp"
#include "mtun/sim/scenario.hpp"

namespace mtun::sim {

/// Stable 64-bit digest used in transcripts.
std::uint64_t frame_hash(ByteView bytes);

/// Byte-offset class of a carrier datagram, used to group mutation outcomes.
std::string offset_class(Scheme scheme, std::size_t offset, std::size_t datagram_size);

/// One run of a scenario: LANs with MACsec stations, one gateway per LAN, a
/// shared tunnel network with an optional attacker and reliable management
/// channels. Single-threaded and fully determined by the scenario seed.
class Simulator {
public:
    explicit Simulator(Scenario scenario);  // throws std::invalid_argument
    ~Simulator();
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    /// Runs to the scenario duration and collects the result.
    ScenarioResult run();

    /// Hooks for tests: extra events and direct views.
    EventQueue& events();
    std::size_t gateway_count() const;
    Gateway& gateway(std::size_t lan);
    const GatewayId& gateway_id(std::size_t lan) const;
    std::optional<std::size_t> lan_index(std::string_view name) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

ScenarioResult run_scenario(const Scenario& scenario);

}  // namespace mtun::sim

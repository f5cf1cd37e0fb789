// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Scenario builders shared by the simulator tests and the acceptance run.

#pragma once

#include "mtun/sim/simulator.hpp"

namespace mtun::testing {

using namespace std::chrono_literals;

/// `lans` LANs named A, B, C... with `per_lan` stations each (a1, a2, b1...).
inline sim::Scenario topology(Scheme scheme, std::size_t lans, std::size_t per_lan, std::uint64_t seed = 1) {
    sim::Scenario s;
    s.seed = seed;
    s.scheme = scheme;
    s.duration = 5s;
    for (std::size_t i = 0; i < lans; ++i) {
        sim::LanSpec lan;
        lan.name = std::string(1, static_cast<char>('A' + i));
        for (std::size_t d = 0; d < per_lan; ++d)
            lan.devices.push_back(sim::DeviceSpec{std::string(1, static_cast<char>('a' + i)) + std::to_string(d + 1)});
        s.lans.push_back(std::move(lan));
    }
    return s;
}

inline sim::TrafficSpec flow(std::string from, std::string to, std::uint64_t count, Duration interval = 200us,
                             Timestamp start = 10ms) {
    sim::TrafficSpec t;
    t.from = std::move(from);
    t.to = std::move(to);
    t.count = count;
    t.interval = interval;
    t.start = start;
    return t;
}

}  // namespace mtun::testing

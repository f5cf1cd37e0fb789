// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// JSON configuration of a real-mode gateway. Every key is optional:
//
//   {
//     "scheme": "idf",                 "window": 64,
//     "lan": "raw:eth1",               "tunnel_listen": "0.0.0.0:4790",
//     "mgmt_listen": "0.0.0.0:4791",   "stats_interval_s": 5,
//     "peers": ["10.0.0.2:4790", {"tunnel": "10.0.0.3:4790", "mgmt": "10.0.0.3:6000"}],
//     "flow_timeout_ms": 30000, "queue_limit": 128, "mka_buffer": 16, "path_mtu": 1500,
//     "rekey_grace_ms": 2000, "rekey_timeout_ms": 10000, "hello_interval_ms": 5000,
//     "retransmit_initial_ms": 1000, "retransmit_max_ms": 8000,
//     "propagate_expire": true, "filter_peer_source": false
//   }

#pragma once

#include <json.hpp>

#include "mtun/net/runtime.hpp"

namespace mtun::net {

struct GatewaySetup {
    RuntimeConfig runtime;
    std::string lan;
};

GatewaySetup default_setup();

/// Applies the keys present in `j` on top of `setup`.
Expected<GatewaySetup, std::string> apply_json(GatewaySetup setup, const nlohmann::json& j);

}  // namespace mtun::net

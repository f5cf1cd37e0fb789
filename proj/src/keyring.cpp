// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/keyring.hpp"

namespace mtun {

TunnelKey random_tunnel_key(std::uint8_t epoch) {
    TunnelKey k;
    k.epoch = epoch;
    secure_random(k.key);
    return k;
}

}  // namespace mtun

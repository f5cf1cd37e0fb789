// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Full-frame re-encryption baseline: the whole MACsec frame is sealed with
// GCM-AES-128 under the gateway-pair key, as a site-to-site VPN would.
//
//   0       1           9                     N-16    N
//   +-------+-----------+---------------------+-------+
//   | epoch |  counter  |  sealed MACsec frame |  tag  |
//   +-------+-----------+---------------------+-------+
//
// IV = epoch || 0 0 0 || counter, additional data = epoch || counter.

#pragma once

#include <absl/container/flat_hash_map.h>

#include <optional>
#include <string_view>

#include "mtun/keyring.hpp"

namespace mtun {

inline constexpr std::size_t kFullEncPrefix = 9;
inline constexpr std::size_t kFullEncOverhead = kFullEncPrefix + AesGcm128::kTagSize;
inline constexpr std::uint32_t kFullEncWindow = 1024;

/// AES block operations for sealing or opening `n` bytes (keystream blocks plus the tag mask).
constexpr std::uint64_t fullenc_block_ops(std::size_t n) { return (n + 15) / 16 + 1; }

class FullEncCipher {
public:
    explicit FullEncCipher(const TunnelKey& key, std::uint32_t window = kFullEncWindow)
        : gcm_(key.key), epoch_(key.epoch), rx_window_(1, window) {}

    /// Appends the sealed body for `frame` to `out`. False once the counter is exhausted.
    bool seal_into(ByteView frame, Bytes& out);
    /// Opens `body` into `out`; returns the counter, or nullopt on a bad tag.
    std::optional<std::uint64_t> open_into(ByteView body, Bytes& out) const;

    std::uint8_t epoch() const { return epoch_; }
    std::uint64_t block_ops() const { return block_ops_; }
    SlidingWindow& rx_window() { return rx_window_; }

private:
    AesGcm128 gcm_;
    std::uint8_t epoch_;
    std::uint64_t tx_counter_ = 0;
    SlidingWindow rx_window_;
    mutable std::uint64_t block_ops_ = 0;
};

using FullEncKeyring = EpochKeyring<FullEncCipher>;

enum class FullEncError : std::uint8_t { Malformed, BadEpoch, AuthFailed, Replay, OutOfWindow };
std::string_view to_string(FullEncError e);

class FullEncReceiver {
public:
    explicit FullEncReceiver(Duration grace = kDefaultRekeyGrace) : grace_(grace) {}

    void install_key(const GatewayId& peer, const TunnelKey& key, Timestamp now);
    const FullEncKeyring* keyring(const GatewayId& peer) const;

    /// Appends the opened MACsec frame to `out`. An unknown `peer` tries every
    /// peer key with a matching epoch.
    Expected<std::monostate, FullEncError> decode_into(ByteView body, const std::optional<GatewayId>& peer,
                                                       Timestamp now, Bytes& out);
    std::uint64_t block_ops() const;

private:
    Expected<std::monostate, FullEncError> try_key(ByteView body, FullEncCipher& cipher, Bytes& out);

    Duration grace_;
    absl::flat_hash_map<GatewayId, FullEncKeyring> keys_;
};

}  // namespace mtun

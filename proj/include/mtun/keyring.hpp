// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>

#include "mtun/crypto.hpp"
#include "mtun/flow.hpp"

namespace mtun {

inline constexpr Duration kDefaultRekeyGrace = std::chrono::seconds(2);

/// Symmetric key of one direction of one gateway pair, tagged with an 8-bit epoch.
struct TunnelKey {
    Key128 key{};
    std::uint8_t epoch = 0;
};

TunnelKey random_tunnel_key(std::uint8_t epoch);

/// The current epoch plus the previous one until its grace deadline.
/// `Cipher` is constructible from a TunnelKey and exposes epoch() and block_ops().
template <class Cipher>
class EpochKeyring {
public:
    explicit EpochKeyring(Duration grace = kDefaultRekeyGrace) : grace_(grace) {}

    /// Installs `key` as current. Re-installing the current epoch is a no-op.
    void install(const TunnelKey& key, Timestamp now) {
        if (current_ && current_->epoch() == key.epoch) return;
        if (previous_) retired_ops_ += previous_->block_ops();
        previous_.reset();
        if (current_) {
            previous_.emplace(std::move(*current_));
            previous_deadline_ = now + grace_;
        }
        current_.emplace(key);
    }

    Cipher* current() { return current_ ? &*current_ : nullptr; }
    const Cipher* current() const { return current_ ? &*current_ : nullptr; }

    /// Cipher for `epoch` at `now`, or nullptr (unknown or past grace).
    Cipher* lookup(std::uint8_t epoch, Timestamp now) {
        if (current_ && current_->epoch() == epoch) return &*current_;
        if (previous_ && previous_->epoch() == epoch && now < previous_deadline_) return &*previous_;
        return nullptr;
    }
    const Cipher* lookup(std::uint8_t epoch, Timestamp now) const {
        return const_cast<EpochKeyring*>(this)->lookup(epoch, now);
    }

    std::optional<std::uint8_t> current_epoch() const {
        if (!current_) return std::nullopt;
        return current_->epoch();
    }

    std::uint64_t block_ops() const {
        return retired_ops_ + (current_ ? current_->block_ops() : 0) + (previous_ ? previous_->block_ops() : 0);
    }

private:
    Duration grace_;
    std::optional<Cipher> current_;
    std::optional<Cipher> previous_;
    Timestamp previous_deadline_{};
    std::uint64_t retired_ops_ = 0;
};

}  // namespace mtun

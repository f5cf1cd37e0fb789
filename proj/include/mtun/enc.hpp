// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Encryption scheme. The first 256 bits of the MACsec frame (all headers plus
// 32 bits of secure data) are encrypted as two AES-128 blocks chained in
// reverse order:
//
//   c2 = E(p2)                 p2 = D(c2)
//   c1 = E(p1 ^ p2 ^ c2)       p1 = D(c1) ^ p2 ^ c2
//
// There is no IV and no tag. A receiver authenticates the decrypted header by
// looking it up in its flow table.
//
// Wire body (inside the carrier header):
//
//   0       1          17         33                  N-16    N
//   +-------+----------+----------+-------------------+-------+
//   | epoch |    c1    |    c2    | rest of sec. data |  ICV  |
//   +-------+----------+----------+-------------------+-------+
//
// With fewer than 4 bytes of secure data the encrypted blocks reach into the ICV.

#pragma once

#include <absl/container/flat_hash_map.h>

#include <optional>
#include <string_view>

#include "mtun/flow.hpp"
#include "mtun/keyring.hpp"

namespace mtun {

inline constexpr std::size_t kEncBlockBytes = 32;
inline constexpr std::size_t kEncHeaderSize = 1 + kEncBlockBytes;
inline constexpr std::size_t kEncMinBodySize = kMinMacsecFrameSize + 1;
inline constexpr std::ptrdiff_t kEncSizeDelta = 1;

/// p1 = dst||src||EtherType||TCI||SL, p2 = PN||SCI||secure_data[0..4).
struct HeaderBlocks {
    Block p1{};
    Block p2{};

    static HeaderBlocks from_frame(ByteView frame);  // frame.size() >= 32
    void write(std::uint8_t* out) const;             // 32 bytes
    bool operator==(const HeaderBlocks&) const = default;
};

struct CipherBlocks {
    Block c1{};
    Block c2{};
    bool operator==(const CipherBlocks&) const = default;
};

/// AES-128 keyed header cipher with a block-operation counter.
class HeaderCipher {
public:
    explicit HeaderCipher(const TunnelKey& key) : aes_(key.key), epoch_(key.epoch) {}

    CipherBlocks encrypt(const HeaderBlocks& p) const;
    HeaderBlocks decrypt(const CipherBlocks& c) const;

    std::uint8_t epoch() const { return epoch_; }
    std::uint64_t block_ops() const { return block_ops_; }

private:
    Aes128 aes_;
    std::uint8_t epoch_;
    mutable std::uint64_t block_ops_ = 0;
};

CipherBlocks header_encrypt(const HeaderBlocks& blocks, const TunnelKey& key);
HeaderBlocks header_decrypt(const CipherBlocks& c, const TunnelKey& key);

struct EncWireFrame {
    std::uint8_t epoch = 0;
    Block c1{};
    Block c2{};
    Bytes tail;  // frame bytes after the first 32: remaining secure data, then the ICV

    std::size_t wire_size() const { return kEncHeaderSize + tail.size(); }
    bool operator==(const EncWireFrame&) const = default;
};

enum class EncError : std::uint8_t {
    Malformed,
    UnregisteredFlow,
    UnknownFlow,
    HeaderMismatch,
    BadEpoch,
    Replay,
    OutOfWindow,
};
std::string_view to_string(EncError e);

Bytes serialize(const EncWireFrame& wire);
Expected<EncWireFrame, EncError> parse_enc_wire(ByteView body);

Expected<EncWireFrame, EncError> uplink_encode(const MacsecFrame& frame, const UplinkFlowEntry& entry,
                                               const HeaderCipher& cipher);
/// Appends the wire body for the serialized MACsec `frame` to `out`.
void enc_encode_into(ByteView frame, const HeaderCipher& cipher, Bytes& out);

using EncKeyring = EpochKeyring<HeaderCipher>;

/// Downlink state of the encryption scheme.
class EncReceiver {
public:
    explicit EncReceiver(std::uint32_t window = kDefaultWindow, Duration grace = kDefaultRekeyGrace)
        : window_(window), grace_(grace) {}

    enum class AddResult : std::uint8_t { Created, Reset, Duplicate };

    AddResult add_flow(const Bidf& bidf, const HeaderData& header, std::uint32_t pn, Timestamp now,
                       const GatewayId& origin = {});
    bool remove_flow(const Bidf& bidf);

    /// Installs the key `peer` uses towards this gateway.
    void install_key(const GatewayId& peer, const TunnelKey& key, Timestamp now);
    const EncKeyring* keyring(const GatewayId& peer) const;

    /// Decodes a wire body and appends the rebuilt MACsec frame to `out`. A
    /// known `peer` selects its key; otherwise every peer key with a matching
    /// epoch is tried.
    Expected<std::monostate, EncError> decode_into(ByteView body, const std::optional<GatewayId>& peer,
                                                   Timestamp now, Bytes& out);
    Expected<MacsecFrame, EncError> downlink_decode(const EncWireFrame& wire, const GatewayId& peer,
                                                    Timestamp now);

    const DownlinkFlowTable& flows() const { return flows_; }
    DownlinkFlowTable& flows() { return flows_; }
    std::uint64_t block_ops() const;

private:
    Expected<std::monostate, EncError> try_key(ByteView body, const GatewayId& peer, const HeaderCipher& cipher,
                                               Timestamp now, Bytes& out);
    DownlinkFlowEntry* match(const std::uint8_t* header, std::size_t frame_size, const GatewayId& peer,
                             EncError& why);

    std::uint32_t window_;
    Duration grace_;
    DownlinkFlowTable flows_;
    absl::flat_hash_map<FlowKey, std::vector<Bidf>> by_key_;
    absl::flat_hash_map<GatewayId, EncKeyring> keys_;
};

}  // namespace mtun

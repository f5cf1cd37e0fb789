// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Identifier scheme. The sensitive header fields (dst, src, EtherType, AN,
// PN, SCI) are stripped and replaced with a 64-bit rotating identifier
// ridf = SipHash-2-4(key = PN||PN||PN||PN, msg = bidf). The receiver keeps
// a table of the identifiers it expects next and rebuilds the header from it.
//
// Wire body (inside the carrier header):
//
//   0        8         9    10                      N-16    N
//   +--------+---------+----+-----------------------+-------+
//   |  ridf  |TCI flags| SL |      secure data      |  ICV  |
//   +--------+---------+----+-----------------------+-------+
//
// The TCI octet carries the non-sensitive flags only; its AN bits are zero.

#pragma once

#include <absl/container/flat_hash_map.h>

#include <string_view>

#include "mtun/flow.hpp"

namespace mtun {

inline constexpr std::size_t kIdfHeaderSize = 10;
inline constexpr std::size_t kIdfMinBodySize = kIdfHeaderSize + kMinSecureData + kIcvSize;
/// Wire body size relative to the MACsec frame it carries.
inline constexpr std::ptrdiff_t kIdfSizeDelta = 8 - 26;

/// The SipHash key for a PN: the 32-bit PN big-endian, repeated four times.
Key128 ridf_key(std::uint32_t pn);
Ridf derive_ridf(const Bidf& bidf, std::uint32_t pn);

struct IdfWireFrame {
    Ridf ridf;
    std::uint8_t tci_flags = 0;  // AN bits clear
    std::uint8_t sl = 0;
    Bytes secure_data;
    Block icv{};

    std::size_t wire_size() const { return kIdfHeaderSize + secure_data.size() + kIcvSize; }
    bool operator==(const IdfWireFrame&) const = default;
};

enum class IdfError : std::uint8_t { Malformed, UnregisteredFlow, UnknownIdentifier, Replay, OutOfWindow };
std::string_view to_string(IdfError e);

Bytes serialize(const IdfWireFrame& wire);
Expected<IdfWireFrame, IdfError> parse_idf_wire(ByteView body);

/// Builds the wire frame for a frame of a registered flow. Group destinations
/// use the broadcast leg, unicast destinations the matching unicast leg.
Expected<IdfWireFrame, IdfError> uplink_encode(const MacsecFrame& frame, const UplinkFlowEntry& entry);

/// Appends the wire body for the serialized MACsec `frame` to `out`.
void idf_encode_into(ByteView frame, Ridf ridf, Bytes& out);

struct IdentifierEntry {
    std::uint32_t pn = 0;
    bool seen = false;
    Bidf flow;
};

/// Downlink state of the identifier scheme: the flow table and the
/// identifier table, kept coherent with every flow's window.
class IdfReceiver {
public:
    explicit IdfReceiver(std::uint32_t window = kDefaultWindow) : window_(window) {}

    enum class AddResult : std::uint8_t { Created, Reset, Duplicate };

    /// Registers an announced flow and precomputes its identifier window.
    /// A known bidf with a higher PN resets the window; otherwise a no-op.
    AddResult add_flow(const Bidf& bidf, const HeaderData& header, std::uint32_t pn, Timestamp now,
                       const GatewayId& origin = {});
    bool remove_flow(const Bidf& bidf);

    /// Decodes a wire body and appends the rebuilt MACsec frame to `out`.
    Expected<std::monostate, IdfError> decode_into(ByteView body, Timestamp now, Bytes& out);
    Expected<MacsecFrame, IdfError> downlink_decode(const IdfWireFrame& wire, Timestamp now);

    const DownlinkFlowTable& flows() const { return flows_; }
    DownlinkFlowTable& flows() { return flows_; }
    const absl::flat_hash_map<Ridf, IdentifierEntry>& identifiers() const { return ids_; }

    std::uint64_t hash_calls() const { return hash_calls_; }
    std::uint64_t collisions() const { return collisions_; }
    std::uint32_t window() const { return window_; }

    /// Full coherence check: the identifier table holds exactly the slots of
    /// every flow window with matching PN and seen state (collided slots
    /// excepted). Returns an empty string when coherent.
    std::string audit() const;

private:
    void insert_slots(DownlinkFlowEntry& flow, PnRange range);
    void erase_slots(const DownlinkFlowEntry& flow, PnRange range);
    /// `known` is the identifier entry of `pn` on `flow` when the caller already holds it.
    void apply_step(DownlinkFlowEntry& flow, const WindowStep& step, std::uint32_t pn, IdentifierEntry* known = nullptr);

    std::uint32_t window_;
    DownlinkFlowTable flows_;
    absl::flat_hash_map<Ridf, IdentifierEntry> ids_;
    std::uint64_t hash_calls_ = 0;
    std::uint64_t collisions_ = 0;
};

}  // namespace mtun

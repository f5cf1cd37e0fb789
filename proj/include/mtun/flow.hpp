// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Flows and the three per-gateway tables: uplink flows keyed by (SCI, AN),
// downlink flows keyed by bidf, and rotating identifiers keyed by ridf (the
// latter lives with the identifier scheme).

#pragma once

#include <absl/container/flat_hash_map.h>

#include <chrono>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "mtun/encap.hpp"
#include "mtun/frame.hpp"

namespace mtun {

using Timestamp = std::chrono::nanoseconds;  // monotonic time since runtime start
using Duration = std::chrono::nanoseconds;

inline constexpr std::uint64_t kMaxPn = 0xFFFFFFFFull;
inline constexpr std::uint32_t kDefaultWindow = 64;
inline constexpr Duration kDefaultFlowTimeout = std::chrono::seconds(60);

/// Unidirectional flow: one SA towards one destination address.
struct FlowKey {
    Sci sci;
    std::uint8_t an = 0;
    MacAddress dst;

    bool operator==(const FlowKey&) const = default;
    template <typename H>
    friend H AbslHashValue(H h, const FlowKey& k) {
        return H::combine(std::move(h), k.sci.to_u64(), k.an, k.dst.to_u64());
    }
};

/// Security association: the uplink table key.
struct SaKey {
    Sci sci;
    std::uint8_t an = 0;

    bool operator==(const SaKey&) const = default;
    template <typename H>
    friend H AbslHashValue(H h, const SaKey& k) {
        return H::combine(std::move(h), k.sci.to_u64(), k.an);
    }
};

/// 128-bit random per-flow base identifier.
struct Bidf {
    std::array<std::uint8_t, 16> value{};

    auto operator<=>(const Bidf&) const = default;
    template <typename H>
    friend H AbslHashValue(H h, const Bidf& b) {
        return H::combine(std::move(h), load_be64(b.value.data()), load_be64(b.value.data() + 8));
    }
};

/// 64-bit per-frame rotating identifier.
struct Ridf {
    std::uint64_t value = 0;

    auto operator<=>(const Ridf&) const = default;
    template <typename H>
    friend H AbslHashValue(H h, const Ridf& r) {
        return H::combine(std::move(h), r.value);
    }
};

/// Everything needed to rebuild the sensitive header fields of a flow's frames.
struct HeaderData {
    MacAddress dst;
    MacAddress src;
    Sci sci;
    std::uint8_t an = 0;

    SaKey sa() const { return {sci, an}; }
    FlowKey flow_key() const { return {sci, an, dst}; }
    bool operator==(const HeaderData&) const = default;
};

FlowKey classify(const MacsecFrame& frame);
HeaderData header_data_of(const MacsecFrame& frame);

// ---------------------------------------------------------------------------
// Sliding window

enum class WindowResult : std::uint8_t { Accept, Replay, OutOfWindow };
std::string_view to_string(WindowResult r);

/// Half-open PN interval [first, last).
struct PnRange {
    std::uint64_t first = 0;
    std::uint64_t last = 0;

    bool empty() const { return last <= first; }
    std::uint64_t size() const { return empty() ? 0 : last - first; }
    bool contains(std::uint64_t pn) const { return pn >= first && pn < last; }
};

struct WindowStep {
    WindowResult result = WindowResult::OutOfWindow;
    PnRange entered;  // PNs that gained an identifier slot
    PnRange left;     // PNs whose identifier slot is gone
};

/// Receive window tracking the next `size` unseen PNs at or above `lowest`.
///
/// State is (L, H, seen bits over [L, H]) where H is the highest PN accepted
/// so far. The tracked (acceptable) PNs are the first `size` unseen PNs >= L;
/// accepting p sets H = max(H, p) and L = max(L, H - size + 1). Identifier
/// slots cover [L, last_tracked()], seen or not, so a replay inside that range
/// is reported as Replay rather than an unknown identifier. PNs never wrap.
class SlidingWindow {
public:
    SlidingWindow(std::uint32_t start_pn, std::uint32_t size);

    WindowStep accept(std::uint32_t pn);
    /// Records `pn` as used by a bound partner flow. Never rejects; moves the
    /// window forward when `pn` lies beyond it.
    WindowStep consume(std::uint32_t pn);

    std::uint32_t size() const { return size_; }
    std::uint64_t lowest() const { return lowest_; }
    std::uint64_t highest() const { return highest_; }  // lowest() - 1 before the first accept
    std::uint64_t last_tracked() const;
    /// Lowest unseen PN at or above lowest().
    std::uint64_t next_expected() const;
    /// Identifier slots: [lowest, last_tracked].
    PnRange slots() const { return {lowest_, last_tracked() + 1}; }
    bool is_seen(std::uint64_t pn) const;
    bool is_tracked(std::uint64_t pn) const;
    std::vector<std::uint64_t> tracked() const;

private:
    WindowStep mark(std::uint64_t pn);
    std::size_t slot(std::uint64_t pn) const { return static_cast<std::size_t>(pn % size_); }
    bool bit(std::uint64_t pn) const { return (bits_[slot(pn) >> 6] >> (slot(pn) & 63)) & 1u; }
    void set_bit(std::uint64_t pn) { bits_[slot(pn) >> 6] |= std::uint64_t{1} << (slot(pn) & 63); }
    void clear_bit(std::uint64_t pn) { bits_[slot(pn) >> 6] &= ~(std::uint64_t{1} << (slot(pn) & 63)); }

    std::uint32_t size_;
    std::uint64_t lowest_;
    std::uint64_t highest_;
    std::uint64_t seen_count_ = 0;  // seen PNs in [lowest, highest]
    std::vector<std::uint64_t> bits_;
};

/// PNs [start, start + size) clipped at the PN maximum.
PnRange window_init_range(std::uint32_t start_pn, std::uint32_t size);

// ---------------------------------------------------------------------------
// Uplink table

/// One destination class inside an uplink entry. The primary unicast leg uses
/// the entry's unicast bidf and the broadcast leg its broadcast bidf; further
/// unicast or multicast destinations of the same SA receive fresh bidfs.
struct FlowLeg {
    MacAddress dst;
    MacAddress src;
    Bidf bidf;
    std::uint32_t first_pn = 0;
    std::vector<GatewayId> remote_gateways;  // empty: not learned, send to all peers

    bool is_group() const { return dst.is_multicast(); }
};

struct UplinkFlowEntry {
    Bidf unicast_bidf;
    Bidf broadcast_bidf;
    Timestamp timeout{};
    std::vector<FlowLeg> legs;

    FlowLeg* find_leg(const MacAddress& dst, const MacAddress& src);
    const FlowLeg* find_leg(const MacAddress& dst, const MacAddress& src) const;
};

class UplinkTable {
public:
    UplinkFlowEntry* find(const SaKey& key);
    const UplinkFlowEntry* find(const SaKey& key) const;
    /// Inserts a new entry; `entry.timeout` must lie after `now`.
    UplinkFlowEntry& insert(const SaKey& key, UplinkFlowEntry entry, Timestamp now);
    bool erase(const SaKey& key);
    std::size_t size() const { return entries_.size(); }

    /// Removes entries whose timeout lies before `now`.
    std::vector<std::pair<SaKey, UplinkFlowEntry>> expire(Timestamp now);

    template <class F>
    void for_each(F&& f) const {
        for (const auto& [k, v] : entries_) f(k, v);
    }

private:
    absl::flat_hash_map<SaKey, UplinkFlowEntry> entries_;
};

// ---------------------------------------------------------------------------
// Downlink flow table

struct DownlinkFlowEntry {
    Bidf bidf;
    HeaderData header;
    SlidingWindow window;
    std::vector<Bidf> bound;  // partner flows of the same SA sharing its PN sequence
    Timestamp last_activity{};
    GatewayId origin;              // announcing gateway
    std::uint32_t announced_pn = 0;
    std::vector<Ridf> slot_ids;    // identifier scheme: ridf per window slot, pn % size()

    DownlinkFlowEntry(const Bidf& id, const HeaderData& h, std::uint32_t start_pn, std::uint32_t w)
        : bidf(id), header(h), window(start_pn, w) {}

    std::uint64_t next_expected_pn() const { return window.next_expected(); }
};

enum class BindError : std::uint8_t { BindMismatch };

/// Binds two flows of the same SA with different destinations so that a PN
/// accepted on either is consumed on both.
Expected<std::monostate, BindError> bind(DownlinkFlowEntry& a, DownlinkFlowEntry& b);
void unbind(DownlinkFlowEntry& a, DownlinkFlowEntry& b);

class DownlinkFlowTable {
public:
    DownlinkFlowEntry* find(const Bidf& bidf);
    const DownlinkFlowEntry* find(const Bidf& bidf) const;

    /// Creates the flow and binds it to every existing flow of the same SA
    /// (when binding is enabled).
    DownlinkFlowEntry& insert(const Bidf& bidf, const HeaderData& header, std::uint32_t start_pn,
                              std::uint32_t window, Timestamp now);
    /// Removes the flow, unbinding its partners.
    bool erase(const Bidf& bidf);

    /// Runs accept on `flow` and, on Accept, consume on its partners.
    /// `on_step(flow, step)` observes every window movement.
    template <class OnStep>
    WindowResult accept(DownlinkFlowEntry& flow, std::uint32_t pn, Timestamp now, OnStep&& on_step) {
        WindowStep step = flow.window.accept(pn);
        on_step(flow, step);
        if (step.result != WindowResult::Accept) return step.result;
        flow.last_activity = now;
        for (const Bidf& partner_id : flow.bound) {
            if (auto* partner = find(partner_id)) {
                WindowStep ps = partner->window.consume(pn);
                on_step(*partner, ps);
            }
        }
        return WindowResult::Accept;
    }

    /// Bidfs of flows idle since before `now - idle`.
    std::vector<Bidf> idle_flows(Timestamp now, Duration idle) const;

    std::size_t size() const { return flows_.size(); }
    bool binding_enabled() const { return binding_enabled_; }
    void set_binding_enabled(bool on) { binding_enabled_ = on; }  // test hook

    template <class F>
    void for_each(F&& f) const {
        for (const auto& [k, v] : flows_) f(v);
    }

private:
    absl::flat_hash_map<Bidf, DownlinkFlowEntry> flows_;
    absl::flat_hash_map<SaKey, std::vector<Bidf>> by_sa_;
    bool binding_enabled_ = true;
};

}  // namespace mtun

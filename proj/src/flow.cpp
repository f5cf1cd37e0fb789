// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/flow.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace mtun {

FlowKey classify(const MacsecFrame& frame) {
    return {frame.sectag.sci, frame.sectag.tci.an, frame.dst};
}

HeaderData header_data_of(const MacsecFrame& frame) {
    return {frame.dst, frame.src, frame.sectag.sci, frame.sectag.tci.an};
}

std::string_view to_string(WindowResult r) {
    switch (r) {
        case WindowResult::Accept: return "Accept";
        case WindowResult::Replay: return "Replay";
        case WindowResult::OutOfWindow: return "OutOfWindow";
    }
    return "?";
}

PnRange window_init_range(std::uint32_t start_pn, std::uint32_t size) {
    const std::uint64_t last = std::min<std::uint64_t>(std::uint64_t{start_pn} + size, kMaxPn + 1);
    return {start_pn, last};
}

SlidingWindow::SlidingWindow(std::uint32_t start_pn, std::uint32_t size)
    : size_(size), lowest_(start_pn), highest_(std::uint64_t{start_pn} - 1), bits_((size + 63) / 64, 0) {
    if (size == 0) throw std::invalid_argument("SlidingWindow: size must be >= 1");
    if (start_pn == 0) throw std::invalid_argument("SlidingWindow: start_pn must be >= 1");
}

std::uint64_t SlidingWindow::last_tracked() const {
    const std::uint64_t unseen_below = (highest_ + 1 - lowest_) - seen_count_;
    return std::min(highest_ + (size_ - unseen_below), kMaxPn);
}

std::uint64_t SlidingWindow::next_expected() const {
    for (std::uint64_t pn = lowest_; pn <= highest_; ++pn)
        if (!bit(pn)) return pn;
    return highest_ + 1;
}

bool SlidingWindow::is_seen(std::uint64_t pn) const {
    return pn >= lowest_ && pn <= highest_ && bit(pn);
}

bool SlidingWindow::is_tracked(std::uint64_t pn) const {
    if (pn < lowest_ || pn > last_tracked()) return false;
    return !is_seen(pn);
}

std::vector<std::uint64_t> SlidingWindow::tracked() const {
    std::vector<std::uint64_t> out;
    const std::uint64_t last = last_tracked();
    for (std::uint64_t pn = lowest_; pn <= last; ++pn)
        if (!is_seen(pn)) out.push_back(pn);
    return out;
}

WindowStep SlidingWindow::accept(std::uint32_t pn) {
    WindowStep step;
    if (pn < lowest_) return step;  // OutOfWindow
    if (pn <= highest_) {
        if (bit(pn)) {
            step.result = WindowResult::Replay;
            return step;
        }
    } else if (pn > last_tracked()) {
        return step;
    }
    return mark(pn);
}

WindowStep SlidingWindow::consume(std::uint32_t pn) {
    if (pn < lowest_ || is_seen(pn)) return WindowStep{WindowResult::Replay, {}, {}};
    return mark(pn);
}

WindowStep SlidingWindow::mark(std::uint64_t pn) {
    const std::uint64_t old_lowest = lowest_;
    const std::uint64_t old_last = last_tracked();
    const std::uint64_t old_highest = highest_;

    highest_ = std::max(highest_, pn);
    const std::uint64_t new_lowest = highest_ + 1 > size_ ? std::max(lowest_, highest_ + 1 - size_) : lowest_;

    // Drop seen bits of PNs falling below the new lower edge.
    const std::uint64_t clear_end = std::min(new_lowest, old_highest + 1);
    for (std::uint64_t q = old_lowest; q < clear_end; ++q) {
        if (bit(q)) {
            clear_bit(q);
            --seen_count_;
        }
    }
    lowest_ = new_lowest;
    set_bit(pn);
    ++seen_count_;

    const std::uint64_t new_last = last_tracked();
    WindowStep step;
    step.result = WindowResult::Accept;
    step.left = {old_lowest, std::min(new_lowest, old_last + 1)};
    step.entered = {std::max(old_last + 1, new_lowest), new_last + 1};
    return step;
}

// ---------------------------------------------------------------------------

FlowLeg* UplinkFlowEntry::find_leg(const MacAddress& dst, const MacAddress& src) {
    for (auto& leg : legs)
        if (leg.dst == dst && leg.src == src) return &leg;
    return nullptr;
}

const FlowLeg* UplinkFlowEntry::find_leg(const MacAddress& dst, const MacAddress& src) const {
    return const_cast<UplinkFlowEntry*>(this)->find_leg(dst, src);
}

UplinkFlowEntry* UplinkTable::find(const SaKey& key) {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

const UplinkFlowEntry* UplinkTable::find(const SaKey& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

UplinkFlowEntry& UplinkTable::insert(const SaKey& key, UplinkFlowEntry entry, Timestamp now) {
    if (entry.timeout <= now) throw std::invalid_argument("UplinkTable::insert: timeout not in the future");
    if (entry.unicast_bidf == entry.broadcast_bidf)
        throw std::invalid_argument("UplinkTable::insert: unicast and broadcast bidf must differ");
    auto [it, inserted] = entries_.insert_or_assign(key, std::move(entry));
    return it->second;
}

bool UplinkTable::erase(const SaKey& key) { return entries_.erase(key) > 0; }

std::vector<std::pair<SaKey, UplinkFlowEntry>> UplinkTable::expire(Timestamp now) {
    std::vector<std::pair<SaKey, UplinkFlowEntry>> evicted;
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (it->second.timeout < now) {
            evicted.emplace_back(it->first, std::move(it->second));
            entries_.erase(it++);
        } else {
            ++it;
        }
    }
    std::sort(evicted.begin(), evicted.end(), [](const auto& a, const auto& b) {
        return std::pair{a.first.sci.to_u64(), a.first.an} < std::pair{b.first.sci.to_u64(), b.first.an};
    });
    return evicted;
}

// ---------------------------------------------------------------------------

Expected<std::monostate, BindError> bind(DownlinkFlowEntry& a, DownlinkFlowEntry& b) {
    if (a.header.sci != b.header.sci || a.header.an != b.header.an || a.header.dst == b.header.dst ||
        a.bidf == b.bidf)
        return BindError::BindMismatch;
    if (std::find(a.bound.begin(), a.bound.end(), b.bidf) == a.bound.end()) a.bound.push_back(b.bidf);
    if (std::find(b.bound.begin(), b.bound.end(), a.bidf) == b.bound.end()) b.bound.push_back(a.bidf);
    return std::monostate{};
}

void unbind(DownlinkFlowEntry& a, DownlinkFlowEntry& b) {
    std::erase(a.bound, b.bidf);
    std::erase(b.bound, a.bidf);
}

DownlinkFlowEntry* DownlinkFlowTable::find(const Bidf& bidf) {
    auto it = flows_.find(bidf);
    return it == flows_.end() ? nullptr : &it->second;
}

const DownlinkFlowEntry* DownlinkFlowTable::find(const Bidf& bidf) const {
    auto it = flows_.find(bidf);
    return it == flows_.end() ? nullptr : &it->second;
}

DownlinkFlowEntry& DownlinkFlowTable::insert(const Bidf& bidf, const HeaderData& header,
                                             std::uint32_t start_pn, std::uint32_t window, Timestamp now) {
    erase(bidf);
    auto [it, _] = flows_.try_emplace(bidf, bidf, header, start_pn, window);
    it->second.last_activity = now;
    auto& siblings = by_sa_[header.sa()];
    if (binding_enabled_) {
        for (const Bidf& other_id : siblings) {
            auto* other = find(other_id);
            if (other && other->header.dst != header.dst) (void)bind(it->second, *other);
        }
    }
    siblings.push_back(bidf);
    return it->second;
}

bool DownlinkFlowTable::erase(const Bidf& bidf) {
    auto it = flows_.find(bidf);
    if (it == flows_.end()) return false;
    for (const Bidf& partner_id : it->second.bound)
        if (auto* partner = find(partner_id)) std::erase(partner->bound, bidf);
    const SaKey sa = it->second.header.sa();
    if (auto s = by_sa_.find(sa); s != by_sa_.end()) {
        std::erase(s->second, bidf);
        if (s->second.empty()) by_sa_.erase(s);
    }
    flows_.erase(it);
    return true;
}

std::vector<Bidf> DownlinkFlowTable::idle_flows(Timestamp now, Duration idle) const {
    std::vector<Bidf> out;
    for (const auto& [k, v] : flows_)
        if (v.last_activity + idle < now) out.push_back(k);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace mtun

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Set-based reference model of the receive window, shared by the unit and
// acceptance tests.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mtun/flow.hpp"

namespace mtun::testing {

class NaiveWindow {
public:
    static constexpr std::uint64_t kPnMax = 0xFFFFFFFFull;

    NaiveWindow(std::uint64_t start, std::uint64_t size) : low_(start), size_(size) {}

    // The first `size` unseen PNs at or above the lower edge.
    std::vector<std::uint64_t> tracked() const {
        std::vector<std::uint64_t> out;
        for (std::uint64_t pn = low_; out.size() < size_ && pn <= kPnMax; ++pn)
            if (!seen_.count(pn)) out.push_back(pn);
        return out;
    }

    WindowResult accept(std::uint64_t pn) {
        if (pn < low_) return WindowResult::OutOfWindow;
        if (seen_.count(pn)) return WindowResult::Replay;
        const auto t = tracked();
        if (std::find(t.begin(), t.end(), pn) == t.end()) return WindowResult::OutOfWindow;
        seen_.insert(pn);
        if (pn + 1 > size_) low_ = std::max(low_, pn + 1 - size_);
        while (!seen_.empty() && *seen_.begin() < low_) seen_.erase(seen_.begin());
        return WindowResult::Accept;
    }

    std::uint64_t lowest() const { return low_; }

private:
    std::uint64_t low_;
    std::uint64_t size_;
    std::set<std::uint64_t> seen_;
};

/// Runs `pns` through both models; returns a description of the first
/// divergence or an empty string.
inline std::string compare_windows(std::uint32_t start, std::uint32_t size, const std::vector<std::uint32_t>& pns) {
    SlidingWindow real(start, size);
    NaiveWindow naive(start, size);
    auto fail = [&](std::size_t i, const std::string& what) {
        std::ostringstream os;
        os << "W=" << size << " start=" << start << " step " << i << ": " << what << " seq=";
        for (auto p : pns) os << p << ' ';
        return os.str();
    };
    if (real.tracked() != naive.tracked()) return fail(0, "initial tracked set");
    for (std::size_t i = 0; i < pns.size(); ++i) {
        const auto before = naive.tracked();
        const std::set<std::uint64_t> before_set(before.begin(), before.end());
        const WindowStep step = real.accept(pns[i]);
        const WindowResult want = naive.accept(pns[i]);
        if (step.result != want) return fail(i, "result");
        const auto after = naive.tracked();
        if (real.tracked() != after) return fail(i, "tracked set");
        if (real.lowest() != naive.lowest()) return fail(i, "lowest");
        if (want != WindowResult::Accept) {
            if (!step.entered.empty() || !step.left.empty()) return fail(i, "slots changed on reject");
            continue;
        }
        const std::set<std::uint64_t> after_set(after.begin(), after.end());
        for (std::uint64_t pn : after)
            if (!before_set.count(pn) && !step.entered.contains(pn)) return fail(i, "entered range misses a PN");
        for (std::uint64_t pn = step.entered.first; pn < step.entered.last; ++pn)
            if (!after_set.count(pn) || before_set.count(pn)) return fail(i, "entered range too wide");
        for (std::uint64_t pn : before)
            if (pn != pns[i] && !after_set.count(pn) && !step.left.contains(pn))
                return fail(i, "left range misses a PN");
        for (std::uint64_t pn = step.left.first; pn < step.left.last; ++pn)
            if (after_set.count(pn) || pn >= real.lowest()) return fail(i, "left range keeps a live PN");
    }
    return {};
}

struct WindowCheckSummary {
    std::uint64_t sequences = 0;
    std::uint64_t divergences = 0;
    std::string first;
};

/// Every sequence of `length` PNs drawn from [1, alphabet] for each length
/// up to `length`, explored depth first.
inline void exhaustive_windows(std::uint32_t size, std::uint32_t alphabet, std::size_t length,
                               WindowCheckSummary& out) {
    std::vector<std::uint32_t> seq;
    struct Frame {
        SlidingWindow real;
        NaiveWindow naive;
    };
    // Explicit recursion keeps both models in lock step without replaying prefixes.
    auto rec = [&](auto&& self, const Frame& f) -> void {
        if (seq.size() == length) return;
        for (std::uint32_t pn = 1; pn <= alphabet; ++pn) {
            Frame next = f;
            const WindowResult got = next.real.accept(pn).result;
            const WindowResult want = next.naive.accept(pn);
            seq.push_back(pn);
            ++out.sequences;
            if (got != want || next.real.tracked() != next.naive.tracked()) {
                if (out.divergences++ == 0) out.first = compare_windows(1, size, seq);
            } else {
                self(self, next);
            }
            seq.pop_back();
        }
    };
    rec(rec, Frame{SlidingWindow(1, size), NaiveWindow(1, size)});
}

/// Random sequences mixing in-order runs, gaps near the window size, replays
/// and stale PNs.
inline std::vector<std::uint32_t> random_pn_sequence(std::mt19937_64& rng, std::uint32_t start, std::uint32_t size,
                                                     std::size_t length) {
    std::vector<std::uint32_t> out;
    std::uint64_t cursor = start;
    for (std::size_t i = 0; i < length; ++i) {
        std::uint64_t pn;
        switch (rng() % 6) {
            case 0: pn = cursor + rng() % (2 * size + 2); break;
            case 1: pn = cursor + size - 1 + rng() % 3; break;
            case 2: pn = out.empty() ? cursor : out[rng() % out.size()]; break;
            case 3: pn = cursor > size ? cursor - rng() % (size + 1) : cursor; break;
            default: pn = cursor + rng() % 2; break;
        }
        pn = std::clamp<std::uint64_t>(pn, 1, NaiveWindow::kPnMax);
        out.push_back(static_cast<std::uint32_t>(pn));
        cursor = std::max(cursor, pn);
    }
    return out;
}

}  // namespace mtun::testing

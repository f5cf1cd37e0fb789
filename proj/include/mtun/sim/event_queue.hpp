// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "mtun/flow.hpp"

namespace mtun::sim {

/// Discrete-event queue. Events at equal times run in scheduling order.
class EventQueue {
public:
    using Action = std::function<void()>;

    Timestamp now() const { return now_; }
    void at(Timestamp when, Action action) { events_.push(Event{std::max(when, now_), seq_++, std::move(action)}); }
    void after(Duration delay, Action action) { at(now_ + delay, std::move(action)); }

    /// Runs events with time < `end`; leaves now() at `end`.
    std::uint64_t run_until(Timestamp end) {
        std::uint64_t n = 0;
        while (!events_.empty() && events_.top().when < end) {
            Event e = std::move(const_cast<Event&>(events_.top()));
            events_.pop();
            now_ = e.when;
            e.action();
            ++n;
        }
        now_ = std::max(now_, end);
        return n;
    }
    bool empty() const { return events_.empty(); }
    std::size_t pending() const { return events_.size(); }

private:
    struct Event {
        Timestamp when;
        std::uint64_t seq;
        Action action;
        bool operator>(const Event& o) const { return when != o.when ? when > o.when : seq > o.seq; }
    };
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    Timestamp now_{};
    std::uint64_t seq_ = 0;
};

}  // namespace mtun::sim

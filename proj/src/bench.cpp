// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/bench.hpp"

#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <deque>
#include <iomanip>
#include <memory>
#include <random>
#include <sstream>
#include <thread>

#include "mtun/endpoint.hpp"
#include "mtun/net/runtime.hpp"

namespace mtun {

namespace {

using Clock = std::chrono::steady_clock;
using namespace std::chrono_literals;

constexpr std::size_t kPnOffset = 16;
constexpr std::size_t kBatch = 32;

void put_pn(Bytes& frame, std::uint32_t pn) {
    frame[kPnOffset] = static_cast<std::uint8_t>(pn >> 24);
    frame[kPnOffset + 1] = static_cast<std::uint8_t>(pn >> 16);
    frame[kPnOffset + 2] = static_cast<std::uint8_t>(pn >> 8);
    frame[kPnOffset + 3] = static_cast<std::uint8_t>(pn);
}

std::uint32_t get_pn(const std::uint8_t* frame) {
    return static_cast<std::uint32_t>(frame[kPnOffset]) << 24 | static_cast<std::uint32_t>(frame[kPnOffset + 1]) << 16 |
           static_cast<std::uint32_t>(frame[kPnOffset + 2]) << 8 | frame[kPnOffset + 3];
}

/// One protected unicast frame of exactly `size` bytes.
Bytes template_frame(std::size_t size, std::mt19937_64& rng) {
    auto mac = [&](std::uint8_t first) {
        MacAddress m;
        for (auto& o : m.octets) o = static_cast<std::uint8_t>(rng());
        m.octets[0] = first;
        return m;
    };
    PlainFrame p;
    p.dst = mac(0x02);
    p.src = mac(0x06);
    p.ethertype = 0x0800;
    p.payload.resize(size - kEthHeaderSize - kMacsecOverhead);
    for (auto& b : p.payload) b = static_cast<std::uint8_t>(rng());
    Key128 key;
    for (auto& b : key) b = static_cast<std::uint8_t>(rng());
    Bytes out = build_macsec(endpoint_protect(p, key, Sci{p.src, 1}, 0, 1)).value();
    if (out.size() != size) throw std::logic_error("bench template size");
    return out;
}

struct Tally {
    std::uint64_t frames = 0;
    std::uint64_t failures = 0;
    Duration elapsed{};
    std::vector<std::uint32_t> latency_ns;
    std::size_t wire_size = 0;
    double hash_per_frame = 0;
    double blocks_per_frame = 0;
};

double percentile(std::vector<std::uint32_t>& v, double q) {
    if (v.empty()) return 0.0;
    const std::size_t k = std::min(v.size() - 1, static_cast<std::size_t>(q * static_cast<double>(v.size())));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k] / 1000.0;
}

class Lane {
public:
    virtual ~Lane() = default;
    /// Sends frames until one arrives intact, so flows and keys are in place.
    virtual bool warm_up() = 0;
    virtual void run_for(Duration budget, Tally& t) = 0;
    /// Fills the per-frame crypto counts once measuring is over.
    virtual void finish(Tally& t) = 0;
};

// ---------------------------------------------------------------------------
// In-process: the sender's datagram is handed straight to the receiver.

class InProcessLane final : public Lane {
public:
    InProcessLane(const BenchConfig& cfg, Scheme scheme, const Bytes& frame)
        : frame_(frame), stride_(cfg.latency_stride), side_{Side(this, 0), Side(this, 1)} {
        const GatewayId ids[2] = {GatewayId{0x7F000001u, 4790}, GatewayId{0x7F000002u, 4790}};
        for (int i = 0; i < 2; ++i) {
            GatewayConfig gc;
            gc.self = ids[i];
            gc.peers = {ids[1 - i]};
            gc.scheme = scheme;
            gc.window = cfg.window;
            side_[i].id = ids[i];
            side_[i].rng.seed(cfg.seed + static_cast<std::uint64_t>(i));
            side_[i].gw = std::make_unique<Gateway>(gc, side_[i]);
        }
        for (auto& s : side_) s.gw->start(now());
        pump_mgmt();
    }

    bool warm_up() override {
        for (int i = 0; i < 16; ++i) {
            if (send_one()) {
                base_ = {side_[0].gw->snapshot_stats(), side_[1].gw->snapshot_stats()};
                return true;
            }
            pump_mgmt();
        }
        return false;
    }

    void run_for(Duration budget, Tally& t) override {
        const auto start = Clock::now();
        const auto end = start + budget;
        std::size_t n = 0;
        do {
            now_ = Clock::now() - epoch_;
            for (std::size_t i = 0; i < kBatch; ++i, ++n) {
                if (n % stride_ == 0) {
                    const auto t0 = Clock::now();
                    const bool ok = send_one();
                    t.latency_ns.push_back(static_cast<std::uint32_t>((Clock::now() - t0).count()));
                    ok ? ++t.frames : ++t.failures;
                } else {
                    send_one() ? ++t.frames : ++t.failures;
                }
            }
            if (!mgmt_.empty()) pump_mgmt();
        } while (Clock::now() < end);
        t.elapsed += Clock::now() - start;
        t.wire_size = wire_size_;
    }

    void finish(Tally& t) override {
        const GatewayStats a = side_[0].gw->snapshot_stats();
        const GatewayStats b = side_[1].gw->snapshot_stats();
        const double frames = static_cast<double>(a.frames_tunneled - base_[0].frames_tunneled);
        if (frames == 0) return;
        t.hash_per_frame = static_cast<double>(a.hash_uplink - base_[0].hash_uplink + b.hash_downlink -
                                               base_[1].hash_downlink) /
                           frames;
        t.blocks_per_frame = static_cast<double>(a.block_ops_uplink - base_[0].block_ops_uplink +
                                                 b.block_ops_downlink - base_[1].block_ops_downlink) /
                             frames;
    }

private:
    struct Side final : GatewayIo {
        Side(InProcessLane* l, int i) : lane(l), index(i) {}
        InProcessLane* lane;
        int index;
        GatewayId id;
        std::mt19937_64 rng;
        std::unique_ptr<Gateway> gw;

        void lan_send(ByteView f) override {
            if (index == 1) lane->delivered_ = f.size() == lane->frame_.size() &&
                                               std::memcmp(f.data(), lane->frame_.data(), f.size()) == 0;
        }
        void tunnel_send(const GatewayId&, ByteView d) override {
            if (index == 0) {
                lane->dgram_.assign(d.begin(), d.end());
                lane->have_dgram_ = true;
            }
        }
        bool mgmt_send(const GatewayId&, ByteView m) override {
            lane->mgmt_.push_back({index, Bytes(m.begin(), m.end())});
            return true;
        }
        void random_bytes(MutableByteView out) override {
            for (auto& b : out) b = static_cast<std::uint8_t>(rng());
        }
    };

    Timestamp now() { return now_ = Clock::now() - epoch_; }

    bool send_one() {
        put_pn(frame_, ++pn_);
        delivered_ = false;
        have_dgram_ = false;
        side_[0].gw->on_lan_frame(frame_, now_);
        if (have_dgram_) {
            wire_size_ = dgram_.size();
            side_[1].gw->on_tunnel_packet(dgram_, side_[0].id, now_);
        }
        return delivered_;
    }

    void pump_mgmt() {
        while (!mgmt_.empty()) {
            auto [from, bytes] = std::move(mgmt_.front());
            mgmt_.pop_front();
            side_[1 - from].gw->on_mgmt_bytes(side_[from].id, bytes, now_);
        }
        // Frames queued before the announce was acknowledged.
        while (have_dgram_) {
            have_dgram_ = false;
            side_[1].gw->on_tunnel_packet(dgram_, side_[0].id, now_);
        }
    }

    Bytes frame_;
    std::size_t stride_;
    Side side_[2];
    std::array<GatewayStats, 2> base_{};
    std::deque<std::pair<int, Bytes>> mgmt_;
    Bytes dgram_;
    bool have_dgram_ = false;
    bool delivered_ = false;
    std::size_t wire_size_ = 0;
    std::uint32_t pn_ = 0;
    Clock::time_point epoch_ = Clock::now();
    Timestamp now_{};
};

// ---------------------------------------------------------------------------
// Loopback: each gateway runs its own poll loop on a thread; frames enter and
// leave through socket pairs and cross the tunnel over UDP on 127.0.0.1.

class LoopbackLane final : public Lane {
public:
    static Expected<std::unique_ptr<LoopbackLane>, std::string> create(const BenchConfig& cfg, Scheme scheme,
                                                                       const Bytes& frame) {
        std::unique_ptr<LoopbackLane> lane(new LoopbackLane(cfg, frame));
        const GatewayId any{0x7F000001u, 0};
        for (int i = 0; i < 2; ++i) {
            auto pair = net::make_lan_pair();
            if (!pair) return pair.error();
            net::RuntimeConfig rc;
            rc.gateway.scheme = scheme;
            rc.gateway.window = cfg.window;
            rc.tunnel_listen = any;
            rc.mgmt_listen = any;
            rc.tick = 10ms;
            rc.reconnect_interval = 50ms;
            auto rt = net::GatewayRuntime::bind(rc, std::move(pair.value().port));
            if (!rt) return rt.error();
            lane->rt_[i] = std::move(rt.value());
            lane->driver_[i] = std::move(pair.value().driver);
        }
        for (int i = 0; i < 2; ++i)
            lane->rt_[i]->add_peer({lane->rt_[1 - i]->tunnel_endpoint(), lane->rt_[1 - i]->mgmt_endpoint()});
        for (int i = 0; i < 2; ++i) {
            lane->rt_[i]->start();
            lane->threads_[i] = std::thread([rt = lane->rt_[i].get(), stop = &lane->stop_] { rt->run(*stop); });
        }
        return lane;
    }

    ~LoopbackLane() override { stop(); }

    bool warm_up() override {
        const auto deadline = Clock::now() + 10s;
        while (Clock::now() < deadline) {
            send(++pn_);
            if (receive(200ms) > 0) {
                drain();
                return true;
            }
        }
        return false;
    }

    void run_for(Duration budget, Tally& t) override {
        const auto start = Clock::now();
        const auto end = start + budget;
        tally_ = &t;
        while (Clock::now() < end) {
            while (outstanding_ < in_flight_) send(++pn_);
            if (receive(100ms) == 0) {
                t.failures += outstanding_;  // lost on the loopback path
                outstanding_ = 0;
            }
        }
        drain();
        tally_ = nullptr;
        t.elapsed += Clock::now() - start;
    }

    void finish(Tally& t) override {
        stop();
        const GatewayStats a = rt_[0]->gateway().snapshot_stats();
        const GatewayStats b = rt_[1]->gateway().snapshot_stats();
        if (a.frames_tunneled == 0) return;
        const double frames = static_cast<double>(a.frames_tunneled);
        t.hash_per_frame = static_cast<double>(a.hash_uplink + b.hash_downlink) / frames;
        t.blocks_per_frame = static_cast<double>(a.block_ops_uplink + b.block_ops_downlink) / frames;
        t.wire_size = a.datagrams_out ? a.tunnel_bytes_out / a.datagrams_out : 0;
    }

private:
    LoopbackLane(const BenchConfig& cfg, const Bytes& frame)
        : frame_(frame), stride_(cfg.latency_stride), in_flight_(cfg.in_flight), sent_at_(4096) {}

    void stop() {
        stop_ = true;
        for (auto& th : threads_)
            if (th.joinable()) th.join();
    }

    void send(std::uint32_t pn) {
        put_pn(frame_, pn);
        sent_at_[pn % sent_at_.size()] = Clock::now();
        ::send(driver_[0].get(), frame_.data(), frame_.size(), 0);
        ++outstanding_;
    }

    /// Waits up to `timeout` for output and consumes it; returns frames read.
    std::size_t receive(Duration timeout) {
        pollfd p{driver_[1].get(), POLLIN, 0};
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(timeout).count();
        if (::poll(&p, 1, static_cast<int>(ms)) <= 0) return 0;
        std::size_t n = 0;
        std::uint8_t buf[2048];
        for (;;) {
            const ssize_t len = ::recv(driver_[1].get(), buf, sizeof buf, MSG_DONTWAIT);
            if (len <= 0) break;
            ++n;
            if (outstanding_) --outstanding_;
            if (!tally_) continue;
            const bool exact = static_cast<std::size_t>(len) == frame_.size() &&
                               std::memcmp(buf, frame_.data(), kPnOffset) == 0 &&
                               std::memcmp(buf + kPnOffset + 4, frame_.data() + kPnOffset + 4,
                                           frame_.size() - kPnOffset - 4) == 0;
            if (!exact) {
                ++tally_->failures;
                continue;
            }
            const std::uint32_t pn = get_pn(buf);
            ++tally_->frames;
            if (pn % stride_ == 0)
                tally_->latency_ns.push_back(
                    static_cast<std::uint32_t>((Clock::now() - sent_at_[pn % sent_at_.size()]).count()));
        }
        return n;
    }

    void drain() {
        while (outstanding_ && receive(100ms) > 0) {
        }
        outstanding_ = 0;
    }

    Bytes frame_;
    std::size_t stride_;
    std::size_t in_flight_;
    std::unique_ptr<net::GatewayRuntime> rt_[2];
    net::Fd driver_[2];
    std::thread threads_[2];
    std::atomic<bool> stop_{false};
    std::vector<Clock::time_point> sent_at_;
    std::size_t outstanding_ = 0;
    std::uint32_t pn_ = 0;
    Tally* tally_ = nullptr;
};

}  // namespace

std::string BenchConfig::validate() const {
    if (schemes.empty()) return "no schemes";
    if (sizes.empty()) return "no frame sizes";
    if (duration < Duration::zero()) return "negative duration";
    if (slice <= Duration::zero()) return "slice must be positive";
    if (window == 0) return "window must be positive";
    if (latency_stride == 0) return "latency stride must be positive";
    if (in_flight == 0) return "in-flight limit must be positive";
    for (std::size_t size : sizes) {
        if (size < kMinMacsecFrameSize || size > kMaxFrameSize)
            return "frame size " + std::to_string(size) + " outside [" + std::to_string(kMinMacsecFrameSize) + ", " +
                   std::to_string(kMaxFrameSize) + "]";
        for (Scheme s : schemes)
            if (bench_wire_size(s, size) > kDefaultPathMtu - kIpUdpOverhead)
                return "frame size " + std::to_string(size) + " does not fit the path MTU under " +
                       std::string(to_string(s));
    }
    return {};
}

std::size_t bench_wire_size(Scheme scheme, std::size_t frame_size) {
    switch (scheme) {
        case Scheme::Naive: return frame_size + kEncapHeaderSize;
        case Scheme::Idf: return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(frame_size) + kIdfSizeDelta) + kEncapHeaderSize;
        case Scheme::Enc: return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(frame_size) + kEncSizeDelta) + kEncapHeaderSize;
        case Scheme::FullEnc: return frame_size + kFullEncOverhead + kEncapHeaderSize;
    }
    return 0;
}

Expected<std::vector<BenchResult>, std::string> run_bench(const BenchConfig& config) {
    if (auto err = config.validate(); !err.empty()) return err;
    std::vector<BenchResult> results;
    if (config.duration == Duration::zero()) return results;

    std::mt19937_64 rng(config.seed);
    for (std::size_t size : config.sizes) {
        const Bytes frame = template_frame(size, rng);
        std::vector<std::unique_ptr<Lane>> lanes;
        for (Scheme s : config.schemes) {
            if (config.mode == BenchMode::InProcess) {
                lanes.push_back(std::make_unique<InProcessLane>(config, s, frame));
            } else {
                auto lane = LoopbackLane::create(config, s, frame);
                if (!lane) return lane.error();
                lanes.push_back(std::move(lane.value()));
            }
            if (!lanes.back()->warm_up()) return "no frame delivered under " + std::string(to_string(s));
        }

        std::vector<Tally> tallies(lanes.size());
        const Duration budget = config.duration / static_cast<std::int64_t>(lanes.size());
        for (bool busy = true; busy;) {
            busy = false;
            for (std::size_t i = 0; i < lanes.size(); ++i) {
                const Duration left = budget - tallies[i].elapsed;
                if (left <= Duration::zero()) continue;
                busy = true;
                lanes[i]->run_for(std::min(left, config.slice), tallies[i]);
            }
        }

        for (std::size_t i = 0; i < lanes.size(); ++i) {
            Tally& t = tallies[i];
            lanes[i]->finish(t);
            BenchResult r;
            r.scheme = config.schemes[i];
            r.frame_size = size;
            r.wire_size = t.wire_size;
            r.overhead_bytes = static_cast<std::ptrdiff_t>(t.wire_size) - static_cast<std::ptrdiff_t>(size);
            r.frames = t.frames;
            r.failures = t.failures;
            r.seconds = std::chrono::duration<double>(t.elapsed).count();
            r.frames_per_sec = r.seconds > 0 ? static_cast<double>(t.frames) / r.seconds : 0.0;
            r.bytes_per_sec = r.frames_per_sec * static_cast<double>(r.wire_size);
            r.hash_ops_per_frame = t.hash_per_frame;
            r.block_ops_per_frame = t.blocks_per_frame;
            r.p50_us = percentile(t.latency_ns, 0.50);
            r.p99_us = percentile(t.latency_ns, 0.99);
            results.push_back(r);
        }
    }
    return results;
}

std::string bench_csv_header() {
    return "scheme,frame_size,wire_size,overhead_bytes,frames,failures,seconds,frames_per_sec,bytes_per_sec,"
           "hash_ops_per_frame,block_ops_per_frame,p50_us,p99_us";
}

std::string bench_csv_row(const BenchResult& r) {
    std::ostringstream os;
    os << to_string(r.scheme) << ',' << r.frame_size << ',' << r.wire_size << ',' << r.overhead_bytes << ','
       << r.frames << ',' << r.failures << ',' << std::fixed << std::setprecision(3) << r.seconds << ','
       << std::setprecision(1) << r.frames_per_sec << ',' << r.bytes_per_sec << ',' << std::setprecision(3)
       << r.hash_ops_per_frame << ',' << r.block_ops_per_frame << ',' << r.p50_us << ',' << r.p99_us;
    return os.str();
}

}  // namespace mtun

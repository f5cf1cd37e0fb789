// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/sim/simulator.hpp"

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include <cinttypes>
#include <cstdio>
#include <stdexcept>

#include "mtun/endpoint.hpp"

namespace mtun::sim {

namespace {

constexpr Key128 kDigestKey{};
constexpr std::size_t kNoDevice = static_cast<std::size_t>(-1);
const MacAddress kMkaGroup{{0x01, 0x80, 0xC2, 0x00, 0x00, 0x03}};

using Shared = std::shared_ptr<const Bytes>;

std::size_t min_body(Scheme s) {
    switch (s) {
        case Scheme::Naive: return kMinMacsecFrameSize;
        case Scheme::Idf: return kIdfMinBodySize;
        case Scheme::Enc: return kEncMinBodySize;
        case Scheme::FullEnc: return kMinMacsecFrameSize + kFullEncOverhead;
    }
    return kMinMacsecFrameSize;
}

}  // namespace

std::uint64_t frame_hash(ByteView bytes) { return siphash24(kDigestKey, bytes); }

std::string offset_class(Scheme scheme, std::size_t offset, std::size_t size) {
    if (offset < kEncapHeaderSize) return "encap";
    const std::size_t b = offset - kEncapHeaderSize;
    const std::size_t body = size - kEncapHeaderSize;
    if (b + kIcvSize >= body) return scheme == Scheme::FullEnc ? "tag" : "icv";
    switch (scheme) {
        case Scheme::Naive: return b < 2 * kMacSize ? "address" : b < kMacsecHeaderSize ? "sectag" : "secure_data";
        case Scheme::Idf: return b < 8 ? "ridf" : b == 8 ? "tci" : b == 9 ? "sl" : "secure_data";
        case Scheme::Enc: return b == 0 ? "epoch" : b < kEncHeaderSize ? "header" : "secure_data";
        case Scheme::FullEnc: return b < kFullEncPrefix ? "prefix" : "ciphertext";
    }
    return "?";
}

struct Simulator::Impl {
    struct Device {
        std::string name;
        std::size_t lan = 0;
        MacAddress mac;
        Sci sci;
        std::array<std::unique_ptr<AesGcm128>, 4> ciphers;
        std::uint8_t an = 0;
        std::uint32_t next_pn = 1;
        absl::flat_hash_set<std::pair<std::uint64_t, std::uint64_t>> seen;
        DeviceReport report;
    };

    class Io : public GatewayIo {
    public:
        Io(Impl& sim, std::size_t lan, std::uint64_t seed) : sim_(sim), lan_(lan), rng_(seed) {}
        void lan_send(ByteView frame) override { sim_.gateway_lan_send(lan_, frame); }
        void tunnel_send(const GatewayId& peer, ByteView dgram) override { sim_.wan_send(lan_, peer, dgram); }
        bool mgmt_send(const GatewayId& peer, ByteView msg) override { return sim_.mgmt_send(lan_, peer, msg); }
        void random_bytes(MutableByteView out) override {
            for (auto& b : out) b = static_cast<std::uint8_t>(rng_());
        }

    private:
        Impl& sim_;
        std::size_t lan_;
        std::mt19937_64 rng_;
    };

    struct Link {
        Timestamp last{};
        std::uint32_t drop_left = 0;
        Timestamp drop_after{};
        Timestamp down_from = kForever;
        Timestamp down_until = kForever;
    };

    struct Datagram {
        std::size_t from = 0;  // LAN index, or kNoDevice for the attacker
        std::size_t to = 0;
        Shared bytes;
        std::uint32_t tag = 0;  // 0 = genuine, else index + 1 into tags
    };

    // Outcome codes of attacker datagrams; values >= 0 are DropReason indices.
    static constexpr std::int16_t kPending = -1;
    static constexpr std::int16_t kEmitted = -2;
    static constexpr std::int16_t kLost = -3;

    struct Tag {
        std::uint16_t cls = 0;
        std::int16_t outcome = kPending;
        std::uint32_t accepts = 0;
        std::uint32_t rejects = 0;
        std::uint32_t first_copies = 0;  // genuine frame whose original never arrived
    };

    struct Attack {
        AttackSpec spec;
        std::uint64_t matched = 0;
        std::uint64_t affected = 0;
    };

    explicit Impl(Scenario s)
        : sc(std::move(s)), rng_net(sc.seed * 0x9E3779B97F4A7C15ULL + 1), rng_attack(sc.seed ^ 0xA77AC4ULL),
          rng_traffic(sc.seed ^ 0x7F4A7C15ULL) {
        if (auto err = sc.validate(); !err.empty()) throw std::invalid_argument("scenario: " + err);
        const std::size_t n = sc.lans.size();
        std::mt19937_64 rng_keys(sc.seed ^ 0x5EC12E7ULL);
        for (std::size_t i = 0; i < n; ++i) {
            GatewayId id;
            id.ipv4 = 0x0A000001u + static_cast<std::uint32_t>(i);
            id.port = kDefaultTunnelPort;
            ids.push_back(id);
            id_index.emplace(id, i);
            lan_devices.emplace_back();
            for (const DeviceSpec& spec : sc.lans[i].devices) {
                Device d;
                d.name = spec.name;
                d.lan = i;
                d.mac = spec.mac.value_or(MacAddress{{0x02, 0x00, 0x00, static_cast<std::uint8_t>(i),
                                                      static_cast<std::uint8_t>(devices.size() >> 8),
                                                      static_cast<std::uint8_t>(devices.size())}});
                d.sci = Sci{d.mac, spec.port};
                for (auto& c : d.ciphers) {
                    Key128 k;
                    for (auto& b : k) b = static_cast<std::uint8_t>(rng_keys());
                    c = std::make_unique<AesGcm128>(k);
                }
                d.report.name = d.name;
                d.report.lan = sc.lans[i].name;
                device_index.emplace(d.name, devices.size());
                by_sci.emplace(d.sci.to_u64(), devices.size());
                lan_devices[i].push_back(devices.size());
                devices.push_back(std::move(d));
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            GatewayConfig cfg;
            cfg.self = ids[i];
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) cfg.peers.push_back(ids[j]);
            cfg.scheme = sc.scheme;
            cfg.window = sc.window;
            cfg.flow_timeout = sc.flow_timeout;
            cfg.rekey_grace = sc.rekey_grace;
            cfg.propagate_expire = sc.propagate_expire;
            cfg.binding = sc.binding;
            ios.push_back(std::make_unique<Io>(*this, i, sc.seed * 1000003ULL + i));
            gws.push_back(std::make_unique<Gateway>(cfg, *ios.back()));
        }
        links.assign(n * n, Link{});
        for (const MgmtFaultSpec& f : sc.mgmt_faults) {
            Link& l = links[*lan_index(f.from) * n + *lan_index(f.to)];
            l.down_from = f.down_from;
            l.down_until = f.down_until;
            l.drop_left = f.drop;
            l.drop_after = f.drop_after;
        }
        for (const AttackSpec& a : sc.attacks) attacks.push_back(Attack{a});
        class_names.push_back("");
    }

    std::optional<std::size_t> lan_index(std::string_view name) const {
        for (std::size_t i = 0; i < sc.lans.size(); ++i)
            if (sc.lans[i].name == name) return i;
        return std::nullopt;
    }

    void record(std::string_view site, std::string_view event, std::uint64_t hash) {
        if (!sc.transcript) return;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%" PRId64 ",%.*s,%.*s,%016" PRIx64, static_cast<std::int64_t>(q.now().count()),
                      static_cast<int>(site.size()), site.data(), static_cast<int>(event.size()), event.data(), hash);
        result.transcript.emplace_back(buf);
    }

    std::string gw_name(std::size_t lan) const { return "gw-" + sc.lans[lan].name; }

    std::uint32_t new_tag(const std::string& cls) {
        std::uint16_t c = 0;
        for (; c < class_names.size(); ++c)
            if (class_names[c] == cls) break;
        if (c == class_names.size()) class_names.push_back(cls);
        tags.push_back(Tag{c});
        return static_cast<std::uint32_t>(tags.size());
    }

    // -- LAN ---------------------------------------------------------------

    void lan_emit(std::size_t lan, Shared bytes, std::uint32_t tag, std::size_t from_device) {
        for (std::size_t d : lan_devices[lan]) {
            if (d == from_device) continue;
            q.after(sc.lan_latency, [this, d, bytes, tag] { device_receive(d, *bytes, tag); });
        }
        if (from_device != kNoDevice)
            q.after(sc.lan_latency, [this, lan, bytes] { gws[lan]->on_lan_frame(*bytes, q.now()); });
    }

    void gateway_lan_send(std::size_t lan, ByteView frame) {
        auto bytes = std::make_shared<const Bytes>(frame.begin(), frame.end());
        if (current_tag) tags[current_tag - 1].outcome = kEmitted;
        record(gw_name(lan), "lan_tx", frame_hash(frame));
        lan_emit(lan, std::move(bytes), current_tag, kNoDevice);
    }

    void device_send_data(std::size_t di, const TrafficSpec& t) {
        Device& d = devices[di];
        PlainFrame p;
        const bool broadcast = t.to == "broadcast";
        const std::size_t dst = broadcast ? kNoDevice : device_index.at(t.to);
        p.dst = broadcast ? MacAddress::broadcast() : devices[dst].mac;
        p.src = d.mac;
        p.ethertype = t.ethertype;
        std::uniform_int_distribution<std::size_t> len(t.min_payload, t.max_payload);
        p.payload.resize(len(rng_traffic));
        for (auto& b : p.payload) b = static_cast<std::uint8_t>(rng_traffic());

        const MacsecFrame f = endpoint_protect(p, *d.ciphers[d.an], d.sci, d.an, d.next_pn);
        auto bytes = std::make_shared<const Bytes>(build_macsec(f).value());
        if (d.next_pn >= sc.pn_ceiling) {
            d.an = (d.an + 1) & 3;
            d.next_pn = 1;
            ++d.report.rollovers;
        } else {
            ++d.next_pn;
        }
        ++d.report.sent;
        const std::uint64_t h = frame_hash(*bytes);
        auto expect = [&](std::size_t r) {
            ++expected[{h, static_cast<std::uint32_t>(r)}];
            ++result.expected_deliveries;
        };
        if (broadcast) {
            for (std::size_t r = 0; r < devices.size(); ++r)
                if (r != di) expect(r);
        } else {
            expect(dst);
        }
        record(d.name, "tx", h);
        lan_emit(d.lan, std::move(bytes), 0, di);
    }

    void device_send_mka(std::size_t di, const MkaSpec& m) {
        Device& d = devices[di];
        PlainFrame p{kMkaGroup, d.mac, kEtherTypeEapol, Bytes(m.size - kEthHeaderSize)};
        for (auto& b : p.payload) b = static_cast<std::uint8_t>(rng_traffic());
        auto bytes = std::make_shared<const Bytes>(build_plain(p));
        ++d.report.mka_sent;
        record(d.name, "mka_tx", frame_hash(*bytes));
        lan_emit(d.lan, std::move(bytes), 0, di);
    }

    void device_receive(std::size_t di, const Bytes& bytes, std::uint32_t tag) {
        Device& d = devices[di];
        const std::uint64_t h = frame_hash(bytes);
        auto reject = [&](std::string_view event) {
            if (tag)
                ++tags[tag - 1].rejects;
            else
                ++result.genuine_icv_failures;
            record(d.name, event, h);
        };
        if (is_mka(bytes)) {
            ++d.report.mka_received;
            record(d.name, "mka_rx", h);
            return;
        }
        if (bytes.size() < kMacSize) {
            ++d.report.malformed;
            reject("rx_malformed");
            return;
        }
        MacAddress dst;
        std::memcpy(dst.octets.data(), bytes.data(), kMacSize);
        if (dst != d.mac && !dst.is_multicast()) {
            ++d.report.ignored;
            return;
        }
        auto f = parse_macsec(bytes);
        if (!f) {
            ++d.report.malformed;
            reject("rx_malformed");
            return;
        }
        auto sender = by_sci.find(f->sectag.sci.to_u64());
        const std::uint8_t an = f->sectag.tci.an;
        if (sender == by_sci.end() || !endpoint_verify(*f, *devices[sender->second].ciphers[an])) {
            ++d.report.icv_failures;
            reject("rx_icv_fail");
            return;
        }
        ++d.report.received;
        const std::uint64_t sa_pn = (std::uint64_t{an} << 32) | f->sectag.pn;
        const bool fresh = d.seen.insert({f->sectag.sci.to_u64(), sa_pn}).second;
        if (!fresh) ++d.report.duplicates;
        auto it = expected.find({h, static_cast<std::uint32_t>(di)});
        if (tag && !(fresh && it != expected.end())) {
            ++tags[tag - 1].accepts;
            record(d.name, "rx_attacker", h);
            return;
        }
        if (tag) {
            ++tags[tag - 1].first_copies;
            record(d.name, "rx_first_copy", h);
        }
        if (it != expected.end() && it->second > 0) {
            if (--it->second == 0) expected.erase(it);
            ++result.exact_deliveries;
        } else {
            ++result.unexpected_deliveries;
        }
        record(d.name, "rx_ok", h);
    }

    // -- tunnel network ----------------------------------------------------

    bool attack_applies(Attack& a, const Datagram& d) {
        const AttackSpec& s = a.spec;
        if (q.now() < s.start || q.now() >= s.end) return false;
        if (s.count && a.affected >= s.count) return false;
        if (!s.target.empty() && sc.lans[d.to].name != s.target) return false;
        if (a.matched++ < s.skip) return false;
        if (s.probability < 1.0 && std::uniform_real_distribution<double>(0, 1)(rng_attack) >= s.probability)
            return false;
        ++a.affected;
        return true;
    }

    void wan_send(std::size_t from, const GatewayId& peer, ByteView dgram) {
        auto to = id_index.find(peer);
        if (to == id_index.end()) return;
        Datagram d{from, to->second, std::make_shared<const Bytes>(dgram.begin(), dgram.end()), 0};
        ++result.net.sent;
        record(gw_name(from), "tun_tx", frame_hash(dgram));

        Duration extra{};
        bool delayed = false;
        for (Attack& a : attacks) {
            if (a.spec.kind == AttackKind::Inject) continue;
            if (!attack_applies(a, d)) continue;
            switch (a.spec.kind) {
                case AttackKind::Replay: {
                    Datagram copy = d;
                    copy.tag = new_tag("replay");
                    ++result.net.replayed;
                    q.after(a.spec.delay, [this, copy] {
                        record("attacker", "replay", frame_hash(*copy.bytes));
                        deliver_later(copy, sc.net.latency);
                    });
                    break;
                }
                case AttackKind::Drop:
                    ++result.net.attacker_dropped;
                    record("attacker", "drop", frame_hash(*d.bytes));
                    return;
                case AttackKind::Delay:
                    if (!delayed) {
                        extra += a.spec.delay;
                        delayed = true;
                        ++result.net.attacker_delayed;
                        record("attacker", "delay", frame_hash(*d.bytes));
                    }
                    break;
                case AttackKind::Mutate: {
                    Bytes m = *d.bytes;
                    const std::size_t off = mutate_counter++ % m.size();
                    m[off] ^= static_cast<std::uint8_t>(1u << (rng_attack() & 7));
                    d.tag = new_tag(offset_class(sc.scheme, off, m.size()));
                    d.bytes = std::make_shared<const Bytes>(std::move(m));
                    ++result.net.mutated;
                    record("attacker", "mutate", frame_hash(*d.bytes));
                    break;
                }
                case AttackKind::Inject: break;
            }
        }
        net_forward(d, extra);
    }

    void net_forward(const Datagram& d, Duration extra) {
        std::uniform_real_distribution<double> u(0, 1);
        if (sc.net.loss > 0 && u(rng_net) < sc.net.loss) {
            ++result.net.lost;
            if (d.tag) tags[d.tag - 1].outcome = kLost;
            record("net", "loss", frame_hash(*d.bytes));
            return;
        }
        auto sample = [&] {
            Duration t = sc.net.latency + extra;
            if (sc.net.jitter > Duration::zero())
                t += Duration(std::uniform_int_distribution<Duration::rep>(0, sc.net.jitter.count())(rng_net));
            if (sc.net.reorder > 0 && u(rng_net) < sc.net.reorder) {
                const auto k = std::uniform_int_distribution<std::uint32_t>(1, std::max(1u, sc.net.max_displacement))(rng_net);
                t += sc.net.reorder_unit * k;
                ++result.net.reordered;
            }
            return t;
        };
        deliver_later(d, sample());
        if (sc.net.duplicate > 0 && u(rng_net) < sc.net.duplicate) {
            ++result.net.duplicated;
            record("net", "duplicate", frame_hash(*d.bytes));
            deliver_later(d, sample());
        }
    }

    void deliver_later(const Datagram& d, Duration delay) {
        ++result.net.in_flight;
        q.after(delay, [this, d] {
            --result.net.in_flight;
            deliver(d);
        });
    }

    void deliver(const Datagram& d) {
        ++result.net.delivered;
        Gateway& gw = *gws[d.to];
        const GatewayStats before = gw.snapshot_stats();
        const std::optional<GatewayId> from = d.from == kNoDevice ? std::nullopt : std::optional(ids[d.from]);
        current_tag = d.tag;
        gw.on_tunnel_packet(*d.bytes, from, q.now());
        current_tag = 0;
        const GatewayStats after = gw.snapshot_stats();

        const std::uint64_t rebuilt = after.frames_reconstructed - before.frames_reconstructed;
        std::optional<std::size_t> reason;
        std::uint64_t dropped = 0;
        for (std::size_t r = 0; r < kDropReasonCount; ++r) {
            const std::uint64_t delta = after.drops[r] - before.drops[r];
            if (delta) reason = r;
            dropped += delta;
        }
        if (rebuilt + dropped != 1 && result.conservation_violations.size() < 32) {
            result.conservation_violations.push_back(gw_name(d.to) + " at " + std::to_string(q.now().count()) +
                                                     "ns: datagram produced " + std::to_string(rebuilt) +
                                                     " frames and " + std::to_string(dropped) + " drops");
        }
        if (reason) {
            if (d.tag) tags[d.tag - 1].outcome = static_cast<std::int16_t>(*reason);
            record(gw_name(d.to), std::string("drop:") + std::string(to_string(static_cast<DropReason>(*reason))),
                   frame_hash(*d.bytes));
        } else {
            record(gw_name(d.to), "tun_rx", frame_hash(*d.bytes));
        }
    }

    void inject_one(std::size_t ai) {
        Attack& a = attacks[ai];
        if (a.affected >= a.spec.count || q.now() >= a.spec.end) return;
        const std::size_t target = a.spec.target.empty() ? a.affected % gws.size() : *lan_index(a.spec.target);
        ++a.affected;
        Bytes b;
        if (a.spec.raw) {
            b.resize(std::uniform_int_distribution<std::size_t>(1, 1500)(rng_attack));
            for (auto& x : b) x = static_cast<std::uint8_t>(rng_attack());
        } else {
            const std::size_t body =
                std::uniform_int_distribution<std::size_t>(min_body(sc.scheme), 1200)(rng_attack);
            b.resize(kEncapHeaderSize + body);
            write_encap_header(b.data(), sc.scheme);
            for (std::size_t i = kEncapHeaderSize; i < b.size(); ++i) b[i] = static_cast<std::uint8_t>(rng_attack());
        }
        Datagram d{kNoDevice, target, std::make_shared<const Bytes>(std::move(b)),
                   new_tag(a.spec.raw ? "inject_raw" : "inject")};
        ++result.net.injected;
        record("attacker", "inject", frame_hash(*d.bytes));
        deliver_later(d, sc.net.latency);
        q.after(a.spec.interval, [this, ai] { inject_one(ai); });
    }

    // -- management --------------------------------------------------------

    bool mgmt_send(std::size_t from, const GatewayId& peer, ByteView msg) {
        auto it = id_index.find(peer);
        if (it == id_index.end()) return false;
        const std::size_t to = it->second;
        Link& l = links[from * gws.size() + to];
        const Timestamp now = q.now();
        if (now >= l.down_from && now < l.down_until) {
            ++result.net.mgmt_refused;
            return false;
        }
        const std::uint64_t h = frame_hash(msg);
        if (l.drop_left > 0 && now >= l.drop_after) {
            --l.drop_left;
            ++result.net.mgmt_lost;
            record(gw_name(from), "mgmt_lost", h);
            return true;
        }
        l.last = std::max(now + sc.mgmt_latency, l.last);
        ++result.net.mgmt_sent;
        record(gw_name(from), "mgmt_tx", h);
        auto bytes = std::make_shared<const Bytes>(msg.begin(), msg.end());
        q.at(l.last, [this, from, to, bytes] { gws[to]->on_mgmt_bytes(ids[from], *bytes, q.now()); });
        return true;
    }

    // -- driver ------------------------------------------------------------

    void schedule_traffic(std::size_t ti, std::uint64_t k) {
        const TrafficSpec& t = sc.traffic[ti];
        q.at(t.start + t.interval * static_cast<Duration::rep>(k), [this, ti, k] {
            device_send_data(device_index.at(sc.traffic[ti].from), sc.traffic[ti]);
            if (k + 1 < sc.traffic[ti].count) schedule_traffic(ti, k + 1);
        });
    }

    void schedule_mka(std::size_t mi, std::uint64_t k) {
        const MkaSpec& m = sc.mka[mi];
        q.at(m.start + m.interval * static_cast<Duration::rep>(k), [this, mi, k] {
            device_send_mka(device_index.at(sc.mka[mi].from), sc.mka[mi]);
            if (k + 1 < sc.mka[mi].count) schedule_mka(mi, k + 1);
        });
    }

    void schedule_timer(std::size_t g, Timestamp at) {
        q.at(at, [this, g, at] {
            gws[g]->on_timer(q.now());
            schedule_timer(g, at + sc.timer_interval);
        });
    }

    ScenarioResult run() {
        for (std::size_t g = 0; g < gws.size(); ++g) {
            q.at(Timestamp{}, [this, g] { gws[g]->start(q.now()); });
            schedule_timer(g, sc.timer_interval);
        }
        for (std::size_t t = 0; t < sc.traffic.size(); ++t)
            if (sc.traffic[t].count) schedule_traffic(t, 0);
        for (std::size_t m = 0; m < sc.mka.size(); ++m)
            if (sc.mka[m].count) schedule_mka(m, 0);
        for (std::size_t a = 0; a < attacks.size(); ++a)
            if (attacks[a].spec.kind == AttackKind::Inject)
                q.at(attacks[a].spec.start, [this, a] { inject_one(a); });

        result.events = q.run_until(sc.duration);
        return collect();
    }

    ScenarioResult collect() {
        for (const Device& d : devices) result.devices.push_back(d.report);
        for (std::size_t g = 0; g < gws.size(); ++g)
            result.gateways.push_back(GatewayReport{gw_name(g), ids[g], gws[g]->snapshot_stats()});

        const NetReport& n = result.net;
        if (n.sent + n.duplicated + n.replayed + n.injected != n.lost + n.attacker_dropped + n.delivered + n.in_flight)
            result.conservation_violations.push_back("network datagram balance does not close");
        std::uint64_t gw_out = 0, gw_in = 0;
        for (const auto& g : result.gateways) {
            gw_out += g.stats.datagrams_out;
            gw_in += g.stats.datagrams_in;
        }
        if (gw_out != n.sent) result.conservation_violations.push_back("gateway datagrams_out differs from network input");
        if (gw_in != n.delivered) result.conservation_violations.push_back("gateway datagrams_in differs from deliveries");

        AttackReport& ar = result.attack;
        for (const Tag& t : tags) {
            std::string outcome;
            if (t.outcome >= 0) {
                outcome = "gw:" + std::string(to_string(static_cast<DropReason>(t.outcome)));
            } else if (t.outcome == kLost) {
                outcome = "net:lost";
            } else if (t.outcome == kPending) {
                outcome = "net:pending";
            } else if (t.accepts) {
                outcome = "device:accept";
                ++ar.accepted;
            } else if (t.first_copies) {
                outcome = "device:first_copy";
            } else if (t.rejects) {
                outcome = "device:reject";
            } else {
                outcome = "lan:ignored";
            }
            ++ar.outcomes[outcome];
            ++ar.by_class[class_names[t.cls]][outcome];
        }
        return std::move(result);
    }

    Scenario sc;
    EventQueue q;
    std::mt19937_64 rng_net;
    std::mt19937_64 rng_attack;
    std::mt19937_64 rng_traffic;

    std::vector<GatewayId> ids;
    absl::flat_hash_map<GatewayId, std::size_t> id_index;
    std::vector<std::unique_ptr<Io>> ios;
    std::vector<std::unique_ptr<Gateway>> gws;
    std::vector<Device> devices;
    std::vector<std::vector<std::size_t>> lan_devices;
    absl::flat_hash_map<std::string, std::size_t> device_index;
    absl::flat_hash_map<std::uint64_t, std::size_t> by_sci;
    std::vector<Link> links;
    std::vector<Attack> attacks;

    std::vector<std::string> class_names;
    std::vector<Tag> tags;
    std::uint32_t current_tag = 0;
    std::uint64_t mutate_counter = 0;
    absl::flat_hash_map<std::pair<std::uint64_t, std::uint32_t>, std::uint32_t> expected;
    ScenarioResult result;
};

Simulator::Simulator(Scenario scenario) : impl_(std::make_unique<Impl>(std::move(scenario))) {}
Simulator::~Simulator() = default;

ScenarioResult Simulator::run() { return impl_->run(); }
EventQueue& Simulator::events() { return impl_->q; }
std::size_t Simulator::gateway_count() const { return impl_->gws.size(); }
Gateway& Simulator::gateway(std::size_t lan) { return *impl_->gws.at(lan); }
const GatewayId& Simulator::gateway_id(std::size_t lan) const { return impl_->ids.at(lan); }
std::optional<std::size_t> Simulator::lan_index(std::string_view name) const { return impl_->lan_index(name); }

ScenarioResult run_scenario(const Scenario& scenario) { return Simulator(scenario).run(); }

}  // namespace mtun::sim

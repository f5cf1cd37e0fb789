// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/idf.hpp"

#include <cstring>
#include <sstream>

namespace mtun {

Key128 ridf_key(std::uint32_t pn) {
    Key128 key;
    for (std::size_t i = 0; i < 4; ++i) store_be32(key.data() + 4 * i, pn);
    return key;
}

Ridf derive_ridf(const Bidf& bidf, std::uint32_t pn) {
    return Ridf{siphash24(ridf_key(pn), bidf.value)};
}

std::string_view to_string(IdfError e) {
    switch (e) {
        case IdfError::Malformed: return "Malformed";
        case IdfError::UnregisteredFlow: return "UnregisteredFlow";
        case IdfError::UnknownIdentifier: return "UnknownIdentifier";
        case IdfError::Replay: return "Replay";
        case IdfError::OutOfWindow: return "OutOfWindow";
    }
    return "?";
}

Bytes serialize(const IdfWireFrame& wire) {
    Bytes out(wire.wire_size());
    store_be64(out.data(), wire.ridf.value);
    out[8] = wire.tci_flags;
    out[9] = wire.sl;
    std::memcpy(out.data() + kIdfHeaderSize, wire.secure_data.data(), wire.secure_data.size());
    std::memcpy(out.data() + out.size() - kIcvSize, wire.icv.data(), kIcvSize);
    return out;
}

Expected<IdfWireFrame, IdfError> parse_idf_wire(ByteView body) {
    if (body.size() < kIdfMinBodySize) return IdfError::Malformed;
    if (body.size() > kMaxFrameSize + kIdfSizeDelta) return IdfError::Malformed;
    if (body[8] & Tci::kAnMask) return IdfError::Malformed;
    IdfWireFrame w;
    w.ridf.value = load_be64(body.data());
    w.tci_flags = body[8];
    w.sl = body[9];
    w.secure_data.assign(body.begin() + kIdfHeaderSize, body.end() - kIcvSize);
    std::memcpy(w.icv.data(), body.data() + body.size() - kIcvSize, kIcvSize);
    return w;
}

Expected<IdfWireFrame, IdfError> uplink_encode(const MacsecFrame& frame, const UplinkFlowEntry& entry) {
    const FlowLeg* leg = entry.find_leg(frame.dst, frame.src);
    if (!leg) return IdfError::UnregisteredFlow;
    IdfWireFrame w;
    w.ridf = derive_ridf(leg->bidf, frame.sectag.pn);
    w.tci_flags = frame.sectag.tci.to_byte() & static_cast<std::uint8_t>(~Tci::kAnMask);
    w.sl = short_length_for(frame.secure_data.size());
    w.secure_data = frame.secure_data;
    w.icv = frame.icv;
    return w;
}

void idf_encode_into(ByteView frame, Ridf ridf, Bytes& out) {
    std::uint8_t header[kIdfHeaderSize];
    store_be64(header, ridf.value);
    header[8] = frame[14] & static_cast<std::uint8_t>(~Tci::kAnMask);
    header[9] = frame[15];
    append(out, header);
    append(out, frame.subspan(kMacsecHeaderSize));
}

// ---------------------------------------------------------------------------

IdfReceiver::AddResult IdfReceiver::add_flow(const Bidf& bidf, const HeaderData& header, std::uint32_t pn,
                                             Timestamp now, const GatewayId& origin) {
    if (pn == 0) return AddResult::Duplicate;
    AddResult result = AddResult::Created;
    if (DownlinkFlowEntry* existing = flows_.find(bidf)) {
        if (pn <= existing->announced_pn) return AddResult::Duplicate;
        erase_slots(*existing, existing->window.slots());
        flows_.erase(bidf);
        result = AddResult::Reset;
    }
    DownlinkFlowEntry& flow = flows_.insert(bidf, header, pn, window_, now);
    flow.origin = origin;
    flow.announced_pn = pn;
    flow.slot_ids.assign(2 * std::size_t{window_}, Ridf{});
    insert_slots(flow, flow.window.slots());
    return result;
}

bool IdfReceiver::remove_flow(const Bidf& bidf) {
    DownlinkFlowEntry* flow = flows_.find(bidf);
    if (!flow) return false;
    erase_slots(*flow, flow->window.slots());
    return flows_.erase(bidf);
}

void IdfReceiver::insert_slots(DownlinkFlowEntry& flow, PnRange range) {
    const std::size_t n = flow.slot_ids.size();
    for (std::uint64_t pn = range.first; pn < range.last; ++pn) {
        const auto pn32 = static_cast<std::uint32_t>(pn);
        const Ridf r = derive_ridf(flow.bidf, pn32);
        ++hash_calls_;
        flow.slot_ids[pn % n] = r;
        auto [it, inserted] = ids_.try_emplace(r, IdentifierEntry{pn32, flow.window.is_seen(pn), flow.bidf});
        if (!inserted) ++collisions_;  // keep the older entry
    }
}

void IdfReceiver::erase_slots(const DownlinkFlowEntry& flow, PnRange range) {
    const std::size_t n = flow.slot_ids.size();
    for (std::uint64_t pn = range.first; pn < range.last; ++pn) {
        auto it = ids_.find(flow.slot_ids[pn % n]);
        if (it != ids_.end() && it->second.pn == pn && it->second.flow == flow.bidf) ids_.erase(it);
    }
}

void IdfReceiver::apply_step(DownlinkFlowEntry& flow, const WindowStep& step, std::uint32_t pn,
                             IdentifierEntry* known) {
    if (step.result != WindowResult::Accept) return;
    if (known) {
        known->seen = true;
    } else {
        auto it = ids_.find(flow.slot_ids[pn % flow.slot_ids.size()]);
        if (it != ids_.end() && it->second.pn == pn && it->second.flow == flow.bidf) it->second.seen = true;
    }
    erase_slots(flow, step.left);
    insert_slots(flow, step.entered);
}

Expected<std::monostate, IdfError> IdfReceiver::decode_into(ByteView body, Timestamp now, Bytes& out) {
    if (body.size() < kIdfMinBodySize || body.size() > kMaxFrameSize + kIdfSizeDelta) return IdfError::Malformed;
    const std::uint8_t tci_flags = body[8];
    if (tci_flags & Tci::kAnMask) return IdfError::Malformed;

    auto it = ids_.find(Ridf{load_be64(body.data())});
    if (it == ids_.end()) return IdfError::UnknownIdentifier;
    if (it->second.seen) return IdfError::Replay;
    const std::uint32_t pn = it->second.pn;
    DownlinkFlowEntry* flow = flows_.find(it->second.flow);
    if (!flow) return IdfError::UnknownIdentifier;

    const WindowResult r = flows_.accept(*flow, pn, now, [&](DownlinkFlowEntry& f, const WindowStep& step) {
        apply_step(f, step, pn, &f == flow ? &it->second : nullptr);
    });
    if (r == WindowResult::Replay) return IdfError::Replay;
    if (r == WindowResult::OutOfWindow) return IdfError::OutOfWindow;

    const HeaderData& h = flow->header;
    std::uint8_t header[kMacsecHeaderSize];
    std::memcpy(header, h.dst.octets.data(), 6);
    std::memcpy(header + 6, h.src.octets.data(), 6);
    store_be16(header + 12, kEtherTypeMacsec);
    header[14] = static_cast<std::uint8_t>(tci_flags | h.an);
    header[15] = body[9];
    store_be32(header + 16, pn);
    h.sci.write(header + 20);
    append(out, header);
    append(out, body.subspan(kIdfHeaderSize));
    return std::monostate{};
}

Expected<MacsecFrame, IdfError> IdfReceiver::downlink_decode(const IdfWireFrame& wire, Timestamp now) {
    Bytes out;
    auto r = decode_into(serialize(wire), now, out);
    if (!r) return r.error();
    auto frame = parse_macsec(out);
    if (!frame) return IdfError::Malformed;
    return std::move(frame).value();
}

std::string IdfReceiver::audit() const {
    std::ostringstream err;
    std::size_t expected = 0;
    flows_.for_each([&](const DownlinkFlowEntry& flow) {
        const PnRange slots = flow.window.slots();
        for (std::uint64_t pn = slots.first; pn < slots.last; ++pn) {
            ++expected;
            const Ridf r = derive_ridf(flow.bidf, static_cast<std::uint32_t>(pn));
            auto it = ids_.find(r);
            if (it == ids_.end()) {
                err << "missing ridf for pn " << pn << "; ";
                continue;
            }
            if (it->second.flow != flow.bidf || it->second.pn != pn) {
                if (collisions_ == 0) err << "foreign entry at pn " << pn << "; ";
                continue;
            }
            if (it->second.seen != flow.window.is_seen(pn)) err << "seen mismatch at pn " << pn << "; ";
        }
    });
    if (ids_.size() + collisions_ < expected || ids_.size() > expected)
        err << "table size " << ids_.size() << " vs expected " << expected << "; ";
    return err.str();
}

}  // namespace mtun

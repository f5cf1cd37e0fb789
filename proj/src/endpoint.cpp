// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/endpoint.hpp"

#include <stdexcept>

namespace mtun {

namespace {
std::array<std::uint8_t, AesGcm128::kIvSize> make_iv(const Sci& sci, std::uint32_t pn) {
    std::array<std::uint8_t, AesGcm128::kIvSize> iv{};
    sci.write(iv.data());
    store_be32(iv.data() + Sci::kSize, pn);
    return iv;
}
}  // namespace

std::string_view to_string(VerifyError e) {
    return e == VerifyError::Malformed ? "Malformed" : "IcvMismatch";
}

MacsecFrame endpoint_protect(const PlainFrame& plain, const AesGcm128& cipher, const Sci& sci,
                             std::uint8_t an, std::uint32_t pn) {
    if (pn == 0) throw std::invalid_argument("endpoint_protect: pn must be >= 1");
    if (an > 3) throw std::invalid_argument("endpoint_protect: an must be < 4");
    if (plain.payload.size() > kMaxPlainPayload)
        throw std::invalid_argument("endpoint_protect: payload exceeds frame limit");

    MacsecFrame f;
    f.dst = plain.dst;
    f.src = plain.src;
    f.sectag.tci = Tci{};
    f.sectag.tci.an = an;
    f.sectag.pn = pn;
    f.sectag.sci = sci;

    Bytes pt(2 + plain.payload.size());
    store_be16(pt.data(), plain.ethertype);
    std::copy(plain.payload.begin(), plain.payload.end(), pt.begin() + 2);
    f.sectag.sl = short_length_for(pt.size());
    f.secure_data.resize(pt.size());

    std::array<std::uint8_t, kMacsecHeaderSize> aad;
    write_macsec_header(f, aad.data());
    const auto iv = make_iv(sci, pn);
    f.icv = cipher.seal(iv, aad, pt, f.secure_data);
    return f;
}

MacsecFrame endpoint_protect(const PlainFrame& plain, const Key128& key, const Sci& sci,
                             std::uint8_t an, std::uint32_t pn) {
    return endpoint_protect(plain, AesGcm128(key), sci, an, pn);
}

Expected<PlainFrame, VerifyError> endpoint_verify(const MacsecFrame& frame, const AesGcm128& cipher) {
    if (frame.secure_data.size() < kMinSecureData || frame.sectag.tci.an > 3) return VerifyError::Malformed;

    std::array<std::uint8_t, kMacsecHeaderSize> aad;
    write_macsec_header(frame, aad.data());
    // A frame whose stored SL disagrees with the serialized header was not
    // what the sender authenticated.
    if (aad[15] != frame.sectag.sl) return VerifyError::IcvMismatch;
    const auto iv = make_iv(frame.sectag.sci, frame.sectag.pn);

    Bytes pt(frame.secure_data.size());
    if (!cipher.open(iv, aad, frame.secure_data, frame.icv, pt)) return VerifyError::IcvMismatch;

    PlainFrame out;
    out.dst = frame.dst;
    out.src = frame.src;
    out.ethertype = load_be16(pt.data());
    out.payload.assign(pt.begin() + 2, pt.end());
    return out;
}

Expected<PlainFrame, VerifyError> endpoint_verify(const MacsecFrame& frame, const Key128& key) {
    return endpoint_verify(frame, AesGcm128(key));
}

}  // namespace mtun

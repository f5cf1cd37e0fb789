// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// GCM-AES-128 protection as performed by a MACsec station. IV = SCI || PN,
// additional data = dst || src || SecTAG, ciphertext = E(EtherType || payload).

#pragma once

#include <string_view>

#include "mtun/crypto.hpp"
#include "mtun/frame.hpp"

namespace mtun {

enum class VerifyError : std::uint8_t { Malformed, IcvMismatch };
std::string_view to_string(VerifyError e);

/// Throws std::invalid_argument on pn == 0, an > 3 or an oversize payload.
MacsecFrame endpoint_protect(const PlainFrame& plain, const AesGcm128& cipher, const Sci& sci,
                             std::uint8_t an, std::uint32_t pn);
MacsecFrame endpoint_protect(const PlainFrame& plain, const Key128& key, const Sci& sci,
                             std::uint8_t an, std::uint32_t pn);

Expected<PlainFrame, VerifyError> endpoint_verify(const MacsecFrame& frame, const AesGcm128& cipher);
Expected<PlainFrame, VerifyError> endpoint_verify(const MacsecFrame& frame, const Key128& key);

}  // namespace mtun

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include "mtun/bytes.hpp"

typedef struct evp_cipher_ctx_st EVP_CIPHER_CTX;

namespace mtun {

using Block = std::array<std::uint8_t, 16>;
using Key128 = std::array<std::uint8_t, 16>;

namespace detail {
struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* ctx) const noexcept;
};
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;
}  // namespace detail

/// Raw AES-128 single-block permutation (ECB on exactly one block).
class Aes128 {
public:
    explicit Aes128(const Key128& key);

    Block encrypt(const Block& in) const;
    Block decrypt(const Block& in) const;

private:
    detail::CipherCtxPtr enc_;
    detail::CipherCtxPtr dec_;
};

/// GCM-AES-128 with 96-bit IV and 128-bit tag.
class AesGcm128 {
public:
    static constexpr std::size_t kIvSize = 12;
    static constexpr std::size_t kTagSize = 16;

    explicit AesGcm128(const Key128& key);

    // `out` must be plaintext.size() bytes; returns the tag.
    Block seal(ByteView iv, ByteView aad, ByteView plaintext, MutableByteView out) const;
    // `out` must be ciphertext.size() bytes. False on tag mismatch.
    bool open(ByteView iv, ByteView aad, ByteView ciphertext, const Block& tag,
              MutableByteView out) const;

private:
    detail::CipherCtxPtr enc_;
    detail::CipherCtxPtr dec_;
};

/// SipHash-2-4 keyed 64-bit PRF. Key bytes are read little-endian as (k0, k1).
std::uint64_t siphash24(const Key128& key, ByteView message);

/// Cryptographically secure random fill (OpenSSL DRBG).
void secure_random(MutableByteView out);

}  // namespace mtun

// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <bit>
#include <cstring>
#include <stdexcept>

namespace mtun {

namespace detail {
void CipherCtxDeleter::operator()(EVP_CIPHER_CTX* ctx) const noexcept { EVP_CIPHER_CTX_free(ctx); }
}  // namespace detail

namespace {

detail::CipherCtxPtr make_ctx(const EVP_CIPHER* cipher, const Key128& key, bool encrypt) {
    detail::CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
    int ok = encrypt ? EVP_EncryptInit_ex(ctx.get(), cipher, nullptr, key.data(), nullptr)
                     : EVP_DecryptInit_ex(ctx.get(), cipher, nullptr, key.data(), nullptr);
    if (ok != 1) throw std::runtime_error("cipher init failed");
    EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
    return ctx;
}

}  // namespace

Aes128::Aes128(const Key128& key)
    : enc_(make_ctx(EVP_aes_128_ecb(), key, true)), dec_(make_ctx(EVP_aes_128_ecb(), key, false)) {}

Block Aes128::encrypt(const Block& in) const {
    Block out;
    int len = 0;
    EVP_EncryptUpdate(enc_.get(), out.data(), &len, in.data(), static_cast<int>(in.size()));
    return out;
}

Block Aes128::decrypt(const Block& in) const {
    Block out;
    int len = 0;
    EVP_DecryptUpdate(dec_.get(), out.data(), &len, in.data(), static_cast<int>(in.size()));
    return out;
}

AesGcm128::AesGcm128(const Key128& key)
    : enc_(make_ctx(EVP_aes_128_gcm(), key, true)), dec_(make_ctx(EVP_aes_128_gcm(), key, false)) {}

Block AesGcm128::seal(ByteView iv, ByteView aad, ByteView plaintext, MutableByteView out) const {
    if (iv.size() != kIvSize || out.size() != plaintext.size())
        throw std::invalid_argument("AesGcm128::seal: bad buffer sizes");
    EVP_CIPHER_CTX* ctx = enc_.get();
    int len = 0;
    EVP_EncryptInit_ex(ctx, nullptr, nullptr, nullptr, iv.data());
    if (!aad.empty()) EVP_EncryptUpdate(ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size()));
    if (!plaintext.empty())
        EVP_EncryptUpdate(ctx, out.data(), &len, plaintext.data(), static_cast<int>(plaintext.size()));
    EVP_EncryptFinal_ex(ctx, out.data() + plaintext.size(), &len);
    Block tag;
    EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, static_cast<int>(tag.size()), tag.data());
    return tag;
}

bool AesGcm128::open(ByteView iv, ByteView aad, ByteView ciphertext, const Block& tag,
                     MutableByteView out) const {
    if (iv.size() != kIvSize || out.size() != ciphertext.size()) return false;
    EVP_CIPHER_CTX* ctx = dec_.get();
    int len = 0;
    EVP_DecryptInit_ex(ctx, nullptr, nullptr, nullptr, iv.data());
    if (!aad.empty()) EVP_DecryptUpdate(ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size()));
    if (!ciphertext.empty())
        EVP_DecryptUpdate(ctx, out.data(), &len, ciphertext.data(), static_cast<int>(ciphertext.size()));
    Block t = tag;
    EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, static_cast<int>(t.size()), t.data());
    return EVP_DecryptFinal_ex(ctx, out.data() + ciphertext.size(), &len) == 1;
}

namespace {

inline std::uint64_t load_le64(const std::uint8_t* p) {
    std::uint64_t v;
    std::memcpy(&v, p, 8);
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
    return v;
}

struct SipState {
    std::uint64_t v0, v1, v2, v3;

    void round() {
        v0 += v1; v1 = std::rotl(v1, 13); v1 ^= v0; v0 = std::rotl(v0, 32);
        v2 += v3; v3 = std::rotl(v3, 16); v3 ^= v2;
        v0 += v3; v3 = std::rotl(v3, 21); v3 ^= v0;
        v2 += v1; v1 = std::rotl(v1, 17); v1 ^= v2; v2 = std::rotl(v2, 32);
    }
    void absorb(std::uint64_t m) {
        v3 ^= m;
        round();
        round();
        v0 ^= m;
    }
};

}  // namespace

std::uint64_t siphash24(const Key128& key, ByteView message) {
    const std::uint64_t k0 = load_le64(key.data());
    const std::uint64_t k1 = load_le64(key.data() + 8);
    SipState s{k0 ^ 0x736f6d6570736575ULL, k1 ^ 0x646f72616e646f6dULL,
               k0 ^ 0x6c7967656e657261ULL, k1 ^ 0x7465646279746573ULL};

    const std::size_t len = message.size();
    const std::uint8_t* p = message.data();
    const std::size_t full = len & ~std::size_t{7};
    for (std::size_t i = 0; i < full; i += 8) s.absorb(load_le64(p + i));

    std::uint64_t last = static_cast<std::uint64_t>(len & 0xff) << 56;
    for (std::size_t i = 0; i < (len & 7); ++i) last |= std::uint64_t{p[full + i]} << (8 * i);
    s.absorb(last);

    s.v2 ^= 0xff;
    for (int i = 0; i < 4; ++i) s.round();
    return s.v0 ^ s.v1 ^ s.v2 ^ s.v3;
}

void secure_random(MutableByteView out) {
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
        throw std::runtime_error("RAND_bytes failed");
}

}  // namespace mtun

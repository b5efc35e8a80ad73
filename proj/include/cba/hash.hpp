// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#ifndef CBA_HASH_HPP
#define CBA_HASH_HPP

#include <sodium/crypto_hash_sha256.h>

#include <initializer_list>
#include <span>

#include "cba/bytes.hpp"

namespace cba {

/// Incremental SHA-256. All protocol digests (h, H) are SHA-256.
class Sha256 {
public:
    Sha256() { crypto_hash_sha256_init(&st_); }

    Sha256& update(std::span<const uint8_t> data) {
        crypto_hash_sha256_update(&st_, data.data(), data.size());
        return *this;
    }

    Digest finish() {
        Digest out;
        crypto_hash_sha256_final(&st_, out.data());
        return out;
    }

private:
    crypto_hash_sha256_state st_;
};

inline Digest sha256(std::initializer_list<std::span<const uint8_t>> parts) {
    Sha256 h;
    for (const auto& p : parts) h.update(p);
    return h.finish();
}

inline Digest sha256(std::span<const uint8_t> data) {
    return Sha256().update(data).finish();
}

/// First 8 hex chars of H(key); the human-comparable session-key fingerprint.
inline std::string fingerprint(const Digest& key) {
    return to_hex(sha256(key)).substr(0, 8);
}

}  // namespace cba

#endif  // CBA_HASH_HPP

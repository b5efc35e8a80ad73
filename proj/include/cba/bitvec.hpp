// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#ifndef CBA_BITVEC_HPP
#define CBA_BITVEC_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "cba/bytes.hpp"
#include "cba/rng.hpp"

namespace cba {

/// Fixed-length bit string, packed MSB-first within each byte. Bit 0 is the
/// high bit of byte 0, matching the wire and file encodings.
class BitVec {
public:
    BitVec() = default;
    explicit BitVec(size_t nbits) : nbits_(nbits), bytes_((nbits + 7) / 8, 0) {}

    static BitVec random(size_t nbits, Rng& rng);
    static BitVec from_bytes(std::span<const uint8_t> packed, size_t nbits);
    // Accepts "0"/"1" strings; used by tests for small worked examples.
    static BitVec from_bits(std::string_view bits);
    static BitVec from_hex(std::string_view hex, size_t nbits);

    size_t size() const { return nbits_; }
    std::span<const uint8_t> bytes() const { return bytes_; }

    bool get(size_t i) const { return (bytes_[i / 8] >> (7 - i % 8)) & 1; }

    void set(size_t i, bool v) {
        uint8_t mask = static_cast<uint8_t>(1u << (7 - i % 8));
        if (v)
            bytes_[i / 8] |= mask;
        else
            bytes_[i / 8] &= static_cast<uint8_t>(~mask);
    }

    void flip(size_t i) { bytes_[i / 8] ^= static_cast<uint8_t>(1u << (7 - i % 8)); }

    BitVec operator^(const BitVec& other) const;
    bool operator==(const BitVec& other) const = default;

    size_t hamming(const BitVec& other) const;
    std::string to_hex() const { return cba::to_hex(bytes_); }
    std::string to_bit_string() const;

private:
    size_t nbits_ = 0;
    Bytes bytes_;
};

}  // namespace cba

#endif  // CBA_BITVEC_HPP

// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "cba/bitvec.hpp"

#include <bit>
#include <stdexcept>

namespace cba {

BitVec BitVec::random(size_t nbits, Rng& rng) {
    BitVec v(nbits);
    rng.fill(v.bytes_);
    if (nbits % 8) v.bytes_.back() &= static_cast<uint8_t>(0xff << (8 - nbits % 8));
    return v;
}

BitVec BitVec::from_bytes(std::span<const uint8_t> packed, size_t nbits) {
    if (packed.size() != (nbits + 7) / 8)
        throw std::invalid_argument("BitVec: packed length does not match bit count");
    BitVec v(nbits);
    std::copy(packed.begin(), packed.end(), v.bytes_.begin());
    if (nbits % 8) v.bytes_.back() &= static_cast<uint8_t>(0xff << (8 - nbits % 8));
    return v;
}

BitVec BitVec::from_bits(std::string_view bits) {
    BitVec v(bits.size());
    for (size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1')
            v.set(i, true);
        else if (bits[i] != '0')
            throw std::invalid_argument("BitVec: bit string must be 0s and 1s");
    }
    return v;
}

BitVec BitVec::from_hex(std::string_view hex, size_t nbits) {
    return from_bytes(cba::from_hex(hex), nbits);
}

BitVec BitVec::operator^(const BitVec& other) const {
    if (nbits_ != other.nbits_) throw std::invalid_argument("BitVec: XOR length mismatch");
    BitVec out(nbits_);
    for (size_t i = 0; i < bytes_.size(); ++i) out.bytes_[i] = bytes_[i] ^ other.bytes_[i];
    return out;
}

size_t BitVec::hamming(const BitVec& other) const {
    if (nbits_ != other.nbits_) throw std::invalid_argument("BitVec: hamming length mismatch");
    size_t d = 0;
    for (size_t i = 0; i < bytes_.size(); ++i)
        d += std::popcount(static_cast<unsigned>(bytes_[i] ^ other.bytes_[i]));
    return d;
}

std::string BitVec::to_bit_string() const {
    std::string s;
    s.reserve(nbits_);
    for (size_t i = 0; i < nbits_; ++i) s.push_back(get(i) ? '1' : '0');
    return s;
}

}  // namespace cba

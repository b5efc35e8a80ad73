// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#ifndef CBA_BYTES_HPP
#define CBA_BYTES_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cba {

using Bytes = std::vector<uint8_t>;
using Digest = std::array<uint8_t, 32>;

inline std::string to_hex(std::span<const uint8_t> data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0)
        throw std::invalid_argument("hex string has odd length");
    Bytes out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        int hi = hex_nibble(hex[2 * i]);
        int lo = hex_nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw std::invalid_argument("invalid hex character");
        out[i] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return out;
}

inline Digest xor32(const Digest& a, const Digest& b) {
    Digest out;
    for (size_t i = 0; i < 32; ++i) out[i] = a[i] ^ b[i];
    return out;
}

inline void append(Bytes& dst, std::span<const uint8_t> src) {
    size_t old = dst.size();
    dst.resize(old + src.size());
    std::copy(src.begin(), src.end(), dst.begin() + static_cast<ptrdiff_t>(old));
}

inline std::array<uint8_t, 8> be64(uint64_t v) {
    std::array<uint8_t, 8> out;
    for (int i = 7; i >= 0; --i) {
        out[i] = static_cast<uint8_t>(v & 0xff);
        v >>= 8;
    }
    return out;
}

inline uint64_t read_be64(std::span<const uint8_t> in) {
    if (in.size() < 8) throw std::invalid_argument("be64: short input");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
    return v;
}

// Whole-value substring search, used by the transcript/secret scans.
inline bool contains(std::span<const uint8_t> haystack, std::span<const uint8_t> needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
           haystack.end();
}

}  // namespace cba

#endif  // CBA_BYTES_HPP

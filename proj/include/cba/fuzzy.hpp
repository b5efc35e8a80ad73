// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#ifndef CBA_FUZZY_HPP
#define CBA_FUZZY_HPP

#include <cstdint>
#include <span>
#include <utility>

#include "cba/bitvec.hpp"
#include "cba/bytes.hpp"
#include "cba/rng.hpp"

namespace cba::fuzzy {

/// Repetition-code parameters: k message bits, each repeated r times, giving
/// an N = k*r bit codeword. Majority decoding corrects up to t = (r-1)/2
/// flips per r-bit block. The sketch/recover pair is code-agnostic; this is
/// the default deterministic code.
struct CodeParams {
    uint16_t k = 128;
    uint8_t r = 5;

    size_t n_bits() const { return static_cast<size_t>(k) * r; }
    unsigned t() const { return (r - 1u) / 2u; }

    /// Throws std::invalid_argument unless r is odd and >= 3, k >= 1,
    /// and k*r fits in 16 bits.
    void validate() const;

    bool operator==(const CodeParams&) const = default;
};

/// Public helper data: the code-offset sketch plus the extractor seed.
/// Discloses no biometric information; stored client-side in the credential.
struct HelperData {
    BitVec sketch;
    Digest seed{};

    /// 2-byte k, 1-byte r, N/8 sketch bytes, 32 seed bytes (big-endian).
    Bytes encode(const CodeParams& params) const;
    static std::pair<HelperData, CodeParams> decode(std::span<const uint8_t> in);
};

/// Stable 32-byte key derived from (reconstructed biometric, seed, password).
struct BioKey {
    Digest key{};
    bool operator==(const BioKey&) const = default;
};

/// C(m): repeat each of the k message bits r times.
BitVec repeat_encode(const BitVec& msg, const CodeParams& params);

/// Majority vote per r-bit block; inverse of repeat_encode under noise <= t.
BitVec majority_decode(const BitVec& codeword, const CodeParams& params);

/// sketch = w XOR C(m) for uniformly random m. The random codeword masks
/// which coset member w is.
BitVec ss_sketch(const BitVec& w, const CodeParams& params, Rng& rng);

/// Deterministic core of ss_sketch with the codeword message given; the unit
/// tests pin the worked examples through this.
BitVec ss_sketch_with_message(const BitVec& w, const BitVec& msg, const CodeParams& params);

/// Recover the enrolled w from a noisy reading: majority-decode w' XOR sketch
/// and re-offset. Exact whenever every block has <= t flips. Out-of-capacity
/// noise silently yields a different vector; the protocol's alpha comparison
/// is the authoritative reject gate.
BitVec ss_recover(const BitVec& w_prime, const BitVec& sketch, const CodeParams& params);

/// Gen: key = H(seed || w || pw), HD = (sketch, fresh 32-byte seed).
/// Throws std::invalid_argument on empty password or length mismatch.
std::pair<BioKey, HelperData> fe_gen(const BitVec& w, std::span<const uint8_t> pw,
                                     const CodeParams& params, Rng& rng);

/// Rep: reconstructs w from w' and returns (key, w). The reconstructed vector
/// is returned because the protocol recomputes BB from it.
std::pair<BioKey, BitVec> fe_rep(const BitVec& w_prime, std::span<const uint8_t> pw,
                                 const HelperData& hd, const CodeParams& params);

/// Deterministic bit stream H(key || counter), counter = 0, 1, ... as 8-byte
/// big-endian; lets the N-bit template XOR against the 32-byte key.
BitVec mask_expand(const BioKey& key, size_t n_bits);

/// Flip exactly `flips` distinct random positions inside each r-bit block.
/// The synthetic noise model for tests and the FAR/FRR harness.
BitVec add_block_noise(const BitVec& w, const CodeParams& params, unsigned flips, Rng& rng);

}  // namespace cba::fuzzy

#endif  // CBA_FUZZY_HPP

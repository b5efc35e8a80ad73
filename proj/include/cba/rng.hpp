// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#ifndef CBA_RNG_HPP
#define CBA_RNG_HPP

#include <cstdint>
#include <random>
#include <span>

#include "cba/bytes.hpp"

namespace cba {

/// Caller-supplied randomness source. Protocol and fuzzy-extractor code never
/// reach for global entropy directly, so tests and the eval harness can run
/// fully deterministic.
class Rng {
public:
    virtual ~Rng() = default;
    virtual void fill(std::span<uint8_t> out) = 0;

    Digest random32() {
        Digest d;
        fill(d);
        return d;
    }

    Bytes random_bytes(size_t n) {
        Bytes b(n);
        fill(b);
        return b;
    }

    uint64_t next_u64() {
        std::array<uint8_t, 8> b;
        fill(b);
        return read_be64(b);
    }
};

/// OS entropy (libsodium randombytes).
class SystemRng final : public Rng {
public:
    void fill(std::span<uint8_t> out) override;
};

/// Deterministic stream for tests and seeded CLI runs.
class SeededRng final : public Rng {
public:
    explicit SeededRng(uint64_t seed) : gen_(seed) {}

    void fill(std::span<uint8_t> out) override {
        for (auto& b : out) b = static_cast<uint8_t>(gen_());
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace cba

#endif  // CBA_RNG_HPP

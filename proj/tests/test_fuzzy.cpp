// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cba/fuzzy.hpp"
#include "cba/hash.hpp"

using namespace cba;
using namespace cba::fuzzy;

namespace {

const CodeParams kTiny{2, 3};     // N=6, t=1
const CodeParams kDefault{128, 5};  // N=640, t=2

Bytes pw_bytes(const char* s) { return Bytes(s, s + std::string_view(s).size()); }

}  // namespace

TEST_CASE("worked sketch example") {
    BitVec w = BitVec::from_bits("110100");
    BitVec m = BitVec::from_bits("10");
    // C(10) = 111000; 110100 XOR 111000 = 001100
    CHECK(repeat_encode(m, kTiny) == BitVec::from_bits("111000"));
    CHECK(ss_sketch_with_message(w, m, kTiny) == BitVec::from_bits("001100"));
}

TEST_CASE("sketch of a codeword under its own message is zero") {
    BitVec m = BitVec::from_bits("01");
    BitVec w = repeat_encode(m, kTiny);
    CHECK(ss_sketch_with_message(w, m, kTiny) == BitVec::from_bits("000000"));
}

TEST_CASE("sketch length always N") {
    SeededRng rng(5);
    for (int i = 0; i < 20; ++i) {
        BitVec w = BitVec::random(kDefault.n_bits(), rng);
        CHECK(ss_sketch(w, kDefault, rng).size() == kDefault.n_bits());
    }
}

TEST_CASE("worked recovery example") {
    // d = w' XOR sketch = 011000; majority per block: 011 -> 1, 000 -> 0;
    // C(10) XOR sketch = 110100.
    BitVec w_prime = BitVec::from_bits("010100");
    BitVec sketch = BitVec::from_bits("001100");
    CHECK(ss_recover(w_prime, sketch, kTiny) == BitVec::from_bits("110100"));
}

TEST_CASE("zero noise recovers exactly") {
    SeededRng rng(6);
    BitVec w = BitVec::random(kDefault.n_bits(), rng);
    BitVec sketch = ss_sketch(w, kDefault, rng);
    CHECK(ss_recover(w, sketch, kDefault) == w);
}

TEST_CASE("recovery is exact up to t flips per block, 1000 trials") {
    SeededRng rng(7);
    size_t exact = 0;
    for (int i = 0; i < 1000; ++i) {
        BitVec w = BitVec::random(kDefault.n_bits(), rng);
        BitVec sketch = ss_sketch(w, kDefault, rng);
        unsigned flips = static_cast<unsigned>(rng.next_u64() % (kDefault.t() + 1));
        BitVec noisy = add_block_noise(w, kDefault, flips, rng);
        if (ss_recover(noisy, sketch, kDefault) == w) ++exact;
    }
    CHECK(exact == 1000);
}

TEST_CASE("t+1 flips in one block corrupt that message bit") {
    SeededRng rng(8);
    for (int i = 0; i < 100; ++i) {
        BitVec w = BitVec::random(kDefault.n_bits(), rng);
        BitVec sketch = ss_sketch(w, kDefault, rng);
        BitVec noisy = w;
        size_t block = rng.next_u64() % kDefault.k;
        for (unsigned j = 0; j <= kDefault.t(); ++j) noisy.flip(block * kDefault.r + j);
        CHECK(ss_recover(noisy, sketch, kDefault) != w);
    }
}

TEST_CASE("extractor round trip and key length") {
    SeededRng rng(9);
    Bytes pw = pw_bytes("correct horse");
    for (int i = 0; i < 200; ++i) {
        BitVec w = BitVec::random(kDefault.n_bits(), rng);
        auto [key, hd] = fe_gen(w, pw, kDefault, rng);
        CHECK(key.key.size() == 32);

        unsigned flips = static_cast<unsigned>(rng.next_u64() % (kDefault.t() + 1));
        BitVec noisy = add_block_noise(w, kDefault, flips, rng);
        auto [key2, w2] = fe_rep(noisy, pw, hd, kDefault);
        CHECK(key2 == key);
        CHECK(w2 == w);
    }
}

TEST_CASE("fresh seed per enrollment: same inputs, different keys") {
    SeededRng rng(10);
    BitVec w = BitVec::random(kDefault.n_bits(), rng);
    Bytes pw = pw_bytes("pw");
    auto [k1, hd1] = fe_gen(w, pw, kDefault, rng);
    auto [k2, hd2] = fe_gen(w, pw, kDefault, rng);
    CHECK(hd1.seed != hd2.seed);
    CHECK(k1 != k2);
}

TEST_CASE("key sensitivity to the password and to excess noise") {
    SeededRng rng(11);
    size_t pw_diff = 0, noise_diff = 0;
    const int trials = 300;
    for (int i = 0; i < trials; ++i) {
        BitVec w = BitVec::random(kDefault.n_bits(), rng);
        Bytes pw = rng.random_bytes(10);
        auto [key, hd] = fe_gen(w, pw, kDefault, rng);

        Bytes pw2 = pw;
        pw2[rng.next_u64() % pw2.size()] ^= 0x01;
        auto [key_wrong_pw, w_a] = fe_rep(w, pw2, hd, kDefault);
        if (key_wrong_pw != key) ++pw_diff;

        BitVec flooded = add_block_noise(w, kDefault, kDefault.t() + 1, rng);
        auto [key_flooded, w_b] = fe_rep(flooded, pw, hd, kDefault);
        if (key_flooded != key) ++noise_diff;
    }
    CHECK(pw_diff == trials);
    CHECK(noise_diff == trials);
}

TEST_CASE("sketch bits look unbiased over repeated enrollments") {
    SeededRng rng(12);
    BitVec w = BitVec::random(kDefault.n_bits(), rng);
    const size_t samples = 10'000;
    std::vector<size_t> zero_count(kDefault.n_bits(), 0);
    for (size_t i = 0; i < samples; ++i) {
        BitVec sketch = ss_sketch(w, kDefault, rng);
        for (size_t b = 0; b < sketch.size(); ++b)
            if (!sketch.get(b)) ++zero_count[b];
    }
    // Bits within one r-block share a codeword bit; each position still sees
    // an unbiased coin across enrollments.
    for (size_t b = 0; b < kDefault.n_bits(); ++b) {
        double freq = static_cast<double>(zero_count[b]) / samples;
        CHECK(freq > 0.45);
        CHECK(freq < 0.55);
    }
}

TEST_CASE("mask_expand is deterministic with exact lengths") {
    SeededRng rng(13);
    BioKey key{rng.random32()};
    for (size_t n : {size_t(1), size_t(255), size_t(640)}) {
        BitVec a = mask_expand(key, n);
        BitVec b = mask_expand(key, n);
        CHECK(a.size() == n);
        CHECK(a == b);
    }

    BioKey other{rng.random32()};
    BitVec x = mask_expand(key, 10'000);
    BitVec y = mask_expand(other, 10'000);
    size_t diff = x.hamming(y);
    CHECK(diff > 4'600);  // ~50% of 10^4, 8 sigma slack
    CHECK(diff < 5'400);
}

TEST_CASE("helper data encoding round-trips") {
    SeededRng rng(14);
    BitVec w = BitVec::random(kDefault.n_bits(), rng);
    auto [key, hd] = fe_gen(w, pw_bytes("x"), kDefault, rng);
    Bytes encoded = hd.encode(kDefault);
    CHECK(encoded.size() == 2 + 1 + kDefault.n_bits() / 8 + 32);
    auto [decoded, params] = HelperData::decode(encoded);
    CHECK(params == kDefault);
    CHECK(decoded.sketch == hd.sketch);
    CHECK(decoded.seed == hd.seed);

    CHECK_THROWS_AS(HelperData::decode(std::span(encoded).subspan(0, encoded.size() - 1)),
                    std::invalid_argument);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS((CodeParams{0, 3}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((CodeParams{2, 4}).validate(), std::invalid_argument);  // even r
    CHECK_THROWS_AS((CodeParams{2, 1}).validate(), std::invalid_argument);  // r < 3
    CHECK_THROWS_AS((CodeParams{16000, 5}).validate(), std::invalid_argument);  // k*r > 65535
    CHECK_NOTHROW(kDefault.validate());

    SeededRng rng(15);
    BitVec w = BitVec::random(kDefault.n_bits(), rng);
    CHECK_THROWS_AS(fe_gen(w, {}, kDefault, rng), std::invalid_argument);  // empty pw
    BitVec short_w = BitVec::random(8, rng);
    CHECK_THROWS_AS(fe_gen(short_w, pw_bytes("p"), kDefault, rng), std::invalid_argument);
    CHECK_THROWS_AS(mask_expand(BioKey{}, 0), std::invalid_argument);
}

// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cba/chebmath.hpp"

using namespace cba;
using cheb::Int;

namespace {

Int random_prime_below_2_31(std::mt19937_64& gen) {
    for (;;) {
        Int candidate = Int(5 + gen() % ((1ull << 31) - 5)) | 1;
        if (candidate > 3 && cheb::is_probable_prime(candidate)) return candidate;
    }
}

// Replays a fixed byte queue; forces specific sampler outputs.
class ForcedRng final : public Rng {
public:
    explicit ForcedRng(Bytes script) : script_(std::move(script)) {}

    void fill(std::span<uint8_t> out) override {
        for (auto& b : out) {
            REQUIRE(pos_ < script_.size());
            b = script_[pos_++];
        }
    }

private:
    Bytes script_;
    size_t pos_ = 0;
};

}  // namespace

TEST_CASE("degree 0 and 1 are the constant and the identity") {
    CHECK(cheb::cheb_eval(0, 5, 7) == 1);
    CHECK(cheb::cheb_eval(1, 5, 7) == 5);
    CHECK(cheb::cheb_eval_naive(0, 0, 5) == 1);

    std::mt19937_64 gen(1);
    for (int i = 0; i < 20; ++i) {
        Int p = random_prime_below_2_31(gen);
        Int x = Int(gen()) % p;
        CHECK(cheb::cheb_eval(0, x, p) == 1);
        CHECK(cheb::cheb_eval(1, x, p) == x);
    }
}

TEST_CASE("hand-computed small degrees") {
    // T_2(3) = 2*3*3 - 1 = 17 = 3 (mod 7)
    CHECK(cheb::cheb_eval(2, 3, 7) == 3);
    CHECK(cheb::cheb_eval_naive(2, 3, 7) == 3);
    // sequence mod 11 at x=2: 1, 2, 7, 4, 9, 10, 9
    CHECK(cheb::cheb_eval_naive(5, 2, 11) == 10);
    CHECK(cheb::cheb_eval(6, 2, 11) == 9);
    CHECK(cheb::cheb_eval(3, 2, 11) == 4);
    CHECK(cheb::cheb_eval(2, 2, 11) == 7);
}

TEST_CASE("fast evaluation matches the linear oracle") {
    std::mt19937_64 gen(42);
    for (int pair = 0; pair < 25; ++pair) {
        Int p = random_prime_below_2_31(gen);
        Int x = Int(gen()) % p;
        for (uint64_t n : {0ull, 1ull, 2ull, 3ull, 17ull, 255ull, 256ull, 1000ull, 9999ull}) {
            CAPTURE(p);
            CAPTURE(x);
            CAPTURE(n);
            CHECK(cheb::cheb_eval(n, x, p) == cheb::cheb_eval_naive(n, x, p));
        }
    }
}

TEST_CASE("semigroup composition") {
    const Int& p = cheb::default_prime();
    std::mt19937_64 gen(7);
    SeededRng rng(7);
    for (int i = 0; i < 50; ++i) {
        Int r = 2 + Int(gen()) % ((Int(1) << 64) - 2);
        Int s = 2 + Int(gen()) % ((Int(1) << 64) - 2);
        Int x = cheb::sample_field_element(p, rng);
        Int via_s = cheb::cheb_eval(r, cheb::cheb_eval(s, x, p), p);
        Int via_r = cheb::cheb_eval(s, cheb::cheb_eval(r, x, p), p);
        Int direct = cheb::cheb_eval(r * s, x, p);
        CHECK(via_s == direct);
        CHECK(via_r == direct);
    }
}

TEST_CASE("semigroup holds at small moduli against the oracle") {
    std::mt19937_64 gen(3);
    for (int i = 0; i < 40; ++i) {
        Int p = random_prime_below_2_31(gen);
        Int r = 2 + gen() % 97;
        Int s = 2 + gen() % 97;
        Int x = Int(gen()) % p;
        CHECK(cheb::cheb_eval_naive(r, cheb::cheb_eval_naive(s, x, p), p) ==
              cheb::cheb_eval_naive(r * s, x, p));
    }
}

TEST_CASE("parameter errors") {
    CHECK_THROWS_AS(cheb::cheb_eval(2, 1, 3), std::invalid_argument);   // p <= 3
    CHECK_THROWS_AS(cheb::cheb_eval(2, 1, 4), std::invalid_argument);   // even
    CHECK_THROWS_AS(cheb::cheb_eval(2, 1, 9), std::invalid_argument);   // odd composite
    CHECK_THROWS_AS(cheb::cheb_eval(2, 7, 7), std::invalid_argument);   // x >= p
    CHECK_THROWS_AS(cheb::cheb_eval(Int(-1), 2, 7), std::invalid_argument);
    CHECK_THROWS_AS(cheb::cheb_eval_naive(Int(1) << 40, 2, 7), std::invalid_argument);
}

TEST_CASE("primality testing") {
    CHECK(cheb::is_probable_prime(2));
    CHECK(cheb::is_probable_prime(3));
    CHECK(cheb::is_probable_prime(cheb::default_prime()));
    CHECK_FALSE(cheb::is_probable_prime(1));
    CHECK_FALSE(cheb::is_probable_prime(561));    // Carmichael
    CHECK_FALSE(cheb::is_probable_prime(29341));  // Carmichael
    CHECK_FALSE(cheb::is_probable_prime((Int(1) << 255) - 21));
}

TEST_CASE("serialization round-trips and bounds") {
    std::mt19937_64 gen(9);
    for (int i = 0; i < 200; ++i) {
        Int v = 0;
        for (int limb = 0; limb < 4; ++limb) v = (v << 64) | gen();
        CHECK(cheb::deser32(cheb::ser32(v)) == v);
    }
    CHECK(cheb::deser32(cheb::ser32(0)) == 0);
    CHECK_THROWS_AS(cheb::ser32(Int(1) << 256), std::invalid_argument);
    CHECK_THROWS_AS(cheb::ser32(Int(-1)), std::invalid_argument);

    CHECK(cheb::from_hex("7f") == 127);
    CHECK(cheb::to_hex(cheb::from_hex(cheb::kDefaultPrimeHex)) == cheb::kDefaultPrimeHex);
    CHECK(cheb::default_prime() == (Int(1) << 255) - 19);
}

TEST_CASE("sampling ranges") {
    SeededRng rng(11);
    const Int& p = cheb::default_prime();
    for (int i = 0; i < 100; ++i) {
        Int x = cheb::sample_field_element(p, rng);
        CHECK(x >= 0);
        CHECK(x < p);
        cheb::SecretDegree d = cheb::sample_secret_degree(rng);
        CHECK(d.value >= 2);
        CHECK(d.value < cheb::degree_bound());
    }
    Int small = 7;
    for (int i = 0; i < 50; ++i) CHECK(cheb::sample_field_element(small, rng) < small);
}

TEST_CASE("server keygen satisfies its own public equation") {
    SeededRng rng(13);
    const Int& p = cheb::default_prime();
    for (int i = 0; i < 5; ++i) {
        cheb::ServerKey key = cheb::server_keygen(p, rng);
        CHECK(key.s >= 0);
        CHECK(key.s < p);
        CHECK(key.spub >= 0);
        CHECK(key.spub < p);
        CHECK(cheb::cheb_eval(key.x_s.value, key.s, p) == key.spub);
    }

    // Small modulus, checkable against the oracle.
    Int p11 = 11;
    for (int i = 0; i < 10; ++i) {
        cheb::ServerKey key = cheb::server_keygen(p11, rng);
        CHECK(cheb::cheb_eval_naive(key.x_s.value % 100000, key.s, p11) ==
              cheb::cheb_eval(key.x_s.value % 100000, key.s, p11));
        CHECK(key.spub == cheb::cheb_eval(key.x_s.value, key.s, p11));
    }
}

TEST_CASE("server keygen with forced randomness") {
    // s = 2 (one masked byte for p = 11), then x_s = 3 (32 bytes).
    auto script_for = [](uint8_t degree_low) {
        Bytes script{0x02};
        script.resize(33, 0x00);
        script.back() = degree_low;
        return script;
    };

    ForcedRng rng3(script_for(3));
    cheb::ServerKey key = cheb::server_keygen(11, rng3);
    CHECK(key.s == 2);
    CHECK(key.x_s.value == 3);
    CHECK(key.spub == 4);  // T_3(2) mod 11

    ForcedRng rng2(script_for(2));
    key = cheb::server_keygen(11, rng2);
    CHECK(key.spub == 7);  // T_2(2) mod 11
}

TEST_CASE("secret degree bounds enforced") {
    CHECK_THROWS_AS(cheb::SecretDegree(1), std::invalid_argument);
    CHECK_THROWS_AS(cheb::SecretDegree(0), std::invalid_argument);
    CHECK_THROWS_AS(cheb::SecretDegree(cheb::degree_bound()), std::invalid_argument);
    CHECK(cheb::SecretDegree(2).value == 2);
}

TEST_CASE("public parameter checks") {
    SeededRng rng(17);
    const Int& p = cheb::default_prime();
    cheb::ServerKey key = cheb::server_keygen(p, rng);
    CHECK_NOTHROW((cheb::ChebParams{p, key.s, key.spub}).validate());
    CHECK_THROWS_AS((cheb::ChebParams{p - 2, key.s, key.spub}).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS((cheb::ChebParams{p, p, key.spub}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((cheb::ChebParams{p, key.s, p + 1}).validate(), std::invalid_argument);
}

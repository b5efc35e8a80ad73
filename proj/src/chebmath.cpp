// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "cba/chebmath.hpp"

#include <stdexcept>
#include <vector>

namespace cba::cheb {

namespace {

Int modnorm(Int v, const Int& p) {
    v %= p;
    if (v < 0) v += p;
    return v;
}

// Deterministic witnesses first (sound alone below 3.3 * 10^24), then
// pseudorandom rounds for larger candidates.
bool miller_rabin(const Int& n, int rounds) {
    static const int small_primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    for (int q : small_primes) {
        if (n == q) return true;
        if (n % q == 0) return false;
    }
    if (n < 2) return false;

    Int d = n - 1;
    unsigned r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }

    auto witness = [&](const Int& a) {
        Int x = powm(a, d, n);
        if (x == 1 || x == n - 1) return false;
        for (unsigned i = 1; i < r; ++i) {
            x = (x * x) % n;
            if (x == n - 1) return false;
        }
        return true;  // composite witness found
    };

    for (int q : small_primes)
        if (witness(q)) return false;

    std::mt19937_64 gen(0x9e3779b97f4a7c15ULL);  // fixed seed: reproducible verdicts
    int extra = rounds > 12 ? rounds - 12 : 0;
    for (int i = 0; i < extra; ++i) {
        Int a = 2 + Int(gen()) % (n - 3);
        if (witness(a)) return false;
    }
    return true;
}

// cheb_eval is called per protocol message with the same handful of moduli,
// so the primality verdict is memoized per thread.
bool prime_checked(const Int& p) {
    thread_local std::vector<Int> known;
    for (const auto& k : known)
        if (k == p) return true;
    if (!miller_rabin(p, 25)) return false;
    if (known.size() >= 8) known.erase(known.begin());
    known.push_back(p);
    return true;
}

void check_params(const Int& n, const Int& x, const Int& p) {
    if (p <= 3) throw std::invalid_argument("cheb_eval: modulus must be a prime > 3");
    if (!prime_checked(p)) throw std::invalid_argument("cheb_eval: modulus is not prime");
    if (x < 0 || x >= p) throw std::invalid_argument("cheb_eval: x outside [0, p)");
    if (n < 0) throw std::invalid_argument("cheb_eval: negative degree");
}

}  // namespace

const Int& default_prime() {
    static const Int p = from_hex(kDefaultPrimeHex);
    return p;
}

Int from_hex(std::string_view hex) {
    if (hex.empty()) throw std::invalid_argument("empty hex integer");
    Int v = 0;
    for (char c : hex) {
        int nib = hex_nibble(c);
        if (nib < 0) throw std::invalid_argument("invalid hex integer");
        v = (v << 4) | nib;
    }
    return v;
}

std::string to_hex(const Int& v) {
    if (v < 0) throw std::invalid_argument("to_hex: negative value");
    if (v == 0) return "0";
    static const char* digits = "0123456789abcdef";
    std::string out;
    Int t = v;
    while (t > 0) {
        out.push_back(digits[static_cast<int>(t & 0xf)]);
        t >>= 4;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

Digest ser32(const Int& v) {
    if (v < 0 || (v >> 256) != 0)
        throw std::invalid_argument("ser32: value outside [0, 2^256)");
    Digest out{};
    Int t = v;
    for (int i = 31; i >= 0 && t > 0; --i) {
        out[i] = static_cast<uint8_t>(t & 0xff);
        t >>= 8;
    }
    return out;
}

Int deser32(std::span<const uint8_t> bytes) {
    if (bytes.size() != 32) throw std::invalid_argument("deser32: need exactly 32 bytes");
    Int v = 0;
    for (uint8_t b : bytes) v = (v << 8) | b;
    return v;
}

bool is_probable_prime(const Int& n, int rounds) { return miller_rabin(n, rounds); }

Int cheb_eval(const Int& n, const Int& x, const Int& p) {
    check_params(n, x, p);
    if (n == 0) return 1;

    // Invariant: before bit i is consumed, (a, b) = (T_k, T_k+1) for
    // k = n >> (i+1); afterwards k' = 2k + bit.
    Int a = 1, b = x;
    for (int i = static_cast<int>(msb(n)); i >= 0; --i) {
        Int cross = modnorm(2 * a * b - x, p);  // T_2k+1
        if (bit_test(n, i)) {
            a = cross;
            b = modnorm(2 * b * b - 1, p);  // T_2k+2
        } else {
            b = cross;
            a = modnorm(2 * a * a - 1, p);  // T_2k
        }
    }
    return a;
}

Int cheb_eval_naive(const Int& n, const Int& x, const Int& p) {
    check_params(n, x, p);
    if (n > 10'000'000) throw std::invalid_argument("cheb_eval_naive: degree too large for oracle");
    if (n == 0) return 1;
    if (n == 1) return x;

    uint64_t steps = n.convert_to<uint64_t>();
    Int prev = 1, cur = x;
    for (uint64_t i = 2; i <= steps; ++i) {
        Int next = modnorm(2 * x * cur - prev, p);
        prev = cur;
        cur = next;
    }
    return cur;
}

const Int& degree_bound() {
    static const Int bound = Int(1) << 255;
    return bound;
}

SecretDegree::SecretDegree(Int v) : value(std::move(v)) {
    if (value < 2 || value >= degree_bound())
        throw std::invalid_argument("SecretDegree: value outside [2, 2^255)");
}

void ChebParams::validate() const {
    if (p <= 3 || !is_probable_prime(p))
        throw std::invalid_argument("ChebParams: p is not a prime > 3");
    if (s < 0 || s >= p) throw std::invalid_argument("ChebParams: s outside [0, p)");
    if (spub < 0 || spub >= p) throw std::invalid_argument("ChebParams: spub outside [0, p)");
}

Int sample_field_element(const Int& p, Rng& rng) {
    if (p <= 1) throw std::invalid_argument("sample_field_element: bad modulus");
    size_t bits = msb(p) + 1;
    size_t nbytes = (bits + 7) / 8;
    unsigned top_mask = bits % 8 ? (1u << (bits % 8)) - 1 : 0xffu;
    for (;;) {
        Bytes buf = rng.random_bytes(nbytes);
        buf[0] &= static_cast<uint8_t>(top_mask);
        Int v = 0;
        for (uint8_t b : buf) v = (v << 8) | b;
        if (v < p) return v;
    }
}

SecretDegree sample_secret_degree(Rng& rng) {
    for (;;) {
        Digest buf = rng.random32();
        buf[0] &= 0x7f;  // < 2^255
        Int v = deser32(buf);
        if (v >= 2) return SecretDegree(std::move(v));
    }
}

ServerKey server_keygen(const Int& p, Rng& rng) {
    Int s = sample_field_element(p, rng);
    SecretDegree x_s = sample_secret_degree(rng);
    Int spub = cheb_eval(x_s.value, s, p);
    return ServerKey{std::move(s), std::move(x_s), std::move(spub)};
}

}  // namespace cba::cheb

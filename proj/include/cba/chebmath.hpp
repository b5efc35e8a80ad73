// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#ifndef CBA_CHEBMATH_HPP
#define CBA_CHEBMATH_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <span>
#include <string_view>

#include "cba/bytes.hpp"
#include "cba/rng.hpp"

namespace cba::cheb {

using Int = boost::multiprecision::cpp_int;

// 2^255 - 19. Widely vetted prime of the right magnitude; the parameter file
// may substitute any other prime of >= 128 bits.
inline constexpr std::string_view kDefaultPrimeHex =
    "7fffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffed";

const Int& default_prime();

Int from_hex(std::string_view hex);
std::string to_hex(const Int& v);

/// 32-byte big-endian encoding of a field element or secret degree.
/// Throws std::invalid_argument for negative values or values >= 2^256.
Digest ser32(const Int& v);
Int deser32(std::span<const uint8_t> bytes);

/// Miller-Rabin with fixed deterministic bases plus pseudorandom rounds.
bool is_probable_prime(const Int& n, int rounds = 25);

/// T_n(x) mod p via the doubling identities T_2n = 2*T_n^2 - 1 and
/// T_2n+1 = 2*T_n+1*T_n - x; O(log n) multiplications.
/// Throws std::invalid_argument if p is not an odd prime > 3, x is outside
/// [0, p), or n < 0.
Int cheb_eval(const Int& n, const Int& x, const Int& p);

/// Linear iteration of T_n = 2x*T_n-1 - T_n-2. Test oracle; refuses n > 10^7.
Int cheb_eval_naive(const Int& n, const Int& x, const Int& p);

/// Upper bound (exclusive) for secret degrees: 2^255.
const Int& degree_bound();

/// Random integer degree, the X_S / R_C / R_S role. Kept >= 2 because
/// T_0 == 1 and T_1 is the identity.
struct SecretDegree {
    Int value;

    explicit SecretDegree(Int v);
};

/// Public arithmetic context shared by client and server: prime modulus,
/// per-user base point, and the server public value T_X_S(s) mod p.
struct ChebParams {
    Int p;
    Int s;
    Int spub;

    /// p must be prime and > 3; s and spub must lie in [0, p). Whether
    /// spub == T_X_S(s) is checkable only with the server's secret degree.
    void validate() const;
};

/// Uniform field element in [0, p) by rejection sampling.
Int sample_field_element(const Int& p, Rng& rng);

/// Uniform degree in [2, 2^255).
SecretDegree sample_secret_degree(Rng& rng);

struct ServerKey {
    Int s;             // public base point
    SecretDegree x_s;  // server trapdoor, never leaves the server
    Int spub;          // T_x_s(s) mod p
};

ServerKey server_keygen(const Int& p, Rng& rng);

}  // namespace cba::cheb

#endif  // CBA_CHEBMATH_HPP

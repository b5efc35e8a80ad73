// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#ifndef CBA_PROTOCOL_HPP
#define CBA_PROTOCOL_HPP

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <utility>
#include <variant>

#include "cba/bitvec.hpp"
#include "cba/bytes.hpp"
#include "cba/chebmath.hpp"
#include "cba/fuzzy.hpp"
#include "cba/rng.hpp"

namespace cba {

class Store;

namespace protocol {

using cheb::Int;

// ---------------------------------------------------------------------------
// Messages. One struct per arrow of the enrollment and authentication flows;
// `wire` owns their byte encodings.
// ---------------------------------------------------------------------------

struct EnrollRequest {
    BitVec bb_t;     // masked template B_T XOR keystream(K_T)
    Digest tag{};    // h(K_T || PW_T)
    bool operator==(const EnrollRequest&) const = default;
};

struct EnrollResponse {
    Digest o1{};     // h(BB_T || ID), the lookup handle
    Digest o2{};     // h(K_T || PW_T) XOR h(X_S)
    Int s;           // per-user base point
    Int spub;        // T_X_S(s) mod p
    Int p;
    bool operator==(const EnrollResponse&) const = default;
};

struct AuthRequest {
    Digest o1{};
    Digest o2{};
    BitVec bb;       // reconstructed-template mask, must equal enrolled BB_T
    Int m1;          // T_R_C(s) mod p
    Digest alpha{};  // h(K || PW) XOR h(M1 || M2 || t1)
    uint64_t t1 = 0;
    bool operator==(const AuthRequest&) const = default;
};

struct AuthChallenge {
    Int m3;          // T_R_S(s) mod p
    Digest beta{};   // h(M2' || M3 || t2)
    uint64_t t2 = 0;
    bool operator==(const AuthChallenge&) const = default;
};

struct AuthConfirm {
    Digest gamma{};  // h(M2 || M4 || t3)
    uint64_t t3 = 0;
    bool operator==(const AuthConfirm&) const = default;
};

// ---------------------------------------------------------------------------
// Domain state
// ---------------------------------------------------------------------------

/// Everything the device persists after enrollment.
struct ClientCredential {
    Digest o1{};
    Digest o2{};
    Int s;
    Int spub;
    Int p;
    fuzzy::HelperData hd;
    fuzzy::CodeParams code;

    /// Range and primality checks; throws std::invalid_argument.
    void validate() const;
};

/// Server-side row: (ID, BB_T, X_S, s) plus the o1 lookup digest.
/// X_S never appears in any wire message.
struct EnrollmentRecord {
    std::array<uint8_t, 16> id{};
    BitVec bb_t;
    Int x_s;
    Int s;
    Digest o1{};

    bool operator==(const EnrollmentRecord&) const = default;
};

struct SessionKey {
    Digest key{};
    bool operator==(const SessionKey&) const = default;
};

/// Server-side per-handshake state, keyed by the M1 bytes. Entries persist
/// (consumed or not) until the freshness window lapses, so the table doubles
/// as the seen-nonce cache for duplicate-M1 rejection.
struct PendingSession {
    Int m1;
    Int m2_prime;
    Int r_s;
    Int m3;
    uint64_t created_at = 0;
    bool consumed = false;
};

enum class Reject {
    StaleTimestamp,
    UnknownCredential,
    TemplateMismatch,
    ProofMismatch,
    DuplicateM1,
    ServerInauthentic,
    UnknownSession,
    MalformedField,
};

const char* to_string(Reject r);

inline constexpr uint64_t kDefaultWindowMs = 30'000;

// ---------------------------------------------------------------------------
// Client side
// ---------------------------------------------------------------------------

struct EnrollStart {
    EnrollRequest request;
    fuzzy::BioKey key;     // K_T, never transmitted
    fuzzy::HelperData hd;  // retained for the credential
};

/// Gen the biometric key, mask the template, and build the enrollment
/// package (BB_T, h(K_T || PW_T)).
EnrollStart enroll_client(const BitVec& b_t, std::span<const uint8_t> pw,
                          const fuzzy::CodeParams& code, Rng& rng);

/// Combine the retained enrollment state with the server response into the
/// persisted credential. Validates the response fields.
ClientCredential make_credential(const EnrollStart& start, const EnrollResponse& resp,
                                 const fuzzy::CodeParams& code);

struct ClientAuthState {
    Int r_c;
    Int m2;  // T_R_C(SPUB) mod p, needed for the beta and gamma checks
};

/// Reproduce the key from the fresh reading, rebuild BB from the
/// reconstructed template, and assemble (O1, O2, BB, M1, alpha, t1).
std::pair<AuthRequest, ClientAuthState> auth_client_start(const ClientCredential& cred,
                                                          const BitVec& b,
                                                          std::span<const uint8_t> pw,
                                                          uint64_t now, Rng& rng);

struct ClientFinish {
    AuthConfirm confirm;
    SessionKey key;
};

/// Verify the server's beta proof, then derive M4 and the session key.
std::variant<ClientFinish, Reject> auth_client_finish(const AuthChallenge& challenge,
                                                      const ClientAuthState& state,
                                                      const ClientCredential& cred, uint64_t now,
                                                      uint64_t window_ms = kDefaultWindowMs);

// ---------------------------------------------------------------------------
// Server side
// ---------------------------------------------------------------------------

struct ServerConfig {
    Int p = cheb::default_prime();
    fuzzy::CodeParams code{};
    uint64_t window_ms = kDefaultWindowMs;
    // Reject duplicate M1 inside the window; timestamps alone admit replay
    // until the window lapses. Disabled in faithful-paper mode.
    bool harden_replay = true;
};

/// Enrollment and authentication state machine over a Store. Thread-safe;
/// the pending table and store writes are serialized internally.
class AuthServer {
public:
    AuthServer(ServerConfig cfg, Store& store, Rng& rng);

    /// Creates ID and server keys, persists the record, returns the client
    /// package. Store conflicts and I/O failures propagate as exceptions and
    /// leave nothing persisted.
    std::variant<EnrollResponse, Reject> enroll(const EnrollRequest& req);

    /// First authentication round: timestamp, template, and alpha checks,
    /// then the challenge. Rejects carry the reason for the server log; the
    /// wire sends a uniform failure regardless.
    std::variant<AuthChallenge, Reject> verify_request(const AuthRequest& req, uint64_t now);

    /// Final round: gamma check against the pending session for m1. The
    /// session is single-use: it is consumed on any terminal outcome.
    std::variant<SessionKey, Reject> finish(const Int& m1, const AuthConfirm& confirm,
                                            uint64_t now);

    const ServerConfig& config() const { return cfg_; }

    size_t pending_count() const;

    /// Diagnostic snapshot for the security harness; exposes the session
    /// secrets so transcript scans can assert they never hit the wire.
    std::optional<PendingSession> pending_for(const Int& m1) const;

private:
    void purge_locked(uint64_t now);

    ServerConfig cfg_;
    Store& store_;
    Rng& rng_;
    mutable std::mutex mu_;
    std::map<Digest, PendingSession> pending_;
};

/// Session key derivation: H("SK" || ser(M4)). Exposed for tests.
SessionKey derive_session_key(const Int& m4);

/// h(ser(a) || ser(b) || ser(t)) with 32-byte field and 8-byte timestamp
/// serialization; the alpha/beta/gamma building block.
Digest hash_pair_ts(const Int& a, const Int& b, uint64_t t);

/// h(K || PW).
Digest hash_key_pw(const fuzzy::BioKey& key, std::span<const uint8_t> pw);

}  // namespace protocol
}  // namespace cba

#endif  // CBA_PROTOCOL_HPP

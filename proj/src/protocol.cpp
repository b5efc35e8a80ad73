// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "cba/protocol.hpp"

#include <stdexcept>

#include "cba/hash.hpp"
#include "cba/store.hpp"

namespace cba::protocol {

namespace {

uint64_t age_of(uint64_t stamp, uint64_t now) { return now >= stamp ? now - stamp : stamp - now; }

}  // namespace

const char* to_string(Reject r) {
    switch (r) {
        case Reject::StaleTimestamp: return "stale-timestamp";
        case Reject::UnknownCredential: return "unknown-credential";
        case Reject::TemplateMismatch: return "template-mismatch";
        case Reject::ProofMismatch: return "proof-mismatch";
        case Reject::DuplicateM1: return "duplicate-m1";
        case Reject::ServerInauthentic: return "server-inauthentic";
        case Reject::UnknownSession: return "unknown-session";
        case Reject::MalformedField: return "malformed-field";
    }
    return "unknown";
}

Digest hash_pair_ts(const Int& a, const Int& b, uint64_t t) {
    return sha256({cheb::ser32(a), cheb::ser32(b), be64(t)});
}

Digest hash_key_pw(const fuzzy::BioKey& key, std::span<const uint8_t> pw) {
    return sha256({key.key, pw});
}

SessionKey derive_session_key(const Int& m4) {
    static const uint8_t label[2] = {'S', 'K'};
    return SessionKey{sha256({label, cheb::ser32(m4)})};
}

void ClientCredential::validate() const {
    code.validate();
    cheb::ChebParams{p, s, spub}.validate();
    if (hd.sketch.size() != code.n_bits())
        throw std::invalid_argument("credential: helper data length mismatch");
}

EnrollStart enroll_client(const BitVec& b_t, std::span<const uint8_t> pw,
                          const fuzzy::CodeParams& code, Rng& rng) {
    auto [key, hd] = fuzzy::fe_gen(b_t, pw, code, rng);
    EnrollStart out;
    out.request.bb_t = b_t ^ fuzzy::mask_expand(key, code.n_bits());
    out.request.tag = hash_key_pw(key, pw);
    out.key = key;
    out.hd = std::move(hd);
    return out;
}

ClientCredential make_credential(const EnrollStart& start, const EnrollResponse& resp,
                                 const fuzzy::CodeParams& code) {
    ClientCredential cred;
    cred.o1 = resp.o1;
    cred.o2 = resp.o2;
    cred.s = resp.s;
    cred.spub = resp.spub;
    cred.p = resp.p;
    cred.hd = start.hd;
    cred.code = code;
    cred.validate();
    return cred;
}

std::pair<AuthRequest, ClientAuthState> auth_client_start(const ClientCredential& cred,
                                                          const BitVec& b,
                                                          std::span<const uint8_t> pw,
                                                          uint64_t now, Rng& rng) {
    // BB comes from the reconstructed template, not the raw reading: the
    // server compares h(BB || ID) against the enrolled O1, which only matches
    // when BB == BB_T.
    auto [key, w] = fuzzy::fe_rep(b, pw, cred.hd, cred.code);
    BitVec bb = w ^ fuzzy::mask_expand(key, cred.code.n_bits());

    cheb::SecretDegree r_c = cheb::sample_secret_degree(rng);
    Int m1 = cheb::cheb_eval(r_c.value, cred.s, cred.p);
    Int m2 = cheb::cheb_eval(r_c.value, cred.spub, cred.p);

    AuthRequest req;
    req.o1 = cred.o1;
    req.o2 = cred.o2;
    req.bb = std::move(bb);
    req.m1 = m1;
    req.alpha = xor32(hash_key_pw(key, pw), hash_pair_ts(m1, m2, now));
    req.t1 = now;
    return {std::move(req), ClientAuthState{std::move(r_c.value), std::move(m2)}};
}

std::variant<ClientFinish, Reject> auth_client_finish(const AuthChallenge& challenge,
                                                      const ClientAuthState& state,
                                                      const ClientCredential& cred, uint64_t now,
                                                      uint64_t window_ms) {
    if (challenge.m3 < 0 || challenge.m3 >= cred.p) return Reject::MalformedField;
    if (age_of(challenge.t2, now) > window_ms) return Reject::StaleTimestamp;

    Digest beta_prime = hash_pair_ts(state.m2, challenge.m3, challenge.t2);
    if (beta_prime != challenge.beta) return Reject::ServerInauthentic;

    Int m4 = cheb::cheb_eval(state.r_c, challenge.m3, cred.p);
    ClientFinish out;
    out.confirm.t3 = now;
    out.confirm.gamma = hash_pair_ts(state.m2, m4, now);
    out.key = derive_session_key(m4);
    return out;
}

AuthServer::AuthServer(ServerConfig cfg, Store& store, Rng& rng)
    : cfg_(std::move(cfg)), store_(store), rng_(rng) {
    cfg_.code.validate();
    if (cfg_.p <= 3 || !cheb::is_probable_prime(cfg_.p))
        throw std::invalid_argument("AuthServer: p is not prime");
}

std::variant<EnrollResponse, Reject> AuthServer::enroll(const EnrollRequest& req) {
    if (req.bb_t.size() != cfg_.code.n_bits()) return Reject::MalformedField;

    cheb::ServerKey key = cheb::server_keygen(cfg_.p, rng_);

    EnrollmentRecord record;
    rng_.fill(record.id);
    record.bb_t = req.bb_t;
    record.x_s = key.x_s.value;
    record.s = key.s;
    record.o1 = sha256({req.bb_t.bytes(), record.id});

    store_.put(record);  // flushed before the response leaves

    EnrollResponse resp;
    resp.o1 = record.o1;
    resp.o2 = xor32(req.tag, sha256(cheb::ser32(record.x_s)));
    resp.s = key.s;
    resp.spub = key.spub;
    resp.p = cfg_.p;
    return resp;
}

std::variant<AuthChallenge, Reject> AuthServer::verify_request(const AuthRequest& req,
                                                               uint64_t now) {
    if (req.bb.size() != cfg_.code.n_bits()) return Reject::MalformedField;
    if (req.m1 < 0 || req.m1 >= cfg_.p) return Reject::MalformedField;

    if (age_of(req.t1, now) > cfg_.window_ms) return Reject::StaleTimestamp;

    std::optional<EnrollmentRecord> rec = store_.get(req.o1);
    if (!rec) return Reject::UnknownCredential;

    if (sha256({req.bb.bytes(), rec->id}) != req.o1) return Reject::TemplateMismatch;

    Int m2_prime = cheb::cheb_eval(rec->x_s, req.m1, cfg_.p);
    Digest temp = xor32(req.o2, sha256(cheb::ser32(rec->x_s)));
    Digest alpha_prime = xor32(temp, hash_pair_ts(req.m1, m2_prime, req.t1));
    if (alpha_prime != req.alpha) return Reject::ProofMismatch;

    cheb::SecretDegree r_s = cheb::sample_secret_degree(rng_);
    Int m3 = cheb::cheb_eval(r_s.value, rec->s, cfg_.p);

    AuthChallenge challenge;
    challenge.m3 = m3;
    challenge.t2 = now;
    challenge.beta = hash_pair_ts(m2_prime, m3, now);

    Digest key = cheb::ser32(req.m1);
    {
        std::lock_guard lock(mu_);
        purge_locked(now);
        auto it = pending_.find(key);
        if (it != pending_.end()) {
            if (cfg_.harden_replay) return Reject::DuplicateM1;
            pending_.erase(it);  // faithful-paper mode: last request wins
        }
        pending_.emplace(key, PendingSession{req.m1, std::move(m2_prime), std::move(r_s.value),
                                             std::move(m3), now, false});
    }
    return challenge;
}

std::variant<SessionKey, Reject> AuthServer::finish(const Int& m1, const AuthConfirm& confirm,
                                                    uint64_t now) {
    Digest key = cheb::ser32(m1);
    PendingSession session;
    {
        std::lock_guard lock(mu_);
        purge_locked(now);
        auto it = pending_.find(key);
        if (it == pending_.end() || it->second.consumed) return Reject::UnknownSession;
        it->second.consumed = true;  // single-use, regardless of outcome
        session = it->second;
    }

    if (age_of(confirm.t3, now) > cfg_.window_ms) return Reject::StaleTimestamp;

    Int m4_prime = cheb::cheb_eval(session.r_s, session.m1, cfg_.p);
    Digest gamma_prime = hash_pair_ts(session.m2_prime, m4_prime, confirm.t3);
    if (gamma_prime != confirm.gamma) return Reject::ProofMismatch;

    return derive_session_key(m4_prime);
}

size_t AuthServer::pending_count() const {
    std::lock_guard lock(mu_);
    return pending_.size();
}

std::optional<PendingSession> AuthServer::pending_for(const Int& m1) const {
    std::lock_guard lock(mu_);
    auto it = pending_.find(cheb::ser32(m1));
    if (it == pending_.end()) return std::nullopt;
    return it->second;
}

void AuthServer::purge_locked(uint64_t now) {
    for (auto it = pending_.begin(); it != pending_.end();) {
        if (now >= it->second.created_at && now - it->second.created_at > cfg_.window_ms)
            it = pending_.erase(it);
        else
            ++it;
    }
}

}  // namespace cba::protocol

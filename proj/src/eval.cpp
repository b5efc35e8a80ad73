// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "cba/eval.hpp"

#include <cstdio>
#include <sstream>

#include "cba/store.hpp"

namespace cba::eval {

namespace {

// One full authentication attempt against an established credential.
bool attempt(protocol::AuthServer& server, const protocol::ClientCredential& cred,
             const BitVec& reading, std::span<const uint8_t> pw, uint64_t now, Rng& rng) {
    auto [request, state] = protocol::auth_client_start(cred, reading, pw, now, rng);
    auto challenge = server.verify_request(request, now);
    if (std::holds_alternative<protocol::Reject>(challenge)) return false;

    auto finish = protocol::auth_client_finish(std::get<protocol::AuthChallenge>(challenge),
                                               state, cred, now, server.config().window_ms);
    if (std::holds_alternative<protocol::Reject>(finish)) return false;
    auto& done = std::get<protocol::ClientFinish>(finish);

    auto server_key = server.finish(request.m1, done.confirm, now);
    if (std::holds_alternative<protocol::Reject>(server_key)) return false;
    return std::get<protocol::SessionKey>(server_key) == done.key;
}

}  // namespace

EvalResult run_eval(const EvalParams& params) {
    EvalResult result;
    result.params = params;

    SeededRng rng(params.seed);
    Store store(params.server.p, params.server.code);
    protocol::AuthServer server(params.server, store, rng);
    const auto& code = params.server.code;

    BitVec b_t = BitVec::random(code.n_bits(), rng);
    Bytes pw = rng.random_bytes(16);

    protocol::EnrollStart start = protocol::enroll_client(b_t, pw, code, rng);
    auto enrolled = server.enroll(start.request);
    protocol::ClientCredential cred = protocol::make_credential(
        start, std::get<protocol::EnrollResponse>(enrolled), code);

    // Advance time between trials so the pending table keeps purging and M1
    // values never collide with the duplicate cache.
    uint64_t now = 1'700'000'000'000ULL;
    uint64_t step = params.server.window_ms / 8 + 1;

    for (size_t i = 0; i < params.trials; ++i) {
        BitVec reading = params.genuine_noise == 0
                             ? b_t
                             : fuzzy::add_block_noise(b_t, code, params.genuine_noise, rng);
        if (attempt(server, cred, reading, pw, now, rng))
            ++result.genuine_accepted;
        else
            ++result.genuine_rejected;
        now += step;
    }

    for (size_t i = 0; i < params.trials; ++i) {
        BitVec impostor = BitVec::random(code.n_bits(), rng);
        if (attempt(server, cred, impostor, pw, now, rng))
            ++result.impostor_accepted;
        else
            ++result.impostor_rejected;
        now += step;
    }

    return result;
}

std::string EvalResult::table() const {
    char line[160];
    std::ostringstream out;
    const auto& code = params.server.code;

    out << "synthetic FAR/FRR evaluation\n";
    out << "  seed           " << params.seed << "\n";
    out << "  code           k=" << code.k << " r=" << static_cast<unsigned>(code.r)
        << " (N=" << code.n_bits() << ", capacity t=" << code.t() << " flips/block)\n";
    out << "  genuine noise  " << params.genuine_noise << " flips/block\n";
    out << "  ------------------------------------------------------------\n";
    out << "  group      attempts    accepted    rejected    rate\n";
    std::snprintf(line, sizeof(line), "  %-9s  %-10zu  %-10zu  %-10zu  FRR %.3f\n", "genuine",
                  genuine_accepted + genuine_rejected, genuine_accepted, genuine_rejected, frr());
    out << line;
    std::snprintf(line, sizeof(line), "  %-9s  %-10zu  %-10zu  %-10zu  FAR %.3f\n", "impostor",
                  impostor_accepted + impostor_rejected, impostor_accepted, impostor_rejected,
                  far());
    out << line;
    out << "  ------------------------------------------------------------\n";
    std::snprintf(line, sizeof(line), "RESULT far=%.3f frr=%.3f\n", far(), frr());
    out << line;
    return out.str();
}

}  // namespace cba::eval

// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#ifndef CBA_EVAL_HPP
#define CBA_EVAL_HPP

#include <string>

#include "cba/protocol.hpp"

namespace cba::eval {

/// Synthetic accuracy harness: one enrollment, then `trials` genuine
/// attempts (enrolled vector plus per-block Hamming noise) and `trials`
/// impostor attempts (fresh random vectors against the same credential),
/// each run through the full authentication flow.
struct EvalParams {
    protocol::ServerConfig server;
    size_t trials = 10'000;
    unsigned genuine_noise = 0;  // flips per r-bit block
    uint64_t seed = 1;
};

struct EvalResult {
    EvalParams params;
    size_t genuine_accepted = 0;
    size_t genuine_rejected = 0;
    size_t impostor_accepted = 0;
    size_t impostor_rejected = 0;

    double far() const {
        size_t n = impostor_accepted + impostor_rejected;
        return n ? static_cast<double>(impostor_accepted) / static_cast<double>(n) : 0.0;
    }
    double frr() const {
        size_t n = genuine_accepted + genuine_rejected;
        return n ? static_cast<double>(genuine_rejected) / static_cast<double>(n) : 0.0;
    }

    /// Fixed-width report ending in the machine line
    /// `RESULT far=<x> frr=<y>`. Byte-identical for identical params.
    std::string table() const;
};

EvalResult run_eval(const EvalParams& params);

}  // namespace cba::eval

#endif  // CBA_EVAL_HPP

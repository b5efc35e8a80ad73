// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#ifndef CBA_CONFIG_HPP
#define CBA_CONFIG_HPP

#include <filesystem>
#include <string>

#include "cba/chebmath.hpp"
#include "cba/fuzzy.hpp"
#include "cba/protocol.hpp"

namespace cba {

/// Operator configuration, loadable from a flat key=value file. Keys:
/// p (lowercase hex), k, r, window_ms, bind (host:port), store, cred,
/// faithful_paper (0/1). Unknown keys are errors.
struct Config {
    cheb::Int p = cheb::default_prime();
    fuzzy::CodeParams code{};
    uint64_t window_ms = protocol::kDefaultWindowMs;
    std::string bind_host = "127.0.0.1";
    uint16_t bind_port = 7457;
    std::string store_path = "cba.store";
    std::string cred_path = "cba.cred";
    bool faithful_paper = false;

    /// Throws std::invalid_argument on violations: p must be prime with at
    /// least 128 bits, k*r must fit in 16 bits, r odd and >= 3.
    void validate() const;

    protocol::ServerConfig server_config() const {
        return protocol::ServerConfig{p, code, window_ms, !faithful_paper};
    }

    static Config from_file(const std::filesystem::path& path);
    static Config parse(std::string_view text);
};

}  // namespace cba

#endif  // CBA_CONFIG_HPP

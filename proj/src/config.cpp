// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "cba/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cba {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

uint64_t parse_u64(std::string_view key, std::string_view value) {
    uint64_t out = 0;
    for (char c : value) {
        if (c < '0' || c > '9')
            throw std::invalid_argument("config: " + std::string(key) + " must be a number");
        out = out * 10 + static_cast<uint64_t>(c - '0');
    }
    if (value.empty()) throw std::invalid_argument("config: empty value for " + std::string(key));
    return out;
}

}  // namespace

void Config::validate() const {
    code.validate();
    if (p <= 3 || msb(p) + 1 < 128)
        throw std::invalid_argument("config: p must have at least 128 bits");
    if (!cheb::is_probable_prime(p)) throw std::invalid_argument("config: p is not prime");
    if (window_ms == 0) throw std::invalid_argument("config: window_ms must be positive");
}

Config Config::parse(std::string_view text) {
    Config cfg;
    size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key=value");
        std::string key{trim(line.substr(0, eq))};
        std::string value{trim(line.substr(eq + 1))};

        if (key == "p") {
            cfg.p = cheb::from_hex(value);
        } else if (key == "k") {
            cfg.code.k = static_cast<uint16_t>(parse_u64(key, value));
        } else if (key == "r") {
            cfg.code.r = static_cast<uint8_t>(parse_u64(key, value));
        } else if (key == "window_ms") {
            cfg.window_ms = parse_u64(key, value);
        } else if (key == "bind") {
            size_t colon = value.rfind(':');
            if (colon == std::string::npos)
                throw std::invalid_argument("config: bind must be host:port");
            cfg.bind_host = value.substr(0, colon);
            cfg.bind_port = static_cast<uint16_t>(parse_u64(key, value.substr(colon + 1)));
        } else if (key == "store") {
            cfg.store_path = value;
        } else if (key == "cred") {
            cfg.cred_path = value;
        } else if (key == "faithful_paper") {
            cfg.faithful_paper = parse_u64(key, value) != 0;
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

Config Config::from_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse(buf.str());
}

}  // namespace cba

// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.
//
// cba — biometric remote authentication over Chebyshev-polynomial key
// agreement. Subcommands: serve, enroll, auth, eval, attack, genbio.
//
// Exit codes: 0 success, 1 protocol rejection, 2 usage/configuration error.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "cba/config.hpp"
#include "cba/eval.hpp"
#include "cba/hash.hpp"
#include "cba/netio.hpp"
#include "cba/store.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRejected = 1;
constexpr int kExitUsage = 2;

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop = true; }

cba::Bytes password_bytes(const std::string& flag_value) {
    std::string pw = flag_value;
    if (pw.empty()) {
        if (const char* env = std::getenv("CBA_PASSWORD")) pw = env;
    }
    if (pw.empty())
        throw CLI::ValidationError("--password", "password required (flag or CBA_PASSWORD)");
    return cba::Bytes(pw.begin(), pw.end());
}

// Biometric file: N bits as hex text, or N/8 raw bytes.
cba::BitVec read_biometric(const std::string& path, size_t n_bits) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CLI::ValidationError("--bio", "cannot read " + path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    std::string stripped;
    stripped.reserve(data.size());
    for (char c : data)
        if (!std::isspace(static_cast<unsigned char>(c))) stripped.push_back(c);

    bool all_hex = !stripped.empty();
    for (char c : stripped)
        if (cba::hex_nibble(c) < 0) all_hex = false;

    size_t hex_len = 2 * ((n_bits + 7) / 8);
    if (all_hex && stripped.size() == hex_len) return cba::BitVec::from_hex(stripped, n_bits);
    if (data.size() == (n_bits + 7) / 8)
        return cba::BitVec::from_bytes(
            std::span(reinterpret_cast<const uint8_t*>(data.data()), data.size()), n_bits);
    throw CLI::ValidationError(
        "--bio", path + ": expected " + std::to_string(hex_len) + " hex chars or " +
                     std::to_string((n_bits + 7) / 8) + " raw bytes for N=" +
                     std::to_string(n_bits));
}

struct CommonOpts {
    std::string config_path;
    std::string store_path;
    std::string cred_path;
    bool faithful_paper = false;

    cba::Config load() const {
        cba::Config cfg;
        if (!config_path.empty()) cfg = cba::Config::from_file(config_path);
        if (!store_path.empty()) cfg.store_path = store_path;
        if (!cred_path.empty()) cfg.cred_path = cred_path;
        if (faithful_paper) cfg.faithful_paper = true;
        cfg.validate();
        return cfg;
    }
};

int cmd_serve(const CommonOpts& common, bool trusted_channel) {
    cba::Config cfg = common.load();
    cba::Store store(cfg.store_path, cfg.p, cfg.code);
    if (auto note = store.integrity_note())
        std::cerr << "[cba-server] store warning: " << *note << "\n";

    cba::SystemRng rng;
    cba::netio::SystemClock clock;
    cba::netio::ServeConfig serve_cfg;
    serve_cfg.host = cfg.bind_host;
    serve_cfg.port = cfg.bind_port;
    serve_cfg.protocol = cfg.server_config();
    serve_cfg.trusted_channel = trusted_channel;

    cba::netio::Server server(serve_cfg, store, rng, clock);
    server.start();
    std::cout << "listening on " << cfg.bind_host << ":" << server.port()
              << (trusted_channel ? " (trusted-channel enrollment enabled)" : "") << "\n";
    std::cout << "store: " << cfg.store_path << " (" << store.size() << " records)\n";
    std::cout.flush();

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop && server.running()) {
        timespec ts{0, 100'000'000};
        nanosleep(&ts, nullptr);
    }
    server.stop();
    std::cout << "server stopped\n";
    return kExitOk;
}

int cmd_enroll(const CommonOpts& common, const std::string& bio_path,
               const std::string& password) {
    cba::Config cfg = common.load();
    cba::Bytes pw = password_bytes(password);
    cba::BitVec b_t = read_biometric(bio_path, cfg.code.n_bits());

    cba::SystemRng rng;
    auto cred = cba::netio::enroll_over_tcp(cfg.bind_host, cfg.bind_port, b_t, pw, cfg.code, rng);
    if (!cred) {
        std::cerr << "enrollment refused by server (is it running with --trusted-channel?)\n";
        return kExitRejected;
    }
    cba::save_credential(cfg.cred_path, *cred);
    std::cout << "enrolled; credential written to " << cfg.cred_path << "\n";
    std::cout << "credential handle " << cba::to_hex(cred->o1).substr(0, 16) << "\n";
    return kExitOk;
}

int cmd_auth(const CommonOpts& common, const std::string& bio_path, const std::string& password) {
    cba::Config cfg = common.load();
    cba::Bytes pw = password_bytes(password);
    cba::protocol::ClientCredential cred = cba::load_credential(cfg.cred_path);
    cba::BitVec b = read_biometric(bio_path, cred.code.n_bits());

    cba::SystemRng rng;
    cba::netio::SystemClock clock;
    auto result = cba::netio::auth_over_tcp(cfg.bind_host, cfg.bind_port, cred, b, pw, rng,
                                            clock, cfg.window_ms);

    if (result.key) {
        std::cout << "authenticated; session-key fingerprint " << cba::fingerprint(result.key->key)
                  << "\n";
        return kExitOk;
    }
    if (result.local_reject) {
        std::cerr << "rejected client-side: " << cba::protocol::to_string(*result.local_reject)
                  << "\n";
        return kExitRejected;
    }
    std::cerr << "rejected by server\n";
    return kExitRejected;
}

int cmd_eval(const CommonOpts& common, size_t trials, unsigned noise, uint64_t seed) {
    cba::Config cfg = common.load();
    cba::eval::EvalParams params;
    params.server = cfg.server_config();
    params.trials = trials;
    params.genuine_noise = noise;
    params.seed = seed;
    if (noise > cfg.code.r)
        throw CLI::ValidationError("--noise", "cannot flip more bits than a block holds");

    cba::eval::EvalResult result = cba::eval::run_eval(params);
    std::cout << result.table();
    return kExitOk;
}

int cmd_attack(const CommonOpts& common, const std::string& scenario, uint64_t seed) {
    cba::Config cfg = common.load();
    const auto& names = cba::netio::scenario_names();
    if (std::find(names.begin(), names.end(), scenario) == names.end()) {
        std::ostringstream known;
        for (const auto& n : names) known << " " << n;
        throw CLI::ValidationError("--scenario", "unknown scenario '" + scenario +
                                                     "'; known:" + known.str());
    }

    cba::netio::ScenarioReport report =
        cba::netio::run_scenario(scenario, cfg.server_config(), seed);
    std::cout << "scenario " << report.name << (cfg.faithful_paper ? " (faithful-paper mode)" : "")
              << ", seed " << seed << "\n";
    std::cout << report.text;
    std::cout << (report.pass ? "PASS" : "FAIL") << "\n";
    return report.pass ? kExitOk : kExitRejected;
}

int cmd_genbio(const CommonOpts& common, const std::string& out_path, const std::string& from_path,
               unsigned noise, uint64_t seed, bool seeded) {
    cba::Config cfg = common.load();
    size_t n_bits = cfg.code.n_bits();

    std::unique_ptr<cba::Rng> rng;
    if (seeded)
        rng = std::make_unique<cba::SeededRng>(seed);
    else
        rng = std::make_unique<cba::SystemRng>();

    cba::BitVec vec;
    if (from_path.empty()) {
        vec = cba::BitVec::random(n_bits, *rng);
        if (noise) throw CLI::ValidationError("--noise", "--noise requires --from");
    } else {
        vec = read_biometric(from_path, n_bits);
        if (noise > cfg.code.r)
            throw CLI::ValidationError("--noise", "cannot flip more bits than a block holds");
        if (noise) vec = cba::fuzzy::add_block_noise(vec, cfg.code, noise, *rng);
    }

    std::ofstream f(out_path, std::ios::trunc);
    if (!f) throw CLI::ValidationError("--out", "cannot write " + out_path);
    f << vec.to_hex() << "\n";
    std::cout << "wrote " << n_bits << "-bit vector to " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"biometric remote authentication with Chebyshev key agreement"};
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--config", common.config_path, "flat key=value configuration file");
    app.add_option("--store", common.store_path, "server enrollment database path");
    app.add_option("--cred", common.cred_path, "client credential file path");
    app.add_flag("--faithful-paper", common.faithful_paper,
                 "disable the duplicate-M1 replay cache (timestamp checks only)");

    auto* serve = app.add_subcommand("serve", "run the authentication server");
    bool trusted_channel = false;
    serve->add_flag("--trusted-channel", trusted_channel,
                    "accept enrollment over the wire (operator acknowledges the transport "
                    "is trusted)");

    std::string bio_path, password;
    auto* enroll = app.add_subcommand("enroll", "enroll a biometric against the server");
    enroll->add_option("--bio", bio_path, "biometric vector file (hex or raw)")->required();
    enroll->add_option("--password", password, "password (or env CBA_PASSWORD)");

    auto* auth = app.add_subcommand("auth", "authenticate and print the session-key fingerprint");
    auth->add_option("--bio", bio_path, "biometric vector file (hex or raw)")->required();
    auth->add_option("--password", password, "password (or env CBA_PASSWORD)");

    size_t trials = 10'000;
    unsigned noise = 0;
    uint64_t seed = 1;
    auto* eval = app.add_subcommand("eval", "synthetic FAR/FRR evaluation");
    eval->add_option("--trials", trials, "attempts per group")->check(CLI::PositiveNumber);
    eval->add_option("--noise", noise, "flips per block for genuine attempts");
    eval->add_option("--seed", seed, "deterministic rng seed");

    std::string scenario;
    auto* attack = app.add_subcommand("attack", "run an adversarial-channel scenario");
    attack->add_option("--scenario", scenario, "replay-stale | replay-in-window | tamper-sweep | "
                                               "anonymity-scan | template-scan")
        ->required();
    attack->add_option("--seed", seed, "deterministic rng seed");

    std::string out_path, from_path;
    auto* genbio = app.add_subcommand("genbio", "generate or perturb a biometric vector file");
    genbio->add_option("--out", out_path, "output file")->required();
    genbio->add_option("--from", from_path, "existing vector to copy");
    genbio->add_option("--noise", noise, "flips per block applied to --from");
    auto* seed_opt = genbio->add_option("--seed", seed, "deterministic rng seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(serve)) return cmd_serve(common, trusted_channel);
        if (app.got_subcommand(enroll)) return cmd_enroll(common, bio_path, password);
        if (app.got_subcommand(auth)) return cmd_auth(common, bio_path, password);
        if (app.got_subcommand(eval)) return cmd_eval(common, trials, noise, seed);
        if (app.got_subcommand(attack)) return cmd_attack(common, scenario, seed);
        if (app.got_subcommand(genbio))
            return cmd_genbio(common, out_path, from_path, noise, seed, seed_opt->count() > 0);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const cba::StoreError& e) {
        std::cerr << "store error: " << e.what() << "\n";
        return kExitRejected;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRejected;
    }
    return kExitUsage;
}

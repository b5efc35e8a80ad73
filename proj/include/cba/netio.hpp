// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#ifndef CBA_NETIO_HPP
#define CBA_NETIO_HPP

#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "cba/protocol.hpp"
#include "cba/store.hpp"
#include "cba/wire.hpp"

namespace cba::netio {

// ---------------------------------------------------------------------------
// Time. Protocol code receives timestamps, never reads a clock itself, so the
// attack harness and tests drive freshness checks without real waiting.
// ---------------------------------------------------------------------------

class Clock {
public:
    virtual ~Clock() = default;
    virtual uint64_t now_ms() = 0;
};

class SystemClock final : public Clock {
public:
    uint64_t now_ms() override;
};

class SimClock final : public Clock {
public:
    explicit SimClock(uint64_t start_ms = 1'700'000'000'000ULL) : t_(start_ms) {}
    uint64_t now_ms() override { return t_; }
    void advance(uint64_t ms) { t_ += ms; }

private:
    uint64_t t_;
};

// ---------------------------------------------------------------------------
// Framed TCP connection
// ---------------------------------------------------------------------------

class Conn {
public:
    explicit Conn(int fd) : fd_(fd) {}
    ~Conn();
    Conn(Conn&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    Conn& operator=(Conn&&) = delete;
    Conn(const Conn&) = delete;

    /// Reads one complete frame. Returns false on clean EOF before any byte;
    /// throws wire::FramingError on partial frames, oversized declarations,
    /// or timeout.
    bool read_frame(Bytes& frame);
    void write_frame(std::span<const uint8_t> frame);
    void set_timeout_ms(uint64_t ms);
    void shutdown();
    int fd() const { return fd_; }

private:
    int fd_;
};

Conn connect_tcp(const std::string& host, uint16_t port);

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

struct ServeConfig {
    std::string host = "127.0.0.1";
    uint16_t port = 7457;  // 0 picks an ephemeral port
    protocol::ServerConfig protocol;
    bool trusted_channel = false;  // accept EnrollRequest over the wire
    std::function<void(const std::string&)> log;  // default: stderr
};

/// Accepts connections and runs the protocol flows; one thread per
/// connection, sessions fully independent. Per-session socket timeout is
/// twice the freshness window.
class Server {
public:
    Server(ServeConfig cfg, Store& store, Rng& rng, Clock& clock);
    ~Server();

    void start();
    void stop();
    bool running() const { return running_; }
    uint16_t port() const { return bound_port_; }

private:
    void accept_loop();
    void handle_connection(Conn& conn);
    void log(const std::string& line);

    ServeConfig cfg_;
    protocol::AuthServer auth_;
    Rng& rng_;
    Clock& clock_;
    int listen_fd_ = -1;
    uint16_t bound_port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex conn_mu_;
    std::unordered_set<int> live_fds_;
    std::vector<std::thread> workers_;
};

// ---------------------------------------------------------------------------
// Client helpers (shared by the CLI and tests)
// ---------------------------------------------------------------------------

/// Enroll over the wire. Returns nullopt when the server answers Failure
/// (for instance when it runs without --trusted-channel).
std::optional<protocol::ClientCredential> enroll_over_tcp(const std::string& host, uint16_t port,
                                                          const BitVec& b_t,
                                                          std::span<const uint8_t> pw,
                                                          const fuzzy::CodeParams& code, Rng& rng,
                                                          uint64_t io_timeout_ms = 10'000);

struct AuthResult {
    std::optional<protocol::SessionKey> key;           // set on success
    std::optional<protocol::Reject> local_reject;      // client-side check fired
    bool server_failure = false;                       // uniform Failure received
};

AuthResult auth_over_tcp(const std::string& host, uint16_t port,
                         const protocol::ClientCredential& cred, const BitVec& b,
                         std::span<const uint8_t> pw, Rng& rng, Clock& clock,
                         uint64_t window_ms = protocol::kDefaultWindowMs,
                         uint64_t io_timeout_ms = 10'000);

// ---------------------------------------------------------------------------
// Adversarial channel. Runs honest client and server endpoints in-process
// with every scripted message crossing an attacker-controlled hop, making
// the security claims executable without real sockets or waiting.
// ---------------------------------------------------------------------------

enum class ActionKind : uint8_t { Pass, Drop, Replay, Tamper, Delay };

struct Action {
    ActionKind kind = ActionKind::Pass;
    size_t replay_index = 0;  // Replay: recorded frame to deliver
    size_t offset = 0;        // Tamper: byte offset within the frame
    uint8_t mask = 0x01;      // Tamper: XOR mask, nonzero
    uint64_t ms = 0;          // Delay: clock advance before delivery

    static Action pass() { return {}; }
    static Action drop() { return {ActionKind::Drop}; }
    static Action replay(size_t index) { return {ActionKind::Replay, index}; }
    static Action tamper(size_t offset, uint8_t mask) {
        return {ActionKind::Tamper, 0, offset, mask};
    }
    static Action delay(uint64_t ms) { return {ActionKind::Delay, 0, 0, 0x01, ms}; }
};

/// One action per intercepted message, in channel order; missing entries act
/// as Pass. Actions beyond the organic message count run as
/// adversary-initiated slots: Delay advances time, Replay injects a recorded
/// frame at its original destination.
struct AdversaryScript {
    std::vector<Action> actions;

    Action at(size_t slot) const { return slot < actions.size() ? actions[slot] : Action{}; }
};

/// Which flow crosses the adversary. Enroll: enrollment messages are
/// intercepted, then an honest authentication measures the damage. Auth:
/// enrollment is out-of-band, the three authentication messages are
/// intercepted.
enum class Scenario { Enroll, Auth };

struct TranscriptEntry {
    size_t slot = 0;
    std::string label;   // message name or injection note
    Bytes sent;          // frame as produced (empty for pure-delay slots)
    Bytes delivered;     // frame as delivered (empty when dropped)
    ActionKind action = ActionKind::Pass;
};

/// Secret material of the run, for the anonymity / template scans. These
/// values must never appear as substrings of any delivered frame.
struct RunSecrets {
    std::array<uint8_t, 16> id{};
    Bytes b_t;       // raw biometric
    Digest bio_key{};  // K
    Digest x_s{};      // ser32
    Digest r_c{};
    Digest r_s{};
    bool r_s_known = false;
};

struct AttackOutcome {
    bool completed = false;   // both sides derived byte-equal session keys
    std::optional<protocol::Reject> reject;  // which check fired, when known
    std::string detail;       // stage description, e.g. "server verify_request"
    std::vector<std::string> injections;  // one outcome line per injected frame
};

struct AttackReport {
    std::vector<TranscriptEntry> transcript;
    AttackOutcome outcome;
    RunSecrets secrets;

    Bytes transcript_bytes() const;  // all delivered frames concatenated
};

struct HarnessConfig {
    protocol::ServerConfig server;
    unsigned auth_noise_flips = 0;  // per-block flips applied to the auth reading
    Store* store = nullptr;         // optional external store (template-scan)
};

AttackReport run_attack(const AdversaryScript& script, Scenario scenario,
                        const HarnessConfig& cfg, Rng& rng, SimClock& clock);

/// Named attack scenario drivers behind `cba attack`.
struct ScenarioReport {
    std::string name;
    bool pass = false;
    std::string text;  // full human-readable report
};

ScenarioReport run_scenario(const std::string& name, const protocol::ServerConfig& cfg,
                            uint64_t seed);

const std::vector<std::string>& scenario_names();

}  // namespace cba::netio

#endif  // CBA_NETIO_HPP

// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <iostream>

#include "cba/hash.hpp"
#include "cba/netio.hpp"

namespace cba::netio {

namespace {

constexpr uint32_t kMaxBody = 1 << 20;  // far above any fixed layout; caps hostile lengths

void throw_errno(const char* what) {
    throw wire::FramingError(std::string(what) + ": " + std::strerror(errno));
}

// Reads exactly n bytes. Returns false on EOF at a message boundary
// (allow_eof), throws mid-frame.
bool read_exact(int fd, uint8_t* buf, size_t n, bool allow_eof) {
    size_t off = 0;
    while (off < n) {
        ssize_t got = ::recv(fd, buf + off, n - off, 0);
        if (got == 0) {
            if (off == 0 && allow_eof) return false;
            throw wire::FramingError("connection closed mid-frame");
        }
        if (got < 0) {
            if (errno == EINTR) continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK)
                throw wire::FramingError("read timeout");
            throw_errno("read");
        }
        off += static_cast<size_t>(got);
    }
    return true;
}

}  // namespace

uint64_t SystemClock::now_ms() {
    using namespace std::chrono;
    return static_cast<uint64_t>(
        duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

Conn::~Conn() {
    if (fd_ >= 0) ::close(fd_);
}

bool Conn::read_frame(Bytes& frame) {
    uint8_t header[5];
    if (!read_exact(fd_, header, 5, /*allow_eof=*/true)) return false;
    uint32_t body_len = (uint32_t(header[0]) << 24) | (uint32_t(header[1]) << 16) |
                        (uint32_t(header[2]) << 8) | uint32_t(header[3]);
    if (body_len > kMaxBody) throw wire::FramingError("declared body length too large");
    frame.assign(header, header + 5);
    frame.resize(5 + body_len);
    if (body_len > 0) read_exact(fd_, frame.data() + 5, body_len, /*allow_eof=*/false);
    return true;
}

void Conn::write_frame(std::span<const uint8_t> frame) {
    size_t off = 0;
    while (off < frame.size()) {
        ssize_t sent = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
        if (sent < 0) {
            if (errno == EINTR) continue;
            throw_errno("write");
        }
        off += static_cast<size_t>(sent);
    }
}

void Conn::set_timeout_ms(uint64_t ms) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(ms / 1000);
    tv.tv_usec = static_cast<suseconds_t>((ms % 1000) * 1000);
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

void Conn::shutdown() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Conn connect_tcp(const std::string& host, uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw_errno("socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw wire::FramingError("invalid address: " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        int saved = errno;
        ::close(fd);
        errno = saved;
        throw_errno("connect");
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return Conn(fd);
}

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

Server::Server(ServeConfig cfg, Store& store, Rng& rng, Clock& clock)
    : cfg_(std::move(cfg)), auth_(cfg_.protocol, store, rng), rng_(rng), clock_(clock) {}

Server::~Server() { stop(); }

void Server::log(const std::string& line) {
    if (cfg_.log)
        cfg_.log(line);
    else
        std::cerr << "[cba-server] " << line << "\n";
}

void Server::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw_errno("socket");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    auto fail = [&](const char* what) {
        int saved = errno;
        ::close(listen_fd_);
        listen_fd_ = -1;
        errno = saved;
        throw_errno(what);
    };

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(cfg_.port);
    if (::inet_pton(AF_INET, cfg_.host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw wire::FramingError("invalid bind address: " + cfg_.host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) fail("bind");
    if (::listen(listen_fd_, 16) != 0) fail("listen");

    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_port_ = ntohs(addr.sin_port);

    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
    if (!running_.exchange(false)) return;
    // shutdown() unblocks accept(); the descriptor itself stays valid until
    // the accept thread has been joined.
    ::shutdown(listen_fd_, SHUT_RDWR);
    {
        std::lock_guard lock(conn_mu_);
        for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    for (auto& w : workers_)
        if (w.joinable()) w.join();
    workers_.clear();
    ::close(listen_fd_);
    listen_fd_ = -1;
}

void Server::accept_loop() {
    while (running_) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            break;  // listener closed
        }
        std::lock_guard lock(conn_mu_);
        live_fds_.insert(fd);
        workers_.emplace_back([this, fd] {
            Conn conn(fd);
            handle_connection(conn);
            // Deregister before the descriptor is closed so stop() never
            // touches a recycled fd.
            std::lock_guard l(conn_mu_);
            live_fds_.erase(fd);
        });
    }
}

void Server::handle_connection(Conn& conn) {
    const auto& code = cfg_.protocol.code;
    conn.set_timeout_ms(2 * cfg_.protocol.window_ms);

    auto send_failure_and_close = [&] {
        try {
            conn.write_frame(wire::encode(wire::Failure{}, code));
        } catch (const wire::FramingError&) {
        }
    };

    std::optional<protocol::Int> session_m1;
    Bytes frame;
    try {
        while (conn.read_frame(frame)) {
            wire::Message msg = wire::decode(frame, code);

            if (auto* enroll = std::get_if<protocol::EnrollRequest>(&msg)) {
                if (!cfg_.trusted_channel) {
                    log("enrollment refused: --trusted-channel not set");
                    send_failure_and_close();
                    return;
                }
                auto result = auth_.enroll(*enroll);
                if (auto* reject = std::get_if<protocol::Reject>(&result)) {
                    log(std::string("enroll rejected: ") + protocol::to_string(*reject));
                    send_failure_and_close();
                    return;
                }
                conn.write_frame(
                    wire::encode(std::get<protocol::EnrollResponse>(result), code));
                continue;
            }

            if (auto* req = std::get_if<protocol::AuthRequest>(&msg)) {
                auto result = auth_.verify_request(*req, clock_.now_ms());
                if (auto* reject = std::get_if<protocol::Reject>(&result)) {
                    log(std::string("auth rejected: ") + protocol::to_string(*reject));
                    send_failure_and_close();
                    return;
                }
                session_m1 = req->m1;
                conn.write_frame(
                    wire::encode(std::get<protocol::AuthChallenge>(result), code));
                continue;
            }

            if (auto* confirm = std::get_if<protocol::AuthConfirm>(&msg)) {
                if (!session_m1) {
                    log("auth-confirm without a preceding request");
                    send_failure_and_close();
                    return;
                }
                auto result = auth_.finish(*session_m1, *confirm, clock_.now_ms());
                if (auto* reject = std::get_if<protocol::Reject>(&result)) {
                    log(std::string("auth rejected: ") + protocol::to_string(*reject));
                    send_failure_and_close();
                    return;
                }
                auto key = std::get<protocol::SessionKey>(result);
                log("session established, key fingerprint " + fingerprint(key.key));
                return;  // clean close acknowledges the confirm
            }

            // Server-bound connections have no business sending the
            // remaining types.
            log("unexpected message type on server connection");
            return;
        }
    } catch (const wire::FramingError& e) {
        log(std::string("connection error: ") + e.what());
    } catch (const StoreError& e) {
        log(std::string("store error: ") + e.what());
        send_failure_and_close();
    } catch (const std::exception& e) {
        log(std::string("protocol error: ") + e.what());
        send_failure_and_close();
    }
}

// ---------------------------------------------------------------------------
// Client helpers
// ---------------------------------------------------------------------------

std::optional<protocol::ClientCredential> enroll_over_tcp(const std::string& host, uint16_t port,
                                                          const BitVec& b_t,
                                                          std::span<const uint8_t> pw,
                                                          const fuzzy::CodeParams& code, Rng& rng,
                                                          uint64_t io_timeout_ms) {
    protocol::EnrollStart start = protocol::enroll_client(b_t, pw, code, rng);

    Conn conn = connect_tcp(host, port);
    conn.set_timeout_ms(io_timeout_ms);
    conn.write_frame(wire::encode(start.request, code));

    Bytes frame;
    if (!conn.read_frame(frame)) throw wire::FramingError("server closed during enrollment");
    wire::Message msg = wire::decode(frame, code);
    if (std::holds_alternative<wire::Failure>(msg)) return std::nullopt;
    auto& resp = std::get<protocol::EnrollResponse>(msg);
    return protocol::make_credential(start, resp, code);
}

AuthResult auth_over_tcp(const std::string& host, uint16_t port,
                         const protocol::ClientCredential& cred, const BitVec& b,
                         std::span<const uint8_t> pw, Rng& rng, Clock& clock,
                         uint64_t window_ms, uint64_t io_timeout_ms) {
    AuthResult result;

    auto [request, state] = protocol::auth_client_start(cred, b, pw, clock.now_ms(), rng);

    Conn conn = connect_tcp(host, port);
    conn.set_timeout_ms(io_timeout_ms);
    conn.write_frame(wire::encode(request, cred.code));

    Bytes frame;
    if (!conn.read_frame(frame)) throw wire::FramingError("server closed during authentication");
    wire::Message msg = wire::decode(frame, cred.code);
    if (std::holds_alternative<wire::Failure>(msg)) {
        result.server_failure = true;
        return result;
    }

    auto& challenge = std::get<protocol::AuthChallenge>(msg);
    auto finish = protocol::auth_client_finish(challenge, state, cred, clock.now_ms(),
                                               window_ms);
    if (auto* reject = std::get_if<protocol::Reject>(&finish)) {
        result.local_reject = *reject;
        return result;
    }

    auto& done = std::get<protocol::ClientFinish>(finish);
    conn.write_frame(wire::encode(done.confirm, cred.code));

    // Clean EOF acknowledges acceptance; a Failure frame reports rejection.
    if (!conn.read_frame(frame)) {
        result.key = done.key;
        return result;
    }
    msg = wire::decode(frame, cred.code);
    if (std::holds_alternative<wire::Failure>(msg)) {
        result.server_failure = true;
        return result;
    }
    throw wire::FramingError("unexpected reply to auth confirmation");
}

}  // namespace cba::netio

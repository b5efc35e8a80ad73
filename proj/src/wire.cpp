// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "cba/wire.hpp"

namespace cba::wire {

using protocol::AuthChallenge;
using protocol::AuthConfirm;
using protocol::AuthRequest;
using protocol::EnrollRequest;
using protocol::EnrollResponse;

namespace {

struct Reader {
    std::span<const uint8_t> in;
    size_t off = 0;

    std::span<const uint8_t> take(size_t n) {
        auto out = in.subspan(off, n);
        off += n;
        return out;
    }

    Digest take32() {
        Digest d;
        auto s = take(32);
        std::copy(s.begin(), s.end(), d.begin());
        return d;
    }

    cheb::Int take_int() { return cheb::deser32(take(32)); }
    uint64_t take_ts() { return read_be64(take(8)); }

    // Rejects non-canonical padding so a tampered pad bit cannot decode back
    // to the original vector.
    BitVec take_bits(size_t nbits) {
        auto s = take((nbits + 7) / 8);
        if (nbits % 8) {
            uint8_t pad_mask = static_cast<uint8_t>((1u << (8 - nbits % 8)) - 1);
            if (s.back() & pad_mask) throw FramingError("wire: non-canonical bit padding");
        }
        return BitVec::from_bytes(s, nbits);
    }
};

}  // namespace

MsgType type_of(const Message& msg) {
    return static_cast<MsgType>(msg.index() + 1);
}

const char* type_name(MsgType t) {
    switch (t) {
        case MsgType::EnrollRequest: return "enroll-request";
        case MsgType::EnrollResponse: return "enroll-response";
        case MsgType::AuthRequest: return "auth-request";
        case MsgType::AuthChallenge: return "auth-challenge";
        case MsgType::AuthConfirm: return "auth-confirm";
        case MsgType::Failure: return "failure";
    }
    return "unknown";
}

size_t body_size(MsgType t, const fuzzy::CodeParams& code) {
    size_t bio = (code.n_bits() + 7) / 8;
    switch (t) {
        case MsgType::EnrollRequest: return bio + 32;
        case MsgType::EnrollResponse: return 5 * 32;
        case MsgType::AuthRequest: return 2 * 32 + bio + 32 + 32 + 8;
        case MsgType::AuthChallenge: return 32 + 32 + 8;
        case MsgType::AuthConfirm: return 32 + 8;
        case MsgType::Failure: return 0;
    }
    throw FramingError("wire: unknown message type");
}

Bytes encode(const Message& msg, const fuzzy::CodeParams& code) {
    Bytes body;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, EnrollRequest>) {
                append(body, m.bb_t.bytes());
                append(body, m.tag);
            } else if constexpr (std::is_same_v<T, EnrollResponse>) {
                append(body, m.o1);
                append(body, m.o2);
                append(body, cheb::ser32(m.s));
                append(body, cheb::ser32(m.spub));
                append(body, cheb::ser32(m.p));
            } else if constexpr (std::is_same_v<T, AuthRequest>) {
                append(body, m.o1);
                append(body, m.o2);
                append(body, m.bb.bytes());
                append(body, cheb::ser32(m.m1));
                append(body, m.alpha);
                append(body, be64(m.t1));
            } else if constexpr (std::is_same_v<T, AuthChallenge>) {
                append(body, cheb::ser32(m.m3));
                append(body, m.beta);
                append(body, be64(m.t2));
            } else if constexpr (std::is_same_v<T, AuthConfirm>) {
                append(body, m.gamma);
                append(body, be64(m.t3));
            }
            // Failure: empty body
        },
        msg);

    MsgType t = type_of(msg);
    if (body.size() != body_size(t, code))
        throw FramingError("wire: message does not match fixed layout");

    Bytes frame;
    frame.reserve(5 + body.size());
    uint32_t len = static_cast<uint32_t>(body.size());
    frame.push_back(static_cast<uint8_t>(len >> 24));
    frame.push_back(static_cast<uint8_t>(len >> 16));
    frame.push_back(static_cast<uint8_t>(len >> 8));
    frame.push_back(static_cast<uint8_t>(len));
    frame.push_back(static_cast<uint8_t>(t));
    append(frame, body);
    return frame;
}

Message decode(std::span<const uint8_t> frame, const fuzzy::CodeParams& code) {
    if (frame.size() < 5) throw FramingError("wire: frame shorter than header");
    uint32_t declared = (uint32_t(frame[0]) << 24) | (uint32_t(frame[1]) << 16) |
                        (uint32_t(frame[2]) << 8) | uint32_t(frame[3]);
    uint8_t tag = frame[4];
    if (tag < 1 || tag > 6) throw FramingError("wire: unknown message tag");
    MsgType t = static_cast<MsgType>(tag);
    if (declared != body_size(t, code))
        throw FramingError("wire: declared length does not match type layout");
    if (frame.size() != 5 + declared)
        throw FramingError("wire: declared length does not match body");

    Reader rd{frame.subspan(5)};
    switch (t) {
        case MsgType::EnrollRequest: {
            EnrollRequest m;
            m.bb_t = rd.take_bits(code.n_bits());
            m.tag = rd.take32();
            return m;
        }
        case MsgType::EnrollResponse: {
            EnrollResponse m;
            m.o1 = rd.take32();
            m.o2 = rd.take32();
            m.s = rd.take_int();
            m.spub = rd.take_int();
            m.p = rd.take_int();
            return m;
        }
        case MsgType::AuthRequest: {
            AuthRequest m;
            m.o1 = rd.take32();
            m.o2 = rd.take32();
            m.bb = rd.take_bits(code.n_bits());
            m.m1 = rd.take_int();
            m.alpha = rd.take32();
            m.t1 = rd.take_ts();
            return m;
        }
        case MsgType::AuthChallenge: {
            AuthChallenge m;
            m.m3 = rd.take_int();
            m.beta = rd.take32();
            m.t2 = rd.take_ts();
            return m;
        }
        case MsgType::AuthConfirm: {
            AuthConfirm m;
            m.gamma = rd.take32();
            m.t3 = rd.take_ts();
            return m;
        }
        case MsgType::Failure:
            return Failure{};
    }
    throw FramingError("wire: unreachable");
}

}  // namespace cba::wire

// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#ifndef CBA_WIRE_HPP
#define CBA_WIRE_HPP

#include <span>
#include <variant>

#include "cba/protocol.hpp"

namespace cba::wire {

/// Failure carries no detail: the wire response is uniform across reject
/// reasons so an observer cannot distinguish which check fired.
struct Failure {
    bool operator==(const Failure&) const = default;
};

using Message = std::variant<protocol::EnrollRequest, protocol::EnrollResponse,
                             protocol::AuthRequest, protocol::AuthChallenge,
                             protocol::AuthConfirm, Failure>;

enum class MsgType : uint8_t {
    EnrollRequest = 1,
    EnrollResponse = 2,
    AuthRequest = 3,
    AuthChallenge = 4,
    AuthConfirm = 5,
    Failure = 6,
};

MsgType type_of(const Message& msg);
const char* type_name(MsgType t);

struct FramingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Frame: u32 big-endian body length, u8 type, body. All multi-byte
/// integers big-endian; field elements 32 bytes; timestamps 8 bytes.
Bytes encode(const Message& msg, const fuzzy::CodeParams& code);

/// Throws FramingError on short frames, unknown tags, or a body length that
/// does not match the (type, CodeParams) fixed width.
Message decode(std::span<const uint8_t> frame, const fuzzy::CodeParams& code);

/// Exact body length for a type under the given code parameters.
size_t body_size(MsgType t, const fuzzy::CodeParams& code);

}  // namespace cba::wire

#endif  // CBA_WIRE_HPP

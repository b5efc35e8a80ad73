// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "cba/rng.hpp"

#include <sodium/core.h>
#include <sodium/randombytes.h>

#include <mutex>
#include <stdexcept>

namespace cba {

void SystemRng::fill(std::span<uint8_t> out) {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
    });
    randombytes_buf(out.data(), out.size());
}

}  // namespace cba

// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "cba/fuzzy.hpp"

#include <algorithm>
#include <stdexcept>

#include "cba/hash.hpp"

namespace cba::fuzzy {

void CodeParams::validate() const {
    if (k == 0) throw std::invalid_argument("CodeParams: k must be >= 1");
    if (r < 3 || r % 2 == 0) throw std::invalid_argument("CodeParams: r must be odd and >= 3");
    if (static_cast<uint32_t>(k) * r > 65535)
        throw std::invalid_argument("CodeParams: k*r must fit in 16 bits");
}

Bytes HelperData::encode(const CodeParams& params) const {
    if (sketch.size() != params.n_bits())
        throw std::invalid_argument("HelperData: sketch length mismatch");
    Bytes out;
    out.reserve(3 + sketch.bytes().size() + seed.size());
    out.push_back(static_cast<uint8_t>(params.k >> 8));
    out.push_back(static_cast<uint8_t>(params.k & 0xff));
    out.push_back(params.r);
    append(out, sketch.bytes());
    append(out, seed);
    return out;
}

std::pair<HelperData, CodeParams> HelperData::decode(std::span<const uint8_t> in) {
    if (in.size() < 3) throw std::invalid_argument("HelperData: short encoding");
    CodeParams params;
    params.k = static_cast<uint16_t>((in[0] << 8) | in[1]);
    params.r = in[2];
    params.validate();
    size_t sketch_bytes = (params.n_bits() + 7) / 8;
    if (in.size() != 3 + sketch_bytes + 32)
        throw std::invalid_argument("HelperData: encoding length mismatch");
    HelperData hd;
    hd.sketch = BitVec::from_bytes(in.subspan(3, sketch_bytes), params.n_bits());
    std::copy_n(in.begin() + 3 + sketch_bytes, 32, hd.seed.begin());
    return {std::move(hd), params};
}

BitVec repeat_encode(const BitVec& msg, const CodeParams& params) {
    if (msg.size() != params.k) throw std::invalid_argument("repeat_encode: message length != k");
    BitVec out(params.n_bits());
    for (size_t i = 0; i < params.k; ++i) {
        if (!msg.get(i)) continue;
        for (unsigned j = 0; j < params.r; ++j) out.set(i * params.r + j, true);
    }
    return out;
}

BitVec majority_decode(const BitVec& codeword, const CodeParams& params) {
    if (codeword.size() != params.n_bits())
        throw std::invalid_argument("majority_decode: codeword length != k*r");
    BitVec msg(params.k);
    for (size_t i = 0; i < params.k; ++i) {
        unsigned ones = 0;
        for (unsigned j = 0; j < params.r; ++j) ones += codeword.get(i * params.r + j);
        msg.set(i, ones * 2 > params.r);
    }
    return msg;
}

BitVec ss_sketch_with_message(const BitVec& w, const BitVec& msg, const CodeParams& params) {
    if (w.size() != params.n_bits()) throw std::invalid_argument("ss_sketch: |w| != k*r");
    return w ^ repeat_encode(msg, params);
}

BitVec ss_sketch(const BitVec& w, const CodeParams& params, Rng& rng) {
    params.validate();
    return ss_sketch_with_message(w, BitVec::random(params.k, rng), params);
}

BitVec ss_recover(const BitVec& w_prime, const BitVec& sketch, const CodeParams& params) {
    if (w_prime.size() != params.n_bits() || sketch.size() != params.n_bits())
        throw std::invalid_argument("ss_recover: length mismatch");
    BitVec offset = w_prime ^ sketch;  // noisy codeword
    return repeat_encode(majority_decode(offset, params), params) ^ sketch;
}

namespace {

BioKey derive_key(const Digest& seed, const BitVec& w, std::span<const uint8_t> pw) {
    return BioKey{sha256({seed, w.bytes(), pw})};
}

}  // namespace

std::pair<BioKey, HelperData> fe_gen(const BitVec& w, std::span<const uint8_t> pw,
                                     const CodeParams& params, Rng& rng) {
    params.validate();
    if (pw.empty()) throw std::invalid_argument("fe_gen: empty password");
    if (w.size() != params.n_bits()) throw std::invalid_argument("fe_gen: |w| != k*r");
    HelperData hd;
    hd.sketch = ss_sketch(w, params, rng);
    hd.seed = rng.random32();
    return {derive_key(hd.seed, w, pw), std::move(hd)};
}

std::pair<BioKey, BitVec> fe_rep(const BitVec& w_prime, std::span<const uint8_t> pw,
                                 const HelperData& hd, const CodeParams& params) {
    params.validate();
    if (w_prime.size() != params.n_bits()) throw std::invalid_argument("fe_rep: |w'| != k*r");
    BitVec w = ss_recover(w_prime, hd.sketch, params);
    return {derive_key(hd.seed, w, pw), std::move(w)};
}

BitVec mask_expand(const BioKey& key, size_t n_bits) {
    if (n_bits == 0) throw std::invalid_argument("mask_expand: zero length");
    Bytes stream;
    stream.reserve((n_bits + 7) / 8 + 32);
    uint64_t counter = 0;
    while (stream.size() * 8 < n_bits) {
        Digest block = sha256({key.key, be64(counter)});
        append(stream, block);
        ++counter;
    }
    stream.resize((n_bits + 7) / 8);
    return BitVec::from_bytes(stream, n_bits);
}

BitVec add_block_noise(const BitVec& w, const CodeParams& params, unsigned flips, Rng& rng) {
    if (w.size() != params.n_bits()) throw std::invalid_argument("add_block_noise: length mismatch");
    if (flips > params.r) throw std::invalid_argument("add_block_noise: flips > r");
    BitVec out = w;
    std::array<size_t, 256> idx;
    for (size_t blk = 0; blk < params.k; ++blk) {
        for (unsigned j = 0; j < params.r; ++j) idx[j] = blk * params.r + j;
        // partial Fisher-Yates: choose `flips` distinct positions
        for (unsigned j = 0; j < flips; ++j) {
            size_t pick = j + rng.next_u64() % (params.r - j);
            std::swap(idx[j], idx[pick]);
            out.flip(idx[j]);
        }
    }
    return out;
}

}  // namespace cba::fuzzy

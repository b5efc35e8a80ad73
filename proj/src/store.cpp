// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "cba/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include "cba/hash.hpp"

namespace cba {

namespace {

constexpr char kStoreMagic[4] = {'C', 'B', 'A', '1'};
constexpr char kCredMagic[4] = {'C', 'B', 'C', '1'};
constexpr uint8_t kVersion = 0x01;
constexpr size_t kHeaderSize = 4 + 1 + 2 + 1 + 32;

std::string errno_msg(const char* what) {
    return std::string(what) + ": " + std::strerror(errno);
}

void write_all(int fd, std::span<const uint8_t> data) {
    size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw StoreError(errno_msg("store write"));
        }
        off += static_cast<size_t>(n);
    }
}

Bytes encode_header(const cheb::Int& p, const fuzzy::CodeParams& code) {
    Bytes out;
    out.reserve(kHeaderSize);
    out.insert(out.end(), kStoreMagic, kStoreMagic + 4);
    out.push_back(kVersion);
    out.push_back(static_cast<uint8_t>(code.k >> 8));
    out.push_back(static_cast<uint8_t>(code.k & 0xff));
    out.push_back(code.r);
    append(out, cheb::ser32(p));
    return out;
}

}  // namespace

size_t Store::record_size() const { return 16 + (code_.n_bits() + 7) / 8 + 32 + 32 + 32; }

Bytes Store::encode_record(const protocol::EnrollmentRecord& r, const fuzzy::CodeParams& code) {
    if (r.bb_t.size() != code.n_bits())
        throw StoreError("encode_record: template length mismatch");
    Bytes out;
    out.reserve(16 + r.bb_t.bytes().size() + 96);
    append(out, r.id);
    append(out, r.bb_t.bytes());
    append(out, cheb::ser32(r.x_s));
    append(out, cheb::ser32(r.s));
    append(out, r.o1);
    return out;
}

protocol::EnrollmentRecord Store::decode_record(std::span<const uint8_t> in,
                                                const fuzzy::CodeParams& code) {
    size_t bb_len = (code.n_bits() + 7) / 8;
    if (in.size() != 16 + bb_len + 96) throw StoreError("decode_record: length mismatch");
    protocol::EnrollmentRecord r;
    std::copy_n(in.begin(), 16, r.id.begin());
    r.bb_t = BitVec::from_bytes(in.subspan(16, bb_len), code.n_bits());
    r.x_s = cheb::deser32(in.subspan(16 + bb_len, 32));
    r.s = cheb::deser32(in.subspan(16 + bb_len + 32, 32));
    std::copy_n(in.begin() + 16 + bb_len + 64, 32, r.o1.begin());
    return r;
}

Store::Store(const cheb::Int& p, const fuzzy::CodeParams& code) : p_(p), code_(code) {
    code_.validate();
}

Store::Store(std::filesystem::path path, const cheb::Int& p, const fuzzy::CodeParams& code)
    : path_(std::move(path)), p_(p), code_(code) {
    code_.validate();
    bool existed = std::filesystem::exists(path_);
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT, 0600);
    if (fd_ < 0) throw StoreError(errno_msg("store open"));
    if (!existed || std::filesystem::file_size(path_) == 0) {
        Bytes header = encode_header(p_, code_);
        write_all(fd_, header);
        if (::fsync(fd_) != 0) throw StoreError(errno_msg("store fsync"));
    } else {
        load();
    }
}

Store::~Store() {
    if (fd_ >= 0) ::close(fd_);
}

void Store::load() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw StoreError("store load: cannot read " + path_.string());
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (data.size() < kHeaderSize) throw StoreError("store load: truncated header");
    if (std::memcmp(data.data(), kStoreMagic, 4) != 0)
        throw StoreError("store load: bad magic");
    if (data[4] != kVersion) throw StoreError("store load: unsupported version");
    uint16_t k = static_cast<uint16_t>((data[5] << 8) | data[6]);
    uint8_t r = data[7];
    if (k != code_.k || r != code_.r)
        throw StoreError("store load: code parameters do not match configuration");
    if (cheb::deser32(std::span(data).subspan(8, 32)) != p_)
        throw StoreError("store load: prime does not match configuration");

    size_t rs = record_size();
    size_t off = kHeaderSize;
    while (off + rs <= data.size()) {
        protocol::EnrollmentRecord rec = decode_record(std::span(data).subspan(off, rs), code_);
        if (rec.o1 != sha256({rec.bb_t.bytes(), rec.id}))
            throw StoreError("store load: integrity error at offset " + std::to_string(off));
        if (rec.s >= p_ || rec.x_s < 2 || rec.x_s >= cheb::degree_bound())
            throw StoreError("store load: integrity error at offset " + std::to_string(off));
        if (!index_.emplace(rec.o1, std::move(rec)).second)
            throw StoreError("store load: duplicate o1 at offset " + std::to_string(off));
        off += rs;
    }
    if (off != data.size()) {
        integrity_note_ = "partial record at offset " + std::to_string(off) +
                          "; prior records loaded";
        // Re-position append point at the last complete record.
        if (::ftruncate(fd_, static_cast<off_t>(off)) != 0)
            throw StoreError(errno_msg("store truncate"));
    }
    if (::lseek(fd_, 0, SEEK_END) < 0) throw StoreError(errno_msg("store seek"));
}

void Store::put(const protocol::EnrollmentRecord& record) {
    std::lock_guard lock(mu_);
    if (index_.contains(record.o1)) throw StoreConflict("store put: duplicate o1");
    if (fd_ >= 0) {
        Bytes encoded = encode_record(record, code_);
        write_all(fd_, encoded);
        if (::fsync(fd_) != 0) throw StoreError(errno_msg("store fsync"));
    }
    index_.emplace(record.o1, record);
}

std::optional<protocol::EnrollmentRecord> Store::get(const Digest& o1) const {
    std::lock_guard lock(mu_);
    auto it = index_.find(o1);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

size_t Store::size() const {
    std::lock_guard lock(mu_);
    return index_.size();
}

Bytes Store::file_bytes() const {
    if (path_.empty()) return {};
    std::ifstream in(path_, std::ios::binary);
    return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void save_credential(const std::filesystem::path& path, const protocol::ClientCredential& cred) {
    Bytes out;
    out.insert(out.end(), kCredMagic, kCredMagic + 4);
    out.push_back(kVersion);
    append(out, cred.o1);
    append(out, cred.o2);
    append(out, cheb::ser32(cred.s));
    append(out, cheb::ser32(cred.spub));
    append(out, cheb::ser32(cred.p));
    append(out, cred.hd.encode(cred.code));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw StoreError("cannot write credential file " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f.flush()) throw StoreError("credential write failed: " + path.string());
}

protocol::ClientCredential load_credential(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw StoreError("cannot read credential file " + path.string());
    Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (data.size() < 5 + 5 * 32) throw StoreError("credential file truncated");
    if (std::memcmp(data.data(), kCredMagic, 4) != 0)
        throw StoreError("credential file: bad magic");
    if (data[4] != kVersion) throw StoreError("credential file: unsupported version");

    protocol::ClientCredential cred;
    std::span<const uint8_t> s(data);
    std::copy_n(s.begin() + 5, 32, cred.o1.begin());
    std::copy_n(s.begin() + 37, 32, cred.o2.begin());
    cred.s = cheb::deser32(s.subspan(69, 32));
    cred.spub = cheb::deser32(s.subspan(101, 32));
    cred.p = cheb::deser32(s.subspan(133, 32));
    auto [hd, code] = fuzzy::HelperData::decode(s.subspan(165));
    cred.hd = std::move(hd);
    cred.code = code;
    cred.validate();
    return cred;
}

}  // namespace cba

// Copyright (c) the cba authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#ifndef CBA_STORE_HPP
#define CBA_STORE_HPP

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "cba/fuzzy.hpp"
#include "cba/protocol.hpp"

namespace cba {

struct StoreError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StoreConflict : StoreError {
    using StoreError::StoreError;
};

/// Append-only enrollment database: fixed-width binary records in a single
/// file, indexed in memory by o1 at load. Writes are flushed before the
/// enrollment response is acknowledged, so a record is durable once put()
/// returns. Single writer, any number of readers.
///
/// File layout (big-endian): magic "CBA1", version 0x01, u16 k, u8 r,
/// 32-byte p; then per record: 16-byte id, N/8-byte bb_t, 32-byte x_s,
/// 32-byte s, 32-byte o1.
class Store {
public:
    /// Opens or creates the file, validating header parameters against the
    /// given configuration. A truncated tail keeps prior records readable
    /// and is reported through integrity_note().
    Store(std::filesystem::path path, const cheb::Int& p, const fuzzy::CodeParams& code);

    /// Volatile store for simulations and tests; no file backing.
    Store(const cheb::Int& p, const fuzzy::CodeParams& code);

    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    /// Duplicate o1 -> StoreConflict; I/O failure -> StoreError, nothing
    /// persisted for this record.
    void put(const protocol::EnrollmentRecord& record);

    std::optional<protocol::EnrollmentRecord> get(const Digest& o1) const;

    size_t size() const;

    /// Set when the file carried a partial trailing record at load time;
    /// names the byte offset of the damage.
    std::optional<std::string> integrity_note() const { return integrity_note_; }

    const cheb::Int& prime() const { return p_; }
    const fuzzy::CodeParams& code() const { return code_; }

    /// Raw file bytes, for the template-scan harness. Empty in memory mode.
    Bytes file_bytes() const;

    static Bytes encode_record(const protocol::EnrollmentRecord& r, const fuzzy::CodeParams& code);
    static protocol::EnrollmentRecord decode_record(std::span<const uint8_t> in,
                                                    const fuzzy::CodeParams& code);

private:
    void load();
    size_t record_size() const;

    std::filesystem::path path_;  // empty in memory mode
    cheb::Int p_;
    fuzzy::CodeParams code_;
    int fd_ = -1;
    mutable std::mutex mu_;
    std::map<Digest, protocol::EnrollmentRecord> index_;
    std::optional<std::string> integrity_note_;
};

/// Client credential file: magic "CBC1", version 0x01, then o1, o2, s, spub,
/// p (32 bytes each), followed by the HelperData encoding.
void save_credential(const std::filesystem::path& path, const protocol::ClientCredential& cred);
protocol::ClientCredential load_credential(const std::filesystem::path& path);

}  // namespace cba

#endif  // CBA_STORE_HPP

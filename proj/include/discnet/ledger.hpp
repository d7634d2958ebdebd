#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "discnet/errors.hpp"
#include "discnet/sha256.hpp"

namespace discnet {

inline constexpr std::string_view kVerifiedVerdict = "VERIFIED: Blockchain integrity intact";
inline constexpr std::string_view kTamperBanner =
    "LOG TAMPERED. TRUST HAS BEEN BREACHED. BLOCKCHAIN FAILS.";
inline constexpr std::string_view kGenesisToken = "GENESIS";
inline constexpr std::string_view kGenesisTimestamp = "1970-01-01T00:00:00.000Z";

enum class BlockKind { genesis, initial, critique, harmonization, revision };

inline std::string_view to_string(BlockKind k) {
    switch (k) {
        case BlockKind::genesis: return "genesis";
        case BlockKind::initial: return "initial";
        case BlockKind::critique: return "critique";
        case BlockKind::harmonization: return "harmonization";
        case BlockKind::revision: return "revision";
    }
    return "unknown";
}

inline BlockKind block_kind_from_string(std::string_view s) {
    if (s == "genesis") return BlockKind::genesis;
    if (s == "initial") return BlockKind::initial;
    if (s == "critique") return BlockKind::critique;
    if (s == "harmonization") return BlockKind::harmonization;
    if (s == "revision") return BlockKind::revision;
    throw domain_error("unknown block kind: " + std::string(s));
}

// Wall clock in RFC 3339 UTC with millisecond precision.
inline std::string now_rfc3339_utc_ms() {
    using namespace std::chrono;
    auto now = system_clock::now();
    auto ms = duration_cast<milliseconds>(now.time_since_epoch()) % 1000;
    std::time_t secs = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min,
                  tm.tm_sec, static_cast<int>(ms.count()));
    return buf;
}

struct BlockPayload {
    std::string agent;
    BlockKind kind = BlockKind::initial;
    std::string message;
    std::string timestamp;  // RFC 3339 UTC, millisecond precision
};

struct Block {
    std::size_t index = 0;
    BlockPayload payload;
    Sha256::Digest content_hash{};
    Sha256::Digest chain_hash{};
    bool migrated = false;
};

struct VerifyResult {
    bool ok = false;
    std::size_t failed_index = 0;  // meaningful only when !ok
    std::string message;           // one of the exact verdict strings

    explicit operator bool() const { return ok; }
};

// Salted hash chain over interaction records. Every block commits to its
// message and timestamp through the content hash and to the whole prefix
// through the chain hash; the salt enters both preimages, so a ledger can
// only be verified (or legitimately rebuilt) by a holder of the salt. The
// salt itself is never serialized.
class Ledger {
public:
    static Ledger genesis(std::string salt,
                          std::string timestamp = std::string(kGenesisTimestamp)) {
        if (salt.empty()) throw config_error("ledger salt must not be empty");
        Ledger ledger(std::move(salt));
        BlockPayload payload{"ledger", BlockKind::genesis, std::string(kGenesisToken),
                             std::move(timestamp)};
        ledger.append_internal(std::move(payload), false);
        return ledger;
    }

    const Block& append(BlockPayload payload) {
        if (payload.message.empty()) throw domain_error("block message must not be empty");
        return append_internal(std::move(payload), false);
    }

    // Recompute every hash and report the first mismatch. Position gaps
    // (dropped or reordered blocks) surface as chain-hash failures.
    VerifyResult verify() const {
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const Block& b = blocks_[i];
            if (b.index != i)
                return {false, i, tampered("Chain hash mismatch", i)};
            if (content_hash_of(b.payload) != b.content_hash)
                return {false, i, tampered("Content hash mismatch", i)};
            const Block* prev = i == 0 ? nullptr : &blocks_[i - 1];
            if (chain_hash_of(b.content_hash, prev) != b.chain_hash)
                return {false, i, tampered("Chain hash mismatch", i)};
        }
        return {true, 0, std::string(kVerifiedVerdict)};
    }

    // Legitimate edit: keep blocks before `index` byte-identical and re-hash
    // the replacement payload sequence from there on.
    Ledger rebuild_from(std::size_t index, std::vector<BlockPayload> payloads) const {
        if (index >= blocks_.size())
            throw domain_error("rebuild index " + std::to_string(index) +
                               " out of range for ledger of length " +
                               std::to_string(blocks_.size()));
        Ledger out(salt_);
        out.blocks_.assign(blocks_.begin(), blocks_.begin() + static_cast<std::ptrdiff_t>(index));
        for (auto& p : payloads) out.append_internal(std::move(p), false);
        return out;
    }

    // One JSON object per line; hashes as lowercase hex. The salt is not
    // written.
    void save(const std::filesystem::path& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw config_error("cannot open ledger file for writing: " + path.string());
        for (const Block& b : blocks_) {
            nlohmann::json j{{"index", b.index},
                             {"agent", b.payload.agent},
                             {"kind", std::string(to_string(b.payload.kind))},
                             {"message", b.payload.message},
                             {"timestamp", b.payload.timestamp},
                             {"content_hash", Sha256::hex(b.content_hash)},
                             {"chain_hash", Sha256::hex(b.chain_hash)}};
            if (b.migrated) j["migrated"] = true;
            os << j.dump() << '\n';
        }
    }

    // Parse a ledger file, attach the salt, and verify. Files without hash
    // fields are treated as legacy logs: each line becomes a block behind a
    // fresh genesis, re-hashed in order and flagged as migrated.
    static std::pair<Ledger, VerifyResult> load(const std::filesystem::path& path,
                                                std::string salt) {
        if (salt.empty()) throw config_error("ledger salt must not be empty");
        std::ifstream is(path, std::ios::binary);
        if (!is) throw config_error("cannot open ledger file: " + path.string());
        std::vector<nlohmann::json> lines;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw parse_error("malformed ledger line", line_no);
            if (!j.is_object())
                throw parse_error("ledger line is not a JSON object", line_no);
            lines.push_back(std::move(j));
        }
        if (lines.empty()) throw parse_error("ledger file is empty", 0);

        bool legacy = !lines.front().contains("content_hash") ||
                      !lines.front().contains("chain_hash");
        if (legacy) return load_legacy(lines, std::move(salt));

        Ledger ledger(std::move(salt));
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const nlohmann::json& j = lines[i];
            try {
                Block b;
                b.index = j.at("index").get<std::size_t>();
                b.payload.agent = j.at("agent").get<std::string>();
                b.payload.kind = block_kind_from_string(j.at("kind").get<std::string>());
                b.payload.message = j.at("message").get<std::string>();
                b.payload.timestamp = j.at("timestamp").get<std::string>();
                b.content_hash = digest_from_hex(j.at("content_hash").get<std::string>());
                b.chain_hash = digest_from_hex(j.at("chain_hash").get<std::string>());
                b.migrated = j.value("migrated", false);
                ledger.blocks_.push_back(std::move(b));
            } catch (const nlohmann::json::exception& e) {
                throw parse_error(std::string("bad ledger field: ") + e.what(), i + 1);
            }
        }
        VerifyResult verdict = ledger.verify();
        return {std::move(ledger), std::move(verdict)};
    }

    const std::vector<Block>& blocks() const { return blocks_; }
    std::size_t size() const { return blocks_.size(); }
    const std::string& salt() const { return salt_; }

    // Exposed so tests can cross-check preimage construction.
    Sha256::Digest content_hash_of(const BlockPayload& p) const {
        Sha256 h;
        h.update(p.message);
        h.update("\n");
        h.update(p.timestamp);
        h.update("\n");
        h.update(salt_);
        return h.finish();
    }

    Sha256::Digest chain_hash_of(const Sha256::Digest& content, const Block* prev) const {
        Sha256 h;
        h.update(Sha256::hex(content));
        h.update("\n");
        if (prev == nullptr)
            h.update(kGenesisToken);
        else
            h.update(Sha256::hex(prev->chain_hash));
        h.update("\n");
        h.update(salt_);
        return h.finish();
    }

private:
    explicit Ledger(std::string salt) : salt_(std::move(salt)) {}

    static std::string tampered(std::string_view what, std::size_t index) {
        return "TAMPERED: " + std::string(what) + " at block " + std::to_string(index);
    }

    const Block& append_internal(BlockPayload payload, bool migrated) {
        Block b;
        b.index = blocks_.size();
        b.payload = std::move(payload);
        b.content_hash = content_hash_of(b.payload);
        b.chain_hash = chain_hash_of(b.content_hash, blocks_.empty() ? nullptr : &blocks_.back());
        b.migrated = migrated;
        blocks_.push_back(std::move(b));
        return blocks_.back();
    }

    static Sha256::Digest digest_from_hex(const std::string& hex) {
        if (hex.size() != 64) throw domain_error("hash field must be 64 hex characters");
        auto nibble = [](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            if (c >= 'A' && c <= 'F') return c - 'A' + 10;
            throw domain_error("invalid hex digit in hash field");
        };
        Sha256::Digest d{};
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
        return d;
    }

    static std::pair<Ledger, VerifyResult> load_legacy(const std::vector<nlohmann::json>& lines,
                                                       std::string salt) {
        Ledger ledger = Ledger::genesis(std::move(salt));
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const nlohmann::json& j = lines[i];
            if (j.contains("content_hash") || j.contains("chain_hash"))
                throw parse_error("mixed legacy and hashed ledger lines", i + 1);
            if (!j.contains("message"))
                throw parse_error("legacy ledger line lacks a message", i + 1);
            BlockPayload p;
            p.agent = j.value("agent", std::string("legacy"));
            p.kind = j.contains("kind")
                         ? block_kind_from_string(j.at("kind").get<std::string>())
                         : BlockKind::initial;
            p.message = j.at("message").get<std::string>();
            p.timestamp = j.value("timestamp", std::string(kGenesisTimestamp));
            ledger.append_internal(std::move(p), true);
        }
        VerifyResult verdict = ledger.verify();
        return {std::move(ledger), std::move(verdict)};
    }

    std::string salt_;
    std::vector<Block> blocks_;
};

}  // namespace discnet

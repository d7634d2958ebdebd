#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "discnet/ledger.hpp"
#include "discnet/sha256.hpp"

using namespace discnet;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("discnet_ledger_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

Ledger sample_ledger(const std::string& salt, std::size_t appended_blocks) {
    Ledger ledger = Ledger::genesis(salt);
    for (std::size_t i = 0; i < appended_blocks; ++i) {
        BlockPayload p;
        p.agent = "agent-" + std::to_string(i % 3);
        p.kind = i % 4 == 0   ? BlockKind::initial
                 : i % 4 == 1 ? BlockKind::critique
                 : i % 4 == 2 ? BlockKind::harmonization
                              : BlockKind::revision;
        p.message = "message body " + std::to_string(i);
        p.timestamp = "2025-03-0" + std::to_string(1 + i % 9) + "T10:00:00.000Z";
        ledger.append(std::move(p));
    }
    return ledger;
}

std::vector<std::string> file_lines(const fs::path& path) {
    std::ifstream is(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream os(path, std::ios::binary);
    for (const std::string& l : lines) os << l << '\n';
}

std::string file_bytes(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Rewrite one JSONL record through a mutator and report the verify verdict.
VerifyResult mutated_verdict(const Ledger& ledger, const TempDir& dir, std::size_t index,
                             const std::function<void(json&)>& mutate) {
    fs::path path = dir.path / "mutated.jsonl";
    ledger.save(path);
    std::vector<std::string> lines = file_lines(path);
    json j = json::parse(lines.at(index));
    mutate(j);
    lines[index] = j.dump();
    write_lines(path, lines);
    return Ledger::load(path, ledger.salt()).second;
}

}  // namespace

TEST_CASE("sha256 reproduces the standard test vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    std::string million(1000000, 'a');
    CHECK(sha256_hex(million) ==
          "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");

    // streaming in odd chunks equals one-shot hashing
    Sha256 h;
    std::string s = "the quick brown fox jumps over the lazy dog and keeps going";
    for (std::size_t i = 0; i < s.size(); i += 7) h.update(s.substr(i, std::min<std::size_t>(7, s.size() - i)));
    CHECK(Sha256::hex(h.finish()) == sha256_hex(s));
}

TEST_CASE("genesis blocks are deterministic in salt and timestamp") {
    Ledger a = Ledger::genesis("salt-1");
    Ledger b = Ledger::genesis("salt-1");
    REQUIRE(a.size() == 1);
    CHECK(a.blocks()[0].content_hash == b.blocks()[0].content_hash);
    CHECK(a.blocks()[0].chain_hash == b.blocks()[0].chain_hash);
    CHECK(a.blocks()[0].payload.timestamp == std::string(kGenesisTimestamp));

    Ledger c = Ledger::genesis("salt-2");
    CHECK(a.blocks()[0].chain_hash != c.blocks()[0].chain_hash);

    Ledger d = Ledger::genesis("salt-1", "2024-01-01T00:00:00.000Z");
    CHECK(a.blocks()[0].content_hash != d.blocks()[0].content_hash);

    CHECK_THROWS_AS(Ledger::genesis(""), config_error);
}

TEST_CASE("genesis hashes follow the salted two-stage construction") {
    Ledger ledger = Ledger::genesis("sigma");
    const Block& g = ledger.blocks()[0];
    Sha256 content;
    content.update(std::string(kGenesisToken) + "\n" + std::string(kGenesisTimestamp) +
                   "\nsigma");
    Sha256::Digest expected_content = content.finish();
    CHECK(g.content_hash == expected_content);

    Sha256 chain;
    chain.update(Sha256::hex(expected_content) + "\nGENESIS\nsigma");
    CHECK(g.chain_hash == chain.finish());
}

TEST_CASE("append grows a verifying chain") {
    Ledger ledger = sample_ledger("salt", 12);
    REQUIRE(ledger.size() == 13);
    for (std::size_t i = 0; i < ledger.size(); ++i) CHECK(ledger.blocks()[i].index == i);
    VerifyResult v = ledger.verify();
    CHECK(v.ok);
    CHECK(v.message == std::string(kVerifiedVerdict));

    // chain hash commits to the predecessor
    const Block& b5 = ledger.blocks()[5];
    CHECK(b5.chain_hash == ledger.chain_hash_of(b5.content_hash, &ledger.blocks()[4]));

    CHECK_THROWS_AS(ledger.append({"a", BlockKind::initial, "", "2025-01-01T00:00:00.000Z"}),
                    domain_error);
}

TEST_CASE("identical payloads at different timestamps hash differently") {
    Ledger ledger = Ledger::genesis("salt");
    Sha256::Digest first =
        ledger.append({"a", BlockKind::initial, "same text", "2025-01-01T00:00:00.000Z"})
            .content_hash;
    Sha256::Digest second =
        ledger.append({"a", BlockKind::initial, "same text", "2025-01-01T00:00:00.001Z"})
            .content_hash;
    CHECK(first != second);
}

TEST_CASE("single-field mutations are detected at the right block") {
    TempDir dir;
    Ledger ledger = sample_ledger("tamper-salt", 9);

    SECTION("message byte flips") {
        for (std::size_t i = 0; i < ledger.size(); ++i) {
            VerifyResult v = mutated_verdict(ledger, dir, i, [](json& j) {
                std::string m = j.at("message").get<std::string>();
                m[m.size() / 2] = m[m.size() / 2] == 'x' ? 'y' : 'x';
                j["message"] = m;
            });
            CHECK_FALSE(v.ok);
            CHECK(v.failed_index == i);
            CHECK(v.message == "TAMPERED: Content hash mismatch at block " + std::to_string(i));
        }
    }

    SECTION("timestamp edits") {
        VerifyResult v = mutated_verdict(ledger, dir, 4, [](json& j) {
            j["timestamp"] = "2031-01-01T00:00:00.000Z";
        });
        CHECK_FALSE(v.ok);
        CHECK(v.failed_index == 4);
        CHECK(v.message.rfind("TAMPERED: Content hash mismatch", 0) == 0);
    }

    SECTION("content hash substitution") {
        VerifyResult v = mutated_verdict(ledger, dir, 3, [](json& j) {
            std::string h = j.at("content_hash").get<std::string>();
            h[0] = h[0] == '0' ? '1' : '0';
            j["content_hash"] = h;
        });
        CHECK_FALSE(v.ok);
        CHECK(v.failed_index == 3);
        CHECK(v.message == "TAMPERED: Content hash mismatch at block 3");
    }

    SECTION("chain hash substitution") {
        VerifyResult v = mutated_verdict(ledger, dir, 6, [](json& j) {
            std::string h = j.at("chain_hash").get<std::string>();
            h[10] = h[10] == 'a' ? 'b' : 'a';
            j["chain_hash"] = h;
        });
        CHECK_FALSE(v.ok);
        CHECK(v.failed_index == 6);
        CHECK(v.message == "TAMPERED: Chain hash mismatch at block 6");
    }

    SECTION("index edits fold into the chain verdict") {
        VerifyResult v = mutated_verdict(ledger, dir, 7, [](json& j) { j["index"] = 12; });
        CHECK_FALSE(v.ok);
        CHECK(v.failed_index == 7);
        CHECK(v.message == "TAMPERED: Chain hash mismatch at block 7");
    }
}

TEST_CASE("forged blocks fail on the chain link") {
    TempDir dir;
    Ledger ledger = sample_ledger("forge-salt", 9);
    fs::path path = dir.path / "forged.jsonl";

    SECTION("self-consistent content hash still breaks the chain at the block") {
        ledger.save(path);
        auto lines = file_lines(path);
        json j = json::parse(lines[5]);
        std::string forged_message = "forged content";
        Sha256 h;
        h.update(forged_message + "\n" + j.at("timestamp").get<std::string>() + "\nforge-salt");
        j["message"] = forged_message;
        j["content_hash"] = Sha256::hex(h.finish());
        lines[5] = j.dump();
        write_lines(path, lines);
        VerifyResult v = Ledger::load(path, "forge-salt").second;
        CHECK_FALSE(v.ok);
        CHECK(v.failed_index == 5);
        CHECK(v.message == "TAMPERED: Chain hash mismatch at block 5");
    }

    SECTION("a fully recomputed block surfaces downstream") {
        // Block 5 forged with both hashes consistent; block 6 now chains to a
        // link that never existed.
        Ledger forged = ledger.rebuild_from(
            5, {BlockPayload{"agent-x", BlockKind::critique, "forged wholesale",
                             "2025-03-09T10:00:00.000Z"}});
        ledger.save(path);
        auto lines = file_lines(path);
        fs::path forged_path = dir.path / "forged_only.jsonl";
        forged.save(forged_path);
        lines[5] = file_lines(forged_path).at(5);
        write_lines(path, lines);
        VerifyResult v = Ledger::load(path, "forge-salt").second;
        CHECK_FALSE(v.ok);
        CHECK(v.failed_index == 6);
        CHECK(v.message == "TAMPERED: Chain hash mismatch at block 6");
    }
}

TEST_CASE("interior deletions break the chain at the gap") {
    TempDir dir;
    Ledger ledger = sample_ledger("delete-salt", 9);
    fs::path path = dir.path / "deleted.jsonl";
    for (std::size_t removed = 0; removed + 1 < ledger.size(); ++removed) {
        ledger.save(path);
        auto lines = file_lines(path);
        lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(removed));
        write_lines(path, lines);
        VerifyResult v = Ledger::load(path, "delete-salt").second;
        CHECK_FALSE(v.ok);
        CHECK(v.failed_index == removed);
    }
}

TEST_CASE("verified prefixes of a verified ledger also verify") {
    TempDir dir;
    Ledger ledger = sample_ledger("prefix-salt", 9);
    fs::path path = dir.path / "prefix.jsonl";
    ledger.save(path);
    auto lines = file_lines(path);
    for (std::size_t keep = 1; keep <= lines.size(); ++keep) {
        write_lines(path, {lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(keep)});
        CHECK(Ledger::load(path, "prefix-salt").second.ok);
    }
}

TEST_CASE("rebuild_from performs legitimate edits") {
    Ledger ledger = sample_ledger("edit-salt", 9);

    SECTION("identity rebuild reproduces the ledger bit for bit") {
        std::vector<BlockPayload> payloads;
        for (const Block& b : ledger.blocks()) payloads.push_back(b.payload);
        Ledger rebuilt = ledger.rebuild_from(0, payloads);
        REQUIRE(rebuilt.size() == ledger.size());
        for (std::size_t i = 0; i < ledger.size(); ++i) {
            CHECK(rebuilt.blocks()[i].content_hash == ledger.blocks()[i].content_hash);
            CHECK(rebuilt.blocks()[i].chain_hash == ledger.blocks()[i].chain_hash);
        }
    }

    SECTION("editing block 3 keeps the prefix and re-hashes the suffix") {
        std::vector<BlockPayload> tail;
        for (std::size_t i = 3; i < ledger.size(); ++i)
            tail.push_back(ledger.blocks()[i].payload);
        tail[0].message = "amended message";
        tail[0].timestamp = "2025-04-01T09:00:00.000Z";
        Ledger rebuilt = ledger.rebuild_from(3, tail);
        REQUIRE(rebuilt.size() == ledger.size());
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(rebuilt.blocks()[i].content_hash == ledger.blocks()[i].content_hash);
            CHECK(rebuilt.blocks()[i].chain_hash == ledger.blocks()[i].chain_hash);
        }
        for (std::size_t i = 3; i < ledger.size(); ++i)
            CHECK(rebuilt.blocks()[i].chain_hash != ledger.blocks()[i].chain_hash);
        CHECK(rebuilt.verify().ok);
    }

    SECTION("a rebuilt edit verifies where in-place tampering does not") {
        TempDir dir;
        fs::path path = dir.path / "tampered.jsonl";
        ledger.save(path);
        auto lines = file_lines(path);
        json j = json::parse(lines[3]);
        j["message"] = "amended message";
        lines[3] = j.dump();
        write_lines(path, lines);
        CHECK_FALSE(Ledger::load(path, "edit-salt").second.ok);
    }

    CHECK_THROWS_AS(ledger.rebuild_from(99, {}), domain_error);
}

TEST_CASE("save and load round-trip byte-identically") {
    TempDir dir;
    Ledger ledger = sample_ledger("io-salt", 7);
    fs::path a = dir.path / "a.jsonl";
    fs::path b = dir.path / "b.jsonl";
    ledger.save(a);

    auto [loaded, verdict] = Ledger::load(a, "io-salt");
    CHECK(verdict.ok);
    CHECK(verdict.message == std::string(kVerifiedVerdict));
    loaded.save(b);
    CHECK(file_bytes(a) == file_bytes(b));

    SECTION("wrong salt shows up as tampering at the genesis block") {
        VerifyResult wrong = Ledger::load(a, "other-salt").second;
        CHECK_FALSE(wrong.ok);
        CHECK(wrong.failed_index == 0);
    }

    SECTION("malformed lines carry their line number") {
        auto lines = file_lines(a);
        lines[3] = "{not json";
        write_lines(a, lines);
        try {
            Ledger::load(a, "io-salt");
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            CHECK(e.line() == 4);
        }
    }
}

TEST_CASE("ledger files match the frozen golden bytes") {
    TempDir dir;
    Ledger ledger = Ledger::genesis("golden-salt");
    ledger.append({"alpha", BlockKind::initial, "first answer", "2025-06-01T12:00:00.000Z"});
    ledger.append({"beta", BlockKind::critique, "flaws in alpha: statements 2 4",
                   "2025-06-01T12:00:01.000Z"});
    ledger.append({"gamma", BlockKind::harmonization, "judgement text",
                   "2025-06-01T12:00:02.000Z"});
    fs::path path = dir.path / "golden.jsonl";
    ledger.save(path);

    fs::path golden_path = fs::path(DISCNET_GOLDEN_DIR) / "ledger_basic.jsonl";
    REQUIRE(fs::exists(golden_path));
    CHECK(file_bytes(path) == file_bytes(golden_path));
}

TEST_CASE("legacy logs migrate behind a fresh genesis") {
    TempDir dir;
    fs::path path = dir.path / "legacy.jsonl";
    {
        std::ofstream os(path);
        os << R"({"agent":"alice","message":"hello world"})" << '\n';
        os << R"({"message":"plain message without agent"})" << '\n';
        os << R"({"agent":"bob","kind":"revision","message":"revised","timestamp":"2025-02-02T00:00:00.000Z"})"
           << '\n';
    }
    auto [ledger, verdict] = Ledger::load(path, "legacy-salt");
    CHECK(verdict.ok);
    REQUIRE(ledger.size() == 4);
    CHECK(ledger.blocks()[0].payload.kind == BlockKind::genesis);
    CHECK_FALSE(ledger.blocks()[0].migrated);
    for (std::size_t i = 1; i < 4; ++i) CHECK(ledger.blocks()[i].migrated);
    CHECK(ledger.blocks()[1].payload.agent == "alice");
    CHECK(ledger.blocks()[2].payload.agent == "legacy");
    CHECK(ledger.blocks()[3].payload.kind == BlockKind::revision);

    // the migrated flag survives a save/load round trip
    fs::path saved = dir.path / "migrated.jsonl";
    ledger.save(saved);
    auto [reloaded, verdict2] = Ledger::load(saved, "legacy-salt");
    CHECK(verdict2.ok);
    CHECK(reloaded.blocks()[1].migrated);

    SECTION("legacy lines without a message fail to parse") {
        std::ofstream os(path);
        os << R"({"agent":"alice"})" << '\n';
        os.close();
        CHECK_THROWS_AS(Ledger::load(path, "legacy-salt"), parse_error);
    }

    SECTION("mixed legacy and hashed lines fail to parse") {
        ledger.save(path);
        std::ofstream os(path, std::ios::app);
        os << R"({"message":"stray legacy line"})" << '\n';
        os.close();
        CHECK_THROWS_AS(Ledger::load(path, "legacy-salt"), parse_error);
    }
}

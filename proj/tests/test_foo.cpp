#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "discnet/agents.hpp"
#include "discnet/edit_distance.hpp"
#include "discnet/foo.hpp"
#include "discnet/markov.hpp"

using namespace discnet;
namespace fs = std::filesystem;

namespace {

AgentSpec make_agent(std::string id, AgentRole role) {
    AgentSpec a;
    a.id = std::move(id);
    a.role = role;
    a.backend = BackendKind::mock;
    a.model = "mock-model";
    return a;
}

Roster standard_roster(MockModelParams mock = {50, 0.055, 0.05, 0.19},
                       int specialists = 2) {
    Roster r;
    r.salt = "foo-test-salt";
    r.mock = mock;
    r.agents.push_back(make_agent("harmonizer-1", AgentRole::harmonizer));
    for (int i = 1; i <= specialists; ++i)
        r.agents.push_back(make_agent("spec-" + std::to_string(i), AgentRole::specialist));
    return r;
}

FooConfig fixed_rounds_config(int rounds, std::uint64_t seed, bool critique = true) {
    FooConfig cfg;
    cfg.policy.min_rounds = rounds;
    cfg.policy.max_rounds = rounds;
    cfg.policy.edit_distance_threshold = 0.0;
    cfg.seed = seed;
    cfg.enable_critique = critique;
    cfg.fixed_timestamp = "2025-07-01T00:00:00.000Z";
    return cfg;
}

// False-statement fraction over the revising agents' final answers.
double final_false_fraction(const FooResult& result) {
    REQUIRE(!result.history.empty());
    const RoundRecord& last = result.history.back();
    std::int64_t false_count = 0, total = 0;
    for (const Answer& a : last.revisions) {
        for (bool b : a.truth) {
            ++total;
            false_count += b ? 0 : 1;
        }
    }
    REQUIRE(total > 0);
    return static_cast<double>(false_count) / static_cast<double>(total);
}

// Mock wrapper that fails on a scheduled set of backend calls.
class FailingBackend : public AgentBackend {
public:
    FailingBackend(std::unique_ptr<AgentBackend> inner, std::set<int> failing_calls)
        : inner_(std::move(inner)), failing_(std::move(failing_calls)) {}

    Answer initial_answer(const std::string& task) override {
        maybe_fail();
        return inner_->initial_answer(task);
    }
    SpecialistTurn specialist_turn(const std::string& task, int round,
                                   const std::vector<Answer>& answers,
                                   const Judgement& previous) override {
        maybe_fail();
        return inner_->specialist_turn(task, round, answers, previous);
    }
    HarmonizerTurn harmonizer_turn(const std::string& task, int round,
                                   const std::vector<Answer>& answers,
                                   const std::vector<Critique>& critiques) override {
        maybe_fail();
        return inner_->harmonizer_turn(task, round, answers, critiques);
    }

private:
    void maybe_fail() {
        int call = calls_++;
        if (failing_.count(call)) throw backend_error("scheduled failure");
    }
    std::unique_ptr<AgentBackend> inner_;
    std::set<int> failing_;
    int calls_ = 0;
};

BackendMap backends_with_failure(const Roster& roster, std::uint64_t seed,
                                 const std::string& failing_id, std::set<int> calls) {
    BackendMap map = make_mock_backends(roster, seed);
    auto node = map.extract(failing_id);
    map.emplace(failing_id,
                std::make_unique<FailingBackend>(std::move(node.mapped()), std::move(calls)));
    return map;
}

std::map<BlockKind, std::size_t> kind_counts(const Ledger& ledger) {
    std::map<BlockKind, std::size_t> counts;
    for (const Block& b : ledger.blocks()) ++counts[b.payload.kind];
    return counts;
}

std::string ledger_bytes(const Ledger& ledger) {
    fs::path path = fs::temp_directory_path() /
                    ("discnet_foo_" + std::to_string(::getpid()) + ".jsonl");
    ledger.save(path);
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    fs::remove(path);
    return ss.str();
}

}  // namespace

TEST_CASE("normalized edit distance is a bounded symmetric metric") {
    CHECK(normalized_edit_distance("", "") == 0.0);
    CHECK(normalized_edit_distance("same", "same") == 0.0);
    CHECK(normalized_edit_distance("abc", "abd") == Catch::Approx(1.0 / 3.0));
    CHECK(normalized_edit_distance("abc", "xyz") == 1.0);
    CHECK(normalized_edit_distance("a  b\n c", "a b c") == 0.0);  // whitespace folds
    SplitStream gen(3);
    for (int i = 0; i < 200; ++i) {
        std::string a, b;
        for (int k = 0; k < 12; ++k) {
            if (gen.next_unit() < 0.8) a.push_back('a' + static_cast<char>(gen.next_unit() * 4));
            if (gen.next_unit() < 0.8) b.push_back('a' + static_cast<char>(gen.next_unit() * 4));
        }
        double ab = normalized_edit_distance(a, b);
        CHECK(ab == normalized_edit_distance(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("mock statement primitives") {
    SplitStream s(10);

    SECTION("zero fabrication emits only true statements") {
        auto bits = mock_generate(200, 0.0, s);
        for (bool b : bits) CHECK(b);
    }

    SECTION("full fabrication emits only false statements") {
        auto bits = mock_generate(200, 1.0, s.derive(1));
        for (bool b : bits) CHECK_FALSE(b);
    }

    SECTION("certain detection flags every false statement") {
        std::vector<bool> truth{true, false, false, true, false};
        auto flagged = mock_detect(truth, 1.0, s.derive(2));
        CHECK(flagged == std::vector<std::size_t>{1, 2, 4});
        CHECK(mock_detect(truth, 0.0, s.derive(3)).empty());
    }

    SECTION("revision with no flaws and no hazards is the identity") {
        std::vector<bool> truth{true, true, false, true};
        auto out = mock_revise(truth, {}, 0.0, 0.0, s.derive(4));
        CHECK(out == truth);
    }

    SECTION("flagged statements are repaired; only fresh fabrication remains") {
        std::vector<bool> truth(1000, false);
        std::vector<std::size_t> all;
        for (std::size_t i = 0; i < truth.size(); ++i) all.push_back(i);
        auto out = mock_revise(truth, all, 0.3, 0.05, s.derive(5));
        std::int64_t false_count = 0;
        for (bool b : out) false_count += b ? 0 : 1;
        // Binomial(1000, 0.3): mean 300, sd 14.5
        CHECK(false_count > 240);
        CHECK(false_count < 360);

        auto repaired = mock_revise(truth, all, 0.0, 0.0, s.derive(6));
        for (bool b : repaired) CHECK(b);
    }

    SECTION("unflagged false statements self-repair at rate q") {
        std::vector<bool> truth(1000, false);
        auto out = mock_revise(truth, {}, 0.0, 0.25, s.derive(7));
        std::int64_t repaired = 0;
        for (bool b : out) repaired += b ? 1 : 0;
        // Binomial(1000, 0.25): mean 250, sd 13.7
        CHECK(repaired > 200);
        CHECK(repaired < 300);
    }
}

TEST_CASE("harmonize applies the majority rubric with tie acceptance") {
    std::vector<Answer> answers{{"a", {}, "answer a"}, {"b", {}, "answer b"},
                                {"c", {}, "answer c"}};

    SECTION("unanimous flags are agreed and ruled flawed") {
        std::vector<Critique> critiques{{"b", "a", {2, 5}, ""}, {"c", "a", {2, 5}, ""}};
        Judgement j = harmonize(1, critiques, answers);
        REQUIRE(j.per_answer.size() == 3);
        const AnswerJudgement& aj = j.per_answer[0];
        CHECK(aj.agreed == std::vector<std::size_t>{2, 5});
        CHECK(aj.contested.empty());
        CHECK(j.flaws_for("a") == std::vector<std::size_t>{2, 5});
    }

    SECTION("a one-against-one split is contested and accepted") {
        std::vector<Critique> critiques{{"b", "a", {3}, ""}, {"c", "a", {}, ""}};
        Judgement j = harmonize(1, critiques, answers);
        const AnswerJudgement& aj = j.per_answer[0];
        CHECK(aj.agreed.empty());
        CHECK(aj.contested == std::vector<std::size_t>{3});
        CHECK(j.flaws_for("a") == std::vector<std::size_t>{3});
    }

    SECTION("a one-of-three minority is contested and rejected") {
        std::vector<Critique> critiques{
            {"b", "a", {3}, ""}, {"c", "a", {}, ""}, {"d", "a", {}, ""}};
        Judgement j = harmonize(1, critiques, answers);
        const AnswerJudgement& aj = j.per_answer[0];
        CHECK(aj.contested == std::vector<std::size_t>{3});
        CHECK(j.flaws_for("a").empty());
    }

    SECTION("no critiques yields an empty judgement") {
        Judgement j = harmonize(1, {}, answers);
        for (const AnswerJudgement& aj : j.per_answer) {
            CHECK(aj.agreed.empty());
            CHECK(aj.verdicts.empty());
        }
    }
}

TEST_CASE("identical first-round answers converge immediately") {
    Roster roster = standard_roster({30, 0.0, 0.05, 0.19});
    FooConfig cfg;
    cfg.policy.min_rounds = 1;
    cfg.policy.max_rounds = 10;
    cfg.seed = 4;
    cfg.fixed_timestamp = "2025-07-01T00:00:00.000Z";
    FooResult result = run_foo("state the facts", roster, cfg);
    CHECK(result.converged);
    CHECK(result.rounds == 1);
    CHECK(result.history.back().convergence_metric == 0.0);
    CHECK(result.backend_calls == 6);  // broadcast + one consensus round
}

TEST_CASE("backend call accounting is one call per agent per round") {
    SECTION("three agents over three consensus rounds cost twelve calls") {
        Roster roster = standard_roster();
        FooResult result = run_foo("task", roster, fixed_rounds_config(3, 11));
        CHECK(result.rounds == 3);
        CHECK(result.backend_calls == 12);
    }

    SECTION("the general pattern is (1 + rounds) * agents") {
        Roster roster = standard_roster({20, 0.055, 0.05, 0.19}, 3);  // 4 agents
        FooResult result = run_foo("task", roster, fixed_rounds_config(5, 12));
        CHECK(result.rounds == 5);
        CHECK(result.backend_calls == (1 + 5) * 4);
    }
}

TEST_CASE("the ledger records every interaction and verifies clean") {
    Roster roster = standard_roster();
    const int rounds = 4;
    FooResult result = run_foo("task", roster, fixed_rounds_config(rounds, 21));
    REQUIRE_FALSE(result.aborted);

    auto counts = kind_counts(result.run_ledger);
    CHECK(counts[BlockKind::genesis] == 1);
    CHECK(counts[BlockKind::initial] == 3);
    CHECK(counts[BlockKind::critique] == rounds * 3 * 2);  // all (critic, target) pairs
    CHECK(counts[BlockKind::harmonization] == rounds);
    CHECK(counts[BlockKind::revision] == rounds * 2);      // specialists only
    CHECK(result.run_ledger.size() ==
          1 + 3 + rounds * (3 * 2 + 1 + 2));
    CHECK(result.run_ledger.verify().ok);

    for (const auto& [agent, ledger] : result.agent_ledgers) {
        CHECK(ledger.verify().ok);
        // every agent acted at least once per round plus broadcast
        CHECK(ledger.size() >= 1 + 1 + rounds);
    }

    // critique pair counts per round: |A| * (|A| - 1)
    for (const RoundRecord& rec : result.history)
        CHECK(rec.critiques.size() == 6);
}

TEST_CASE("no agent ever critiques itself") {
    Roster roster = standard_roster({40, 0.1, 0.05, 0.5}, 3);
    FooResult result = run_foo("task", roster, fixed_rounds_config(5, 31));
    for (const RoundRecord& rec : result.history)
        for (const Critique& c : rec.critiques) CHECK(c.critic != c.target);
}

TEST_CASE("judged flaws equal the union of critic flags on the standard roster") {
    Roster roster = standard_roster({60, 0.08, 0.05, 0.4});
    FooResult result = run_foo("task", roster, fixed_rounds_config(4, 41));
    for (const RoundRecord& rec : result.history) {
        for (const AnswerJudgement& aj : rec.judgement.per_answer) {
            std::set<std::size_t> expected;
            for (const Critique& c : rec.critiques)
                if (c.target == aj.agent) expected.insert(c.flagged.begin(), c.flagged.end());
            std::set<std::size_t> flawed;
            for (const StatementVerdict& v : aj.verdicts)
                if (v.flawed) flawed.insert(v.index);
            CHECK(flawed == expected);
        }
    }
}

TEST_CASE("mock runs replay bit-identically from the same seed") {
    Roster roster = standard_roster();
    FooConfig cfg = fixed_rounds_config(3, 77);
    FooResult a = run_foo("task text", roster, cfg);
    FooResult b = run_foo("task text", roster, cfg);
    CHECK(ledger_bytes(a.run_ledger) == ledger_bytes(b.run_ledger));
    CHECK(a.history_to_json().dump() == b.history_to_json().dump());
    CHECK(a.final_judgement.to_json().dump() == b.final_judgement.to_json().dump());

    FooConfig other = fixed_rounds_config(3, 78);
    FooResult c = run_foo("task text", roster, other);
    CHECK(ledger_bytes(a.run_ledger) != ledger_bytes(c.run_ledger));
}

TEST_CASE("cross-examination lowers the false share against the control") {
    Roster roster = standard_roster();
    const int rounds = 5;
    double critique_sum = 0.0, control_sum = 0.0;
    const int seeds = 6;
    for (int seed = 0; seed < seeds; ++seed) {
        critique_sum += final_false_fraction(
            run_foo("task", roster, fixed_rounds_config(rounds, 100 + seed, true)));
        control_sum += final_false_fraction(
            run_foo("task", roster, fixed_rounds_config(rounds, 100 + seed, false)));
    }
    double critique_mean = critique_sum / seeds;
    double control_mean = control_sum / seeds;
    CHECK(critique_mean < control_mean);
    CHECK(critique_mean < 0.60);
    CHECK(control_mean < 0.60);
}

TEST_CASE("empirical hazard estimation recovers the mock parameters") {
    Roster roster = standard_roster({200, 0.055, 0.05, 0.19});
    FooResult result = run_foo("task", roster, fixed_rounds_config(20, 1234));
    HazardEstimates est = estimate_empirical_hazards(result.history);
    CHECK(est.lambda_hat == Catch::Approx(0.055).margin(0.02));
    CHECK(est.q_hat == Catch::Approx(0.05).margin(0.02));
    CHECK(est.d_hat == Catch::Approx(0.19).margin(0.02));
    CHECK(est.fabrication_opportunities > 1000);
}

TEST_CASE("degenerate hazard runs estimate zero rates") {
    SECTION("no fabrication") {
        Roster roster = standard_roster({100, 0.0, 0.05, 0.19});
        FooResult result = run_foo("task", roster, fixed_rounds_config(5, 9));
        HazardEstimates est = estimate_empirical_hazards(result.history);
        CHECK(est.lambda_hat == 0.0);
    }

    SECTION("no detection means no flags and no judgement-driven repairs") {
        Roster roster = standard_roster({100, 0.055, 0.05, 0.0});
        FooResult result = run_foo("task", roster, fixed_rounds_config(5, 9));
        HazardEstimates est = estimate_empirical_hazards(result.history);
        CHECK(est.d_hat == 0.0);
        for (const RoundRecord& rec : result.history)
            for (const auto& [agent, flags] : rec.applied_flags) CHECK(flags.empty());
    }
}

TEST_CASE("hazard estimation preconditions") {
    Roster roster = standard_roster();
    FooResult result = run_foo("task", roster, fixed_rounds_config(1, 2));
    CHECK_THROWS_AS(estimate_empirical_hazards(result.history), domain_error);

    // text-only answers carry no ground truth
    RoundRecord r1, r2;
    r1.round = 1;
    r1.snapshot = {{"a", {}, "text"}, {"b", {}, "text"}};
    r1.revisions = {{"a", {}, "text"}};
    r2 = r1;
    r2.round = 2;
    CHECK_THROWS_AS(estimate_empirical_hazards({r1, r2}), unsupported_error);
}

TEST_CASE("failed backends are retired and the run degrades gracefully") {
    SECTION("one broadcast failure leaves a viable pair") {
        Roster roster = standard_roster();
        BackendMap backends = backends_with_failure(roster, 5, "spec-2", {0});
        FooOrchestrator orch(roster, fixed_rounds_config(2, 5), std::move(backends));
        FooResult result = orch.run("task");
        CHECK_FALSE(result.aborted);
        CHECK(result.initial_answers.size() == 2);
        auto counts = kind_counts(result.run_ledger);
        CHECK(counts[BlockKind::initial] == 2);
        CHECK(counts[BlockKind::critique] == 2 * 2 * 1);  // 2 rounds of one pair each way
        CHECK(result.run_ledger.verify().ok);
    }

    SECTION("losing every specialist aborts with an intact ledger") {
        Roster roster = standard_roster();
        BackendMap backends = backends_with_failure(roster, 5, "spec-1", {0});
        auto node = backends.extract("spec-2");
        backends.emplace("spec-2", std::make_unique<FailingBackend>(std::move(node.mapped()),
                                                                    std::set<int>{0}));
        FooOrchestrator orch(roster, fixed_rounds_config(2, 5), std::move(backends));
        FooResult result = orch.run("task");
        CHECK(result.aborted);
        CHECK(result.run_ledger.verify().ok);
        auto counts = kind_counts(result.run_ledger);
        CHECK(counts[BlockKind::initial] == 1);  // only the harmonizer answered
    }

    SECTION("a harmonizer failure mid-run aborts after logging the round") {
        Roster roster = standard_roster();
        // harmonizer call 0 = broadcast, call 1 = round 1, call 2 = round 2
        BackendMap backends = backends_with_failure(roster, 5, "harmonizer-1", {2});
        FooOrchestrator orch(roster, fixed_rounds_config(4, 5), std::move(backends));
        FooResult result = orch.run("task");
        CHECK(result.aborted);
        CHECK(result.abort_reason == "harmonizer failed");
        CHECK(result.history.size() == 2);
        CHECK(result.run_ledger.verify().ok);
        // round 2 still logged its completed specialist work
        auto counts = kind_counts(result.run_ledger);
        CHECK(counts[BlockKind::revision] == 4);
        CHECK(counts[BlockKind::harmonization] == 1);
    }
}

TEST_CASE("roster validation catches configuration mistakes") {
    Roster ok = standard_roster();
    CHECK_NOTHROW(ok.validate());

    Roster dup = standard_roster();
    dup.agents[2].id = "spec-1";
    CHECK_THROWS_AS(dup.validate(), config_error);

    Roster no_harmonizer = standard_roster();
    no_harmonizer.agents[0].role = AgentRole::specialist;
    CHECK_THROWS_AS(no_harmonizer.validate(), config_error);

    Roster no_specialist = standard_roster();
    no_specialist.agents[1].role = AgentRole::harmonizer;
    no_specialist.agents[2].role = AgentRole::harmonizer;
    CHECK_THROWS_AS(no_specialist.validate(), config_error);

    Roster no_salt = standard_roster();
    no_salt.salt.clear();
    CHECK_THROWS_AS(no_salt.validate(), config_error);

    Roster remote_no_endpoint = standard_roster();
    remote_no_endpoint.agents[1].backend = BackendKind::remote;
    CHECK_THROWS_AS(remote_no_endpoint.validate(), config_error);

    Roster bad_mock = standard_roster();
    bad_mock.mock.statements = 0;
    CHECK_THROWS_AS(bad_mock.validate(), config_error);
}

TEST_CASE("rosters round-trip through their JSON document") {
    Roster roster = standard_roster();
    roster.agents[1].instructions = "focus on edge cases";
    roster.agents[1].temperature = 0.9;
    nlohmann::json j = roster_to_json(roster);
    Roster parsed = roster_from_json(j);
    REQUIRE(parsed.agents.size() == roster.agents.size());
    CHECK(parsed.salt == roster.salt);
    CHECK(parsed.mock.statements == roster.mock.statements);
    CHECK(parsed.agents[1].instructions == "focus on edge cases");
    CHECK(parsed.agents[1].temperature == 0.9);
    CHECK(parsed.agents[0].role == AgentRole::harmonizer);

    nlohmann::json bad = j;
    bad["agents"][0]["role"] = "overlord";
    CHECK_THROWS_AS(roster_from_json(bad), config_error);

    nlohmann::json missing = j;
    missing.erase("agents");
    CHECK_THROWS_AS(roster_from_json(missing), config_error);
}

TEST_CASE("orchestrator construction validates its inputs") {
    Roster roster = standard_roster();
    BackendMap empty;
    CHECK_THROWS_AS(FooOrchestrator(roster, fixed_rounds_config(1, 1), std::move(empty)),
                    config_error);

    FooConfig bad_policy = fixed_rounds_config(1, 1);
    bad_policy.policy.min_rounds = 5;
    bad_policy.policy.max_rounds = 2;
    CHECK_THROWS_AS(
        FooOrchestrator(roster, bad_policy, make_mock_backends(roster, 1)),
        config_error);

    FooOrchestrator orch(roster, fixed_rounds_config(1, 1), make_mock_backends(roster, 1));
    CHECK_THROWS_AS(orch.run(""), domain_error);
}

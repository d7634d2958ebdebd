#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "discnet/agents.hpp"
#include "discnet/edit_distance.hpp"
#include "discnet/errors.hpp"
#include "discnet/ledger.hpp"
#include "discnet/rng.hpp"

namespace discnet {

// ---------------------------------------------------------------------------
// Loop artifacts
// ---------------------------------------------------------------------------

// One agent's answer. Mock answers carry the hidden per-statement truth bits
// that drive critique and revision; remote answers are text only.
struct Answer {
    std::string agent;
    std::vector<bool> truth;
    std::string text;
};

// One (critic, target) critique. For mock agents `flagged` holds the indices
// of statements the critic reported as false.
struct Critique {
    std::string critic;
    std::string target;
    std::vector<std::size_t> flagged;
    std::string text;
};

struct StatementVerdict {
    std::size_t index = 0;
    bool flawed = false;
};

struct AnswerJudgement {
    std::string agent;                    // whose answer is judged
    std::vector<std::size_t> agreed;      // flagged by every critic
    std::vector<std::size_t> contested;   // flagged by a proper subset
    std::vector<StatementVerdict> verdicts;
    std::string text;
};

struct Judgement {
    static constexpr int kSchemaVersion = 1;

    int round = 0;
    std::vector<AnswerJudgement> per_answer;
    std::string text;  // free-text synthesis, used by text-only backends

    std::vector<std::size_t> flaws_for(const std::string& agent) const {
        for (const AnswerJudgement& aj : per_answer) {
            if (aj.agent != agent) continue;
            std::vector<std::size_t> out;
            for (const StatementVerdict& v : aj.verdicts)
                if (v.flawed) out.push_back(v.index);
            return out;
        }
        return {};
    }

    nlohmann::json to_json() const {
        nlohmann::json answers = nlohmann::json::array();
        for (const AnswerJudgement& aj : per_answer) {
            nlohmann::json verdicts = nlohmann::json::array();
            for (const StatementVerdict& v : aj.verdicts)
                verdicts.push_back({{"statement", v.index}, {"flawed", v.flawed}});
            answers.push_back({{"agent", aj.agent},
                               {"agreed", aj.agreed},
                               {"contested", aj.contested},
                               {"verdicts", std::move(verdicts)},
                               {"text", aj.text}});
        }
        return {{"schema_version", kSchemaVersion},
                {"round", round},
                {"answers", std::move(answers)},
                {"text", text}};
    }
};

// Aggregate critiques into a judgement. A statement is ruled flawed when a
// strict majority of its critics flagged it; exact ties go to the
// harmonizer, which accepts the reported flaw (confirming a flaw that has
// been pointed out is the cheap direction of verification). Statements are
// listed as agreed when every critic flagged them, contested otherwise.
inline Judgement harmonize(int round, const std::vector<Critique>& critiques,
                           const std::vector<Answer>& answers) {
    Judgement j;
    j.round = round;
    for (const Answer& ans : answers) {
        AnswerJudgement aj;
        aj.agent = ans.agent;
        int critics = 0;
        std::map<std::size_t, int> flags;
        for (const Critique& c : critiques) {
            if (c.target != ans.agent) continue;
            ++critics;
            for (std::size_t i : c.flagged) ++flags[i];
        }
        for (const auto& [index, count] : flags) {
            if (count == critics)
                aj.agreed.push_back(index);
            else
                aj.contested.push_back(index);
            aj.verdicts.push_back({index, 2 * count >= critics});
        }
        std::size_t flawed = 0;
        for (const StatementVerdict& v : aj.verdicts) flawed += v.flawed ? 1 : 0;
        aj.text = "answer of " + aj.agent + ": " + std::to_string(aj.agreed.size()) +
                  " agreed, " + std::to_string(aj.contested.size()) + " contested, " +
                  std::to_string(flawed) + " ruled flawed";
        j.per_answer.push_back(std::move(aj));
    }
    return j;
}

// ---------------------------------------------------------------------------
// Mock statement mechanics
// ---------------------------------------------------------------------------

inline std::uint64_t fold_id(std::string_view id) {
    // FNV-1a, used only to key per-target substreams.
    std::uint64_t h = UINT64_C(0xcbf29ce484222325);
    for (char c : id) {
        h ^= static_cast<std::uint8_t>(c);
        h *= UINT64_C(0x100000001b3);
    }
    return h;
}

inline std::string render_statements(const std::vector<bool>& truth) {
    std::string out;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        out += "claim ";
        out += std::to_string(i);
        out += truth[i] ? ": holds\n" : ": fails\n";
    }
    return out;
}

// Fresh answer: each statement starts false with probability lambda.
inline std::vector<bool> mock_generate(std::int64_t count, double lambda,
                                       SplitStream stream) {
    std::vector<bool> bits(static_cast<std::size_t>(count));
    for (auto&& b : bits) b = !stream.bernoulli(lambda);
    return bits;
}

// Flag each false statement independently with probability d.
inline std::vector<std::size_t> mock_detect(const std::vector<bool>& truth, double d,
                                            SplitStream stream) {
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (!truth[i] && stream.bernoulli(d)) flagged.push_back(i);
    return flagged;
}

// Revision of one answer given the judged flaws: flagged statements are
// repaired, every statement that is then true faces the fabrication hazard
// lambda, and false statements that nobody flagged self-repair with
// probability q. One draw per statement, in index order.
inline std::vector<bool> mock_revise(const std::vector<bool>& truth,
                                     const std::vector<std::size_t>& flagged,
                                     double lambda, double q, SplitStream stream) {
    std::set<std::size_t> flags(flagged.begin(), flagged.end());
    std::vector<bool> out(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] || flags.count(i))
            out[i] = !stream.bernoulli(lambda);
        else
            out[i] = stream.bernoulli(q);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

struct SpecialistTurn {
    std::vector<Critique> critiques;
    Answer revision;
};

struct HarmonizerTurn {
    std::vector<Critique> critiques;
    Judgement judgement;
};

// One object per agent; every method is one backend call. `answers` holds
// the current snapshot in roster order, including the agent's own answer.
// Implementations must never critique the agent's own answer.
class AgentBackend {
public:
    virtual ~AgentBackend() = default;

    virtual Answer initial_answer(const std::string& task) = 0;

    virtual SpecialistTurn specialist_turn(const std::string& task, int round,
                                           const std::vector<Answer>& answers,
                                           const Judgement& previous) = 0;

    virtual HarmonizerTurn harmonizer_turn(const std::string& task, int round,
                                           const std::vector<Answer>& answers,
                                           const std::vector<Critique>& critiques) = 0;
};

// Deterministic statement-level agent. All draws come from substreams keyed
// by (run seed, agent, phase, round, target), so runs replay bit-identically
// regardless of phase scheduling.
class MockBackend : public AgentBackend {
public:
    MockBackend(AgentSpec spec, MockModelParams params, SplitStream stream)
        : spec_(std::move(spec)), params_(params), stream_(stream) {}

    Answer initial_answer(const std::string&) override {
        auto bits = mock_generate(params_.statements, params_.lambda, stream_.derive(kGenerate));
        return {spec_.id, bits, render_statements(bits)};
    }

    SpecialistTurn specialist_turn(const std::string&, int round,
                                   const std::vector<Answer>& answers,
                                   const Judgement& previous) override {
        SpecialistTurn turn;
        turn.critiques = critique_peers(round, answers);
        const Answer& own = find_own(answers);
        auto flags = previous.flaws_for(spec_.id);
        auto bits = mock_revise(own.truth, flags, params_.lambda, params_.q,
                                stream_.derive(kRevise).derive(static_cast<std::uint64_t>(round)));
        turn.revision = {spec_.id, bits, render_statements(bits)};
        return turn;
    }

    HarmonizerTurn harmonizer_turn(const std::string&, int round,
                                   const std::vector<Answer>& answers,
                                   const std::vector<Critique>& critiques) override {
        HarmonizerTurn turn;
        turn.critiques = critique_peers(round, answers);
        std::vector<Critique> pool = critiques;
        pool.insert(pool.end(), turn.critiques.begin(), turn.critiques.end());
        turn.judgement = harmonize(round, pool, answers);
        return turn;
    }

private:
    static constexpr std::uint64_t kGenerate = 0;
    static constexpr std::uint64_t kCritique = 1;
    static constexpr std::uint64_t kRevise = 2;

    const Answer& find_own(const std::vector<Answer>& answers) const {
        for (const Answer& a : answers)
            if (a.agent == spec_.id) return a;
        throw backend_error("agent " + spec_.id + " has no answer in the snapshot");
    }

    std::vector<Critique> critique_peers(int round, const std::vector<Answer>& answers) {
        std::vector<Critique> out;
        for (const Answer& peer : answers) {
            if (peer.agent == spec_.id) continue;
            SplitStream s = stream_.derive(kCritique)
                                .derive(static_cast<std::uint64_t>(round))
                                .derive(fold_id(peer.agent));
            Critique c;
            c.critic = spec_.id;
            c.target = peer.agent;
            c.flagged = mock_detect(peer.truth, params_.d, s);
            if (c.flagged.empty()) {
                c.text = "no flaws found in " + peer.agent;
            } else {
                c.text = "flaws in " + peer.agent + ": statements";
                for (std::size_t i : c.flagged) c.text += " " + std::to_string(i);
            }
            out.push_back(std::move(c));
        }
        return out;
    }

    AgentSpec spec_;
    MockModelParams params_;
    SplitStream stream_;
};

using BackendMap = std::map<std::string, std::unique_ptr<AgentBackend>>;

// Mock backends for every agent of the roster, streams keyed (seed, agent).
inline BackendMap make_mock_backends(const Roster& roster, std::uint64_t seed) {
    BackendMap out;
    SplitStream root(seed);
    for (std::size_t i = 0; i < roster.agents.size(); ++i) {
        const AgentSpec& spec = roster.agents[i];
        out.emplace(spec.id, std::make_unique<MockBackend>(
                                 spec, roster.mock, root.derive(i)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Orchestrator
// ---------------------------------------------------------------------------

struct ConvergencePolicy {
    int min_rounds = 3;
    int max_rounds = 10;
    double edit_distance_threshold = 0.05;

    void validate() const {
        if (min_rounds < 1 || min_rounds > max_rounds)
            throw config_error("need 1 <= min_rounds <= max_rounds");
        if (!(edit_distance_threshold >= 0.0 && edit_distance_threshold <= 1.0))
            throw config_error("edit_distance_threshold must lie in [0,1]");
    }
};

struct FooConfig {
    ConvergencePolicy policy;
    std::uint64_t seed = 0;
    bool enable_critique = true;     // off: control run, no cross-examination
    std::string fixed_timestamp;     // empty: wall clock per block
};

struct RoundRecord {
    static constexpr int kSchemaVersion = 1;

    int round = 0;
    std::vector<Answer> snapshot;    // answers as critiqued this round
    std::vector<Critique> critiques;
    Judgement judgement;
    std::vector<Answer> revisions;
    std::map<std::string, std::vector<std::size_t>> applied_flags;
    double convergence_metric = 0.0;

    nlohmann::json to_json() const {
        auto answers_json = [](const std::vector<Answer>& list) {
            nlohmann::json out = nlohmann::json::array();
            for (const Answer& a : list) out.push_back({{"agent", a.agent}, {"text", a.text}});
            return out;
        };
        nlohmann::json critiques_json = nlohmann::json::array();
        for (const Critique& c : critiques)
            critiques_json.push_back({{"critic", c.critic},
                                      {"target", c.target},
                                      {"flagged", c.flagged},
                                      {"text", c.text}});
        return {{"schema_version", kSchemaVersion},
                {"round", round},
                {"answers", answers_json(snapshot)},
                {"critiques", std::move(critiques_json)},
                {"judgement", judgement.to_json()},
                {"revisions", answers_json(revisions)},
                {"convergence_metric", convergence_metric}};
    }
};

struct FooResult {
    Judgement final_judgement;
    std::vector<Answer> initial_answers;
    std::vector<RoundRecord> history;
    Ledger run_ledger{Ledger::genesis("unset")};
    std::map<std::string, Ledger> agent_ledgers;
    int backend_calls = 0;
    int rounds = 0;
    bool converged = false;
    bool aborted = false;
    std::string abort_reason;

    nlohmann::json history_to_json() const {
        nlohmann::json rounds_json = nlohmann::json::array();
        for (const RoundRecord& r : history) rounds_json.push_back(r.to_json());
        return rounds_json;
    }
};

// Consensus loop: broadcast once, then consensus rounds until the revised
// answers stop moving (normalized edit distance at or below the policy
// threshold, after min_rounds) or max_rounds is reached.
//
// Each consensus round costs one backend call per active agent: specialists
// critique every peer answer and revise their own conditioned on the
// previous round's judgement; harmonizers critique and fold the full
// critique pool into this round's judgement. Every completed interaction is
// appended to the run ledger (and to the acting agent's own ledger) before
// the next phase begins.
class FooOrchestrator {
public:
    FooOrchestrator(Roster roster, FooConfig config, BackendMap backends)
        : roster_(std::move(roster)), config_(std::move(config)), backends_(std::move(backends)) {
        roster_.validate();
        config_.policy.validate();
        for (const AgentSpec& a : roster_.agents)
            if (backends_.find(a.id) == backends_.end())
                throw config_error("no backend registered for agent " + a.id);
    }

    FooResult run(const std::string& task) {
        if (task.empty()) throw domain_error("task must not be empty");
        FooResult result;
        result.run_ledger = Ledger::genesis(roster_.salt, genesis_timestamp());
        for (const AgentSpec& a : roster_.agents)
            result.agent_ledgers.emplace(a.id, Ledger::genesis(roster_.salt, genesis_timestamp()));

        active_.clear();
        for (const AgentSpec& a : roster_.agents) active_.insert(a.id);

        std::vector<Answer> answers = broadcast(task, result);
        if (!viable()) {
            abort_run(result, "too few active agents after broadcast");
            return result;
        }

        Judgement previous;
        for (int round = 1; round <= config_.policy.max_rounds; ++round) {
            RoundRecord rec = consensus_round(task, round, answers, previous, result);
            if (result.aborted) return result;
            result.rounds = round;
            previous = rec.judgement;
            double metric = rec.convergence_metric;
            result.history.push_back(std::move(rec));
            if (round >= config_.policy.min_rounds &&
                metric <= config_.policy.edit_distance_threshold) {
                result.converged = true;
                break;
            }
        }
        result.final_judgement = previous;
        return result;
    }

    // Initial answers, one backend call per agent; failures mark the agent
    // inactive for the rest of the run.
    std::vector<Answer> broadcast(const std::string& task, FooResult& result) {
        std::vector<std::optional<Answer>> slots(roster_.agents.size());
        parallel_over_agents(all_active(), [&](std::size_t i, const AgentSpec& spec) {
            try {
                slots[i] = backends_.at(spec.id)->initial_answer(task);
            } catch (const backend_error&) {
                deactivate(spec.id);
            }
        });
        std::vector<Answer> answers;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (!slots[i]) continue;
            log_interaction(result, roster_.agents[i].id, BlockKind::initial, slots[i]->text);
            answers.push_back(std::move(*slots[i]));
        }
        result.initial_answers = answers;
        result.backend_calls = calls_;
        return answers;
    }

private:
    std::string genesis_timestamp() const {
        return config_.fixed_timestamp.empty() ? std::string(kGenesisTimestamp)
                                               : config_.fixed_timestamp;
    }

    std::string block_timestamp() const {
        return config_.fixed_timestamp.empty() ? now_rfc3339_utc_ms() : config_.fixed_timestamp;
    }

    bool is_active(const std::string& id) const {
        std::lock_guard<std::mutex> lock(mutex_);
        return active_.count(id) > 0;
    }

    void deactivate(const std::string& id) {
        std::lock_guard<std::mutex> lock(mutex_);
        active_.erase(id);
    }

    std::vector<std::size_t> all_active() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < roster_.agents.size(); ++i)
            if (is_active(roster_.agents[i].id)) out.push_back(i);
        return out;
    }

    bool viable() const {
        std::size_t answers = 0;
        bool harmonizer = false, specialist = false;
        for (const AgentSpec& a : roster_.agents) {
            if (!is_active(a.id)) continue;
            ++answers;
            if (a.role == AgentRole::harmonizer) harmonizer = true;
            if (a.role == AgentRole::specialist) specialist = true;
        }
        return answers >= 2 && harmonizer && specialist;
    }

    void abort_run(FooResult& result, const std::string& reason) {
        result.aborted = true;
        result.abort_reason = reason;
        result.final_judgement =
            result.history.empty() ? Judgement{} : result.history.back().judgement;
    }

    void log_interaction(FooResult& result, const std::string& agent, BlockKind kind,
                         const std::string& message) {
        BlockPayload payload{agent, kind, message, block_timestamp()};
        result.run_ledger.append(payload);
        result.agent_ledgers.at(agent).append(std::move(payload));
    }

    // One future per listed agent; each call is counted as one backend call.
    // The index list is snapshotted before launch so concurrent
    // deactivations cannot race the traversal.
    void parallel_over_agents(const std::vector<std::size_t>& indices,
                              const std::function<void(std::size_t, const AgentSpec&)>& body) {
        calls_ += static_cast<int>(indices.size());
        std::vector<std::future<void>> futs;
        futs.reserve(indices.size());
        for (std::size_t i : indices)
            futs.push_back(std::async(std::launch::async,
                                      [&, i] { body(i, roster_.agents[i]); }));
        for (auto& f : futs) f.get();
    }

    RoundRecord consensus_round(const std::string& task, int round,
                                std::vector<Answer>& answers, const Judgement& previous,
                                FooResult& result) {
        RoundRecord rec;
        rec.round = round;
        rec.snapshot = active_answers(answers);

        // Specialist phase: critique + revise, one call each, in parallel.
        std::vector<std::optional<SpecialistTurn>> turns(roster_.agents.size());
        std::vector<std::size_t> specialists;
        for (std::size_t i : all_active())
            if (roster_.agents[i].role == AgentRole::specialist) specialists.push_back(i);
        parallel_over_agents(specialists, [&](std::size_t i, const AgentSpec& spec) {
            try {
                const std::vector<Answer> view =
                    config_.enable_critique ? rec.snapshot : own_only(rec.snapshot, spec.id);
                turns[i] = backends_.at(spec.id)->specialist_turn(task, round, view, previous);
            } catch (const backend_error&) {
                deactivate(spec.id);
            }
        });

        std::vector<Critique> pool;
        for (std::size_t i = 0; i < turns.size(); ++i)
            if (turns[i])
                pool.insert(pool.end(), turns[i]->critiques.begin(), turns[i]->critiques.end());

        // Harmonizer phase after the specialists' barrier: supporting
        // harmonizers contribute critiques, then the lead folds the full
        // pool into this round's judgement.
        std::vector<std::size_t> harmonizers;
        for (std::size_t i : all_active())
            if (roster_.agents[i].role == AgentRole::harmonizer) harmonizers.push_back(i);
        if (harmonizers.size() > 1)
            std::rotate(harmonizers.begin(), harmonizers.begin() + 1, harmonizers.end());

        Judgement judgement;
        bool have_judgement = false;
        std::string lead;
        for (std::size_t i : harmonizers) {
            const AgentSpec& spec = roster_.agents[i];
            bool is_lead = (i == harmonizers.back());
            ++calls_;
            try {
                const std::vector<Answer> view =
                    config_.enable_critique ? rec.snapshot : own_only(rec.snapshot, spec.id);
                HarmonizerTurn turn =
                    backends_.at(spec.id)->harmonizer_turn(task, round, view, pool);
                pool.insert(pool.end(), turn.critiques.begin(), turn.critiques.end());
                if (is_lead) {
                    judgement = std::move(turn.judgement);
                    have_judgement = true;
                    lead = spec.id;
                }
            } catch (const backend_error&) {
                deactivate(spec.id);
            }
        }

        // Log completed interactions in roster order, then check viability.
        rec.critiques = order_critiques(pool);
        for (const Critique& c : rec.critiques)
            log_interaction(result, c.critic, BlockKind::critique, c.text);
        if (have_judgement) {
            rec.judgement = std::move(judgement);
            rec.judgement.round = round;
            log_interaction(result, lead, BlockKind::harmonization, rec.judgement.to_json().dump());
        }

        double metric = 0.0;
        for (std::size_t i = 0; i < turns.size(); ++i) {
            if (!turns[i]) continue;
            const AgentSpec& spec = roster_.agents[i];
            rec.applied_flags[spec.id] = previous.flaws_for(spec.id);
            const Answer* before = find_answer(rec.snapshot, spec.id);
            Answer revised = std::move(turns[i]->revision);
            if (before != nullptr)
                metric = std::max(metric, normalized_edit_distance(before->text, revised.text));
            log_interaction(result, spec.id, BlockKind::revision, revised.text);
            rec.revisions.push_back(revised);
            replace_answer(answers, std::move(revised));
        }
        rec.convergence_metric = metric;
        result.backend_calls = calls_;

        if (!have_judgement || !viable()) {
            result.history.push_back(rec);
            abort_run(result, !have_judgement ? "harmonizer failed" : "too few active agents");
        }
        return rec;
    }

    std::vector<Answer> active_answers(const std::vector<Answer>& answers) const {
        std::vector<Answer> out;
        for (const Answer& a : answers)
            if (is_active(a.agent)) out.push_back(a);
        return out;
    }

    static std::vector<Answer> own_only(const std::vector<Answer>& answers,
                                        const std::string& id) {
        for (const Answer& a : answers)
            if (a.agent == id) return {a};
        return {};
    }

    static const Answer* find_answer(const std::vector<Answer>& answers, const std::string& id) {
        for (const Answer& a : answers)
            if (a.agent == id) return &a;
        return nullptr;
    }

    static void replace_answer(std::vector<Answer>& answers, Answer&& revised) {
        for (Answer& a : answers)
            if (a.agent == revised.agent) {
                a = std::move(revised);
                return;
            }
    }

    // Roster order for critics, then targets; keeps ledger bytes independent
    // of phase scheduling.
    std::vector<Critique> order_critiques(std::vector<Critique> pool) const {
        std::map<std::string, std::size_t> rank;
        for (std::size_t i = 0; i < roster_.agents.size(); ++i)
            rank[roster_.agents[i].id] = i;
        std::stable_sort(pool.begin(), pool.end(), [&](const Critique& a, const Critique& b) {
            auto ka = std::pair{rank.at(a.critic), rank.at(a.target)};
            auto kb = std::pair{rank.at(b.critic), rank.at(b.target)};
            return ka < kb;
        });
        return pool;
    }

    Roster roster_;
    FooConfig config_;
    BackendMap backends_;
    std::set<std::string> active_;
    mutable std::mutex mutex_;
    int calls_ = 0;
};

// Convenience entry point: mock backends, run, done.
inline FooResult run_foo(const std::string& task, const Roster& roster, FooConfig config) {
    FooOrchestrator orch(roster, config, make_mock_backends(roster, config.seed));
    return orch.run(task);
}

// ---------------------------------------------------------------------------
// Hazard estimation from a recorded run
// ---------------------------------------------------------------------------

struct HazardEstimates {
    double lambda_hat = 0.0;
    double q_hat = 0.0;
    double d_hat = 0.0;
    std::int64_t fabrication_opportunities = 0;
    std::int64_t repair_opportunities = 0;
    std::int64_t detection_opportunities = 0;
};

// Frequency estimates of the mock hazards from a run's history. Requires
// statement-level ground truth, i.e. mock backends; remote histories raise
// unsupported_error.
inline HazardEstimates estimate_empirical_hazards(const std::vector<RoundRecord>& history) {
    if (history.size() < 2)
        throw domain_error("hazard estimation needs at least two recorded rounds");
    std::int64_t fab = 0, fab_opp = 0, rep = 0, rep_opp = 0, det = 0, det_opp = 0;
    for (const RoundRecord& rec : history) {
        for (const Answer& post : rec.revisions) {
            const Answer* pre = nullptr;
            for (const Answer& s : rec.snapshot)
                if (s.agent == post.agent) pre = &s;
            if (pre == nullptr) continue;
            if (pre->truth.empty() || post.truth.empty())
                throw unsupported_error(
                    "hazard estimation requires statement-level ground truth (mock backends)");
            const auto it = rec.applied_flags.find(post.agent);
            std::set<std::size_t> flags;
            if (it != rec.applied_flags.end()) flags.insert(it->second.begin(), it->second.end());
            for (std::size_t i = 0; i < pre->truth.size(); ++i) {
                if (pre->truth[i] || flags.count(i)) {
                    ++fab_opp;
                    if (!post.truth[i]) ++fab;
                } else {
                    ++rep_opp;
                    if (post.truth[i]) ++rep;
                }
            }
        }
        for (const Critique& c : rec.critiques) {
            const Answer* target = nullptr;
            for (const Answer& s : rec.snapshot)
                if (s.agent == c.target) target = &s;
            if (target == nullptr) continue;
            if (target->truth.empty())
                throw unsupported_error(
                    "hazard estimation requires statement-level ground truth (mock backends)");
            for (bool b : target->truth) det_opp += b ? 0 : 1;
            det += static_cast<std::int64_t>(c.flagged.size());
        }
    }
    HazardEstimates out;
    out.fabrication_opportunities = fab_opp;
    out.repair_opportunities = rep_opp;
    out.detection_opportunities = det_opp;
    if (fab_opp > 0) out.lambda_hat = static_cast<double>(fab) / static_cast<double>(fab_opp);
    if (rep_opp > 0) out.q_hat = static_cast<double>(rep) / static_cast<double>(rep_opp);
    if (det_opp > 0) out.d_hat = static_cast<double>(det) / static_cast<double>(det_opp);
    return out;
}

}  // namespace discnet

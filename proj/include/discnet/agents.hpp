#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "discnet/errors.hpp"

namespace discnet {

enum class AgentRole { specialist, harmonizer };
enum class BackendKind { mock, remote };

inline std::string_view to_string(AgentRole r) {
    return r == AgentRole::harmonizer ? "harmonizer" : "specialist";
}

inline std::string_view to_string(BackendKind b) {
    return b == BackendKind::remote ? "remote" : "mock";
}

// One agent of the ensemble: an id, a role in the loop, and the backend that
// answers for it. Remote agents name an HTTP endpoint plus the environment
// variable holding their bearer token; the token itself never appears in
// configuration.
struct AgentSpec {
    std::string id;
    AgentRole role = AgentRole::specialist;
    BackendKind backend = BackendKind::mock;
    std::string model;
    double temperature = 0.0;
    std::string instructions;
    std::string endpoint;  // URL, remote backends only
    std::string auth_env;  // name of the env var holding the token
};

// Statement-level behaviour of mock agents: each answer carries `statements`
// claims; per consensus round a true claim turns false with probability
// lambda, an unflagged false claim self-repairs with probability q, and a
// critic notices a peer's false claim with probability d.
struct MockModelParams {
    std::int64_t statements = 50;
    double lambda = 0.0;
    double q = 0.0;
    double d = 0.0;

    void validate() const {
        if (statements < 1) throw config_error("mock answers need at least one statement");
        if (!(lambda >= 0.0 && lambda <= 1.0))
            throw config_error("mock lambda must lie in [0,1]");
        if (!(q >= 0.0 && q <= 1.0)) throw config_error("mock q must lie in [0,1]");
        if (!(d >= 0.0 && d <= 1.0)) throw config_error("mock d must lie in [0,1]");
    }
};

// Run configuration read from a single JSON document: the agent roster, the
// ledger salt, and the mock-model hazards.
struct Roster {
    std::vector<AgentSpec> agents;
    std::string salt;
    MockModelParams mock;

    void validate() const {
        if (agents.empty()) throw config_error("agent roster is empty");
        std::set<std::string> ids;
        bool specialist = false, harmonizer = false;
        for (const AgentSpec& a : agents) {
            if (a.id.empty()) throw config_error("agent id must not be empty");
            if (!ids.insert(a.id).second)
                throw config_error("duplicate agent id: " + a.id);
            if (a.role == AgentRole::harmonizer) harmonizer = true;
            if (a.role == AgentRole::specialist) specialist = true;
            if (a.temperature < 0.0)
                throw config_error("agent temperature must be >= 0: " + a.id);
            if (a.backend == BackendKind::remote && a.endpoint.empty())
                throw config_error("remote agent needs an endpoint: " + a.id);
        }
        if (!harmonizer) throw config_error("roster needs at least one harmonizer");
        if (!specialist) throw config_error("roster needs at least one specialist");
        if (salt.empty()) throw config_error("roster must carry a non-empty ledger salt");
        mock.validate();
    }

    const AgentSpec& lead_harmonizer() const {
        for (const AgentSpec& a : agents)
            if (a.role == AgentRole::harmonizer) return a;
        throw config_error("roster has no harmonizer");
    }
};

inline AgentRole agent_role_from_string(const std::string& s) {
    if (s == "specialist") return AgentRole::specialist;
    if (s == "harmonizer") return AgentRole::harmonizer;
    throw config_error("unknown agent role: " + s);
}

inline BackendKind backend_kind_from_string(const std::string& s) {
    if (s == "mock") return BackendKind::mock;
    if (s == "remote") return BackendKind::remote;
    throw config_error("unknown backend kind: " + s);
}

inline Roster roster_from_json(const nlohmann::json& j) {
    Roster roster;
    try {
        roster.salt = j.value("salt", std::string());
        if (j.contains("mock")) {
            const auto& m = j.at("mock");
            roster.mock.statements = m.value("statements", roster.mock.statements);
            roster.mock.lambda = m.value("lambda", roster.mock.lambda);
            roster.mock.q = m.value("q", roster.mock.q);
            roster.mock.d = m.value("d", roster.mock.d);
        }
        for (const auto& a : j.at("agents")) {
            AgentSpec spec;
            spec.id = a.at("id").get<std::string>();
            spec.role = agent_role_from_string(a.at("role").get<std::string>());
            spec.backend = backend_kind_from_string(a.at("backend").get<std::string>());
            spec.model = a.value("model", std::string());
            spec.temperature = a.value("temperature", 0.0);
            spec.instructions = a.value("instructions", std::string());
            spec.endpoint = a.value("endpoint", std::string());
            spec.auth_env = a.value("auth_env", std::string());
            roster.agents.push_back(std::move(spec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("bad roster document: ") + e.what());
    }
    roster.validate();
    return roster;
}

inline Roster load_roster(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open roster file: " + path.string());
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded()) throw config_error("roster file is not valid JSON: " + path.string());
    return roster_from_json(j);
}

inline nlohmann::json roster_to_json(const Roster& roster) {
    nlohmann::json agents = nlohmann::json::array();
    for (const AgentSpec& a : roster.agents) {
        nlohmann::json spec{{"id", a.id},
                            {"role", std::string(to_string(a.role))},
                            {"backend", std::string(to_string(a.backend))},
                            {"model", a.model},
                            {"temperature", a.temperature},
                            {"instructions", a.instructions}};
        if (!a.endpoint.empty()) spec["endpoint"] = a.endpoint;
        if (!a.auth_env.empty()) spec["auth_env"] = a.auth_env;
        agents.push_back(std::move(spec));
    }
    return {{"salt", roster.salt},
            {"agents", std::move(agents)},
            {"mock",
             {{"statements", roster.mock.statements},
              {"lambda", roster.mock.lambda},
              {"q", roster.mock.q},
              {"d", roster.mock.d}}}};
}

}  // namespace discnet

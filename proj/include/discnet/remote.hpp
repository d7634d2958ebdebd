#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "discnet/agents.hpp"
#include "discnet/errors.hpp"
#include "discnet/foo.hpp"

namespace discnet {

// Tunables of the remote adapter. The retry budget is fixed at two retries
// with exponential backoff; tests shrink the backoff base.
struct RemoteOptions {
    int retries = 2;
    int backoff_base_ms = 250;
    int timeout_seconds = 30;
};

// HTTP backend speaking the chat wire contract: the request is a JSON object
// {model, temperature, messages:[{role, content}...]}; the response must
// carry a text completion in one of the common provider shapes. Structured
// turn output is requested as JSON inside the completion text.
class RemoteBackend : public AgentBackend {
public:
    RemoteBackend(AgentSpec spec, RemoteOptions options = {})
        : spec_(std::move(spec)), options_(options) {
        split_url(spec_.endpoint, base_, path_);
    }

    Answer initial_answer(const std::string& task) override {
        std::string text = complete(build_messages(task));
        return {spec_.id, {}, text};
    }

    SpecialistTurn specialist_turn(const std::string& task, int round,
                                   const std::vector<Answer>& answers,
                                   const Judgement& previous) override {
        std::string user = task;
        if (!previous.per_answer.empty() || !previous.text.empty()) {
            user += "\n\nJudgement of the previous round:\n";
            user += previous.text.empty() ? previous.to_json().dump() : previous.text;
        }
        user += "\n\nfind the flaws in the following peer answers (never your own):\n";
        for (const Answer& a : answers) {
            if (a.agent == spec_.id) continue;
            user += "\n### answer of " + a.agent + "\n" + a.text + "\n";
        }
        user +=
            "\nRespond with a single JSON object of the form "
            "{\"critiques\":[{\"target\":\"<agent id>\",\"text\":\"...\"}],"
            "\"revision\":\"<your full revised answer>\"}.";
        nlohmann::json parsed = complete_json(build_messages(task, user));

        SpecialistTurn turn;
        turn.revision = {spec_.id, {}, parsed.value("revision", std::string())};
        if (parsed.contains("critiques")) {
            for (const auto& c : parsed.at("critiques")) {
                std::string target = c.value("target", std::string());
                if (target.empty() || target == spec_.id) continue;
                turn.critiques.push_back(
                    {spec_.id, target, {}, c.value("text", std::string())});
            }
        }
        (void)round;
        return turn;
    }

    HarmonizerTurn harmonizer_turn(const std::string& task, int round,
                                   const std::vector<Answer>& answers,
                                   const std::vector<Critique>& critiques) override {
        std::string user = task;
        user += "\n\nCurrent answers:\n";
        for (const Answer& a : answers)
            user += "\n### answer of " + a.agent + "\n" + a.text + "\n";
        user += "\nCritiques collected this round:\n";
        for (const Critique& c : critiques)
            user += "\n- " + c.critic + " on " + c.target + ": " + c.text;
        user +=
            "\n\nfind the flaws in the answers above (never your own), separate "
            "agreements from contradictions, and respond with a single JSON object "
            "of the form {\"critiques\":[{\"target\":\"<agent id>\",\"text\":\"...\"}],"
            "\"judgement\":\"<structured synthesis>\"}.";
        nlohmann::json parsed = complete_json(build_messages(task, user));

        HarmonizerTurn turn;
        if (parsed.contains("critiques")) {
            for (const auto& c : parsed.at("critiques")) {
                std::string target = c.value("target", std::string());
                if (target.empty() || target == spec_.id) continue;
                turn.critiques.push_back(
                    {spec_.id, target, {}, c.value("text", std::string())});
            }
        }
        turn.judgement.round = round;
        turn.judgement.text = parsed.value("judgement", std::string());
        return turn;
    }

    // Completion text from the common provider response shapes.
    static std::string extract_completion(const nlohmann::json& response) {
        try {
            if (response.contains("choices") && !response.at("choices").empty()) {
                const auto& choice = response.at("choices").at(0);
                if (choice.contains("message"))
                    return choice.at("message").at("content").get<std::string>();
                if (choice.contains("text")) return choice.at("text").get<std::string>();
            }
            if (response.contains("content") && response.at("content").is_array() &&
                !response.at("content").empty())
                return response.at("content").at(0).at("text").get<std::string>();
            if (response.contains("completion"))
                return response.at("completion").get<std::string>();
            if (response.contains("text")) return response.at("text").get<std::string>();
        } catch (const nlohmann::json::exception&) {
        }
        throw backend_error("response carries no recognizable completion field");
    }

private:
    std::vector<std::pair<std::string, std::string>> build_messages(
        const std::string& task, const std::string& user_override = std::string()) const {
        std::vector<std::pair<std::string, std::string>> messages;
        if (!spec_.instructions.empty()) messages.emplace_back("system", spec_.instructions);
        messages.emplace_back("user", user_override.empty() ? task : user_override);
        return messages;
    }

    static void split_url(const std::string& url, std::string& base, std::string& path) {
        auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw config_error("endpoint URL needs a scheme: " + url);
        std::string scheme = url.substr(0, scheme_end);
        if (scheme != "http" && scheme != "https")
            throw config_error("unsupported endpoint scheme: " + scheme);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (scheme == "https")
            throw config_error("built without TLS support; use an http endpoint");
#endif
        auto path_start = url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            base = url;
            path = "/";
        } else {
            base = url.substr(0, path_start);
            path = url.substr(path_start);
        }
    }

    std::string complete(const std::vector<std::pair<std::string, std::string>>& messages) {
        nlohmann::json body{{"model", spec_.model}, {"temperature", spec_.temperature}};
        nlohmann::json msgs = nlohmann::json::array();
        for (const auto& [role, content] : messages)
            msgs.push_back({{"role", role}, {"content", content}});
        body["messages"] = std::move(msgs);

        std::string error;
        for (int attempt = 0; attempt <= options_.retries; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(
                    options_.backoff_base_ms * (1 << (attempt - 1))));
            httplib::Client client(base_);
            client.set_connection_timeout(options_.timeout_seconds, 0);
            client.set_read_timeout(options_.timeout_seconds, 0);
            httplib::Headers headers;
            if (!spec_.auth_env.empty()) {
                const char* token = std::getenv(spec_.auth_env.c_str());
                if (token == nullptr)
                    throw backend_error("auth environment variable not set: " + spec_.auth_env);
                headers.emplace("Authorization", std::string("Bearer ") + token);
            }
            auto res = client.Post(path_, headers, body.dump(), "application/json");
            if (!res) {
                error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                error = "HTTP status " + std::to_string(res->status);
                continue;
            }
            nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
            if (parsed.is_discarded()) {
                error = "response body is not JSON";
                continue;
            }
            return extract_completion(parsed);
        }
        throw backend_error("agent " + spec_.id + " failed after " +
                            std::to_string(options_.retries + 1) + " attempts: " + error);
    }

    // Completion parsed as a JSON object; tolerates surrounding prose by
    // extracting the outermost braces.
    nlohmann::json complete_json(const std::vector<std::pair<std::string, std::string>>& messages) {
        std::string text = complete(messages);
        nlohmann::json parsed = nlohmann::json::parse(text, nullptr, false);
        if (parsed.is_object()) return parsed;
        auto first = text.find('{');
        auto last = text.rfind('}');
        if (first != std::string::npos && last != std::string::npos && last > first) {
            parsed = nlohmann::json::parse(text.substr(first, last - first + 1), nullptr, false);
            if (parsed.is_object()) return parsed;
        }
        throw backend_error("agent " + spec_.id + " returned no parsable JSON turn");
    }

    AgentSpec spec_;
    RemoteOptions options_;
    std::string base_;
    std::string path_;
};

// Backends for a mixed roster: mock agents get deterministic statement
// models, remote agents the HTTP adapter.
inline BackendMap make_backends(const Roster& roster, std::uint64_t seed,
                                const RemoteOptions& options = {}) {
    BackendMap out;
    SplitStream root(seed);
    for (std::size_t i = 0; i < roster.agents.size(); ++i) {
        const AgentSpec& spec = roster.agents[i];
        if (spec.backend == BackendKind::remote)
            out.emplace(spec.id, std::make_unique<RemoteBackend>(spec, options));
        else
            out.emplace(spec.id,
                        std::make_unique<MockBackend>(spec, roster.mock, root.derive(i)));
    }
    return out;
}

}  // namespace discnet

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "discnet/errors.hpp"
#include "discnet/version.hpp"

namespace discnet {

// Record of one artifact-producing invocation: the subcommand, the full
// resolved parameter set, and where the outputs went. Replaying a manifest
// re-runs the same subcommand with the same parameters; simulation and mock
// workloads then reproduce their outputs byte for byte.
struct RunManifest {
    std::string subcommand;
    nlohmann::json parameters = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::string tool_version = kVersion;
    std::vector<std::string> outputs;

    nlohmann::json to_json() const {
        return {{"subcommand", subcommand},
                {"parameters", parameters},
                {"seed", seed},
                {"tool_version", tool_version},
                {"outputs", outputs}};
    }

    static RunManifest from_json(const nlohmann::json& j) {
        RunManifest m;
        try {
            m.subcommand = j.at("subcommand").get<std::string>();
            m.parameters = j.at("parameters");
            m.seed = j.at("seed").get<std::uint64_t>();
            m.tool_version = j.at("tool_version").get<std::string>();
            m.outputs = j.at("outputs").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw config_error(std::string("bad manifest: ") + e.what());
        }
        return m;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw config_error("cannot write manifest: " + path.string());
        os << to_json().dump(2) << '\n';
    }

    static RunManifest load(const std::filesystem::path& path) {
        std::ifstream is(path);
        if (!is) throw config_error("cannot open manifest: " + path.string());
        nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
        if (j.is_discarded())
            throw config_error("manifest is not valid JSON: " + path.string());
        return from_json(j);
    }
};

}  // namespace discnet

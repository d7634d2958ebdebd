// Command-line surface over the library: closed-form queries, agent
// planning, stochastic ensembles, FOO consensus runs, and ledger audits.
// Artifact-producing subcommands write a manifest next to their outputs;
// `replay` re-executes a manifest through the same code path, so simulation
// and mock workloads reproduce their artifacts byte for byte.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "discnet/agents.hpp"
#include "discnet/foo.hpp"
#include "discnet/information.hpp"
#include "discnet/ledger.hpp"
#include "discnet/manifest.hpp"
#include "discnet/markov.hpp"
#include "discnet/remote.hpp"
#include "discnet/simulation.hpp"
#include "discnet/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitTamper = 3;
constexpr int kExitBackend = 4;

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw discnet::config_error("cannot write file: " + path.string());
    os << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw discnet::config_error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void save_manifest(const std::string& subcommand, const json& params, std::uint64_t seed,
                   const std::vector<std::string>& outputs, const fs::path& path) {
    discnet::RunManifest manifest;
    manifest.subcommand = subcommand;
    manifest.parameters = params;
    manifest.seed = seed;
    manifest.outputs = outputs;
    manifest.save(path);
}

discnet::HazardParams hazards_from(const json& p) {
    return {p.at("p").get<double>(), p.at("q").get<double>(),
            p.at("lambda").get<double>()};
}

int run_calibration(const json&) {
    const auto& h = discnet::kCalibratedHazards;
    json out{{"p", h.p}, {"q", h.q}, {"lambda", h.lambda}, {"d", discnet::kCalibratedDetection.d}};
    std::cout << out.dump() << '\n';
    return kExitOk;
}

int run_fixed_point(const json& params) {
    discnet::HazardParams h = hazards_from(params);
    json out;
    if (params.at("cross").get<bool>()) {
        discnet::DetectionParams det{params.at("d").get<double>()};
        discnet::CrossEquilibrium eq =
            discnet::cross_fixed_point(h, det, params.at("consistency_tol").get<double>());
        out = {{"pi_r", eq.pi_r},
               {"pi_f", eq.pi_f},
               {"lambda_residual", eq.lambda_residual},
               {"exact", eq.exact}};
    } else {
        discnet::ProportionState eq = discnet::fixed_point(h);
        out = {{"pi_r", eq.pi_r}, {"pi_f", eq.pi_f}};
    }
    std::string rendered = out.dump();
    std::cout << rendered << '\n';
    if (!params.at("out").get<std::string>().empty()) {
        fs::path path = params.at("out").get<std::string>();
        write_file(path, rendered + "\n");
        save_manifest("fixed-point", params, 0, {path.string()},
                      path.string() + ".manifest.json");
    }
    return kExitOk;
}

int run_floor(const json& params) {
    double floor = discnet::invalidation_floor(
        {params.at("q_corpus").get<double>(), params.at("kl").get<double>()});
    json out{{"q_corpus", params.at("q_corpus")}, {"kl", params.at("kl")}, {"floor", floor}};
    std::string rendered = out.dump();
    std::cout << rendered << '\n';
    if (!params.at("out").get<std::string>().empty()) {
        fs::path path = params.at("out").get<std::string>();
        write_file(path, rendered + "\n");
        save_manifest("floor", params, 0, {path.string()}, path.string() + ".manifest.json");
    }
    return kExitOk;
}

int run_plan_agents(const json& params) {
    discnet::HazardParams h = hazards_from(params);
    discnet::DetectionParams det{params.at("d").get<double>()};
    double eps = params.at("eps").get<double>();
    std::int64_t n_min = discnet::min_agents(h, det, eps);
    std::int64_t table_rows =
        std::max<std::int64_t>(params.at("max_n").get<std::int64_t>(), n_min + 3);

    std::ostringstream csv;
    csv << "n,pi_f\n";
    for (std::int64_t n = 1; n <= table_rows; ++n)
        csv << n << ',' << discnet::format_double(discnet::false_share_with_agents(h, det, n))
            << '\n';

    fs::path path = params.at("out").get<std::string>();
    write_file(path, csv.str());
    save_manifest("plan-agents", params, 0, {path.string()}, path.string() + ".manifest.json");

    json out{{"eps", eps},
             {"n_min", n_min},
             {"false_share_at_n_min", discnet::false_share_with_agents(h, det, n_min)},
             {"csv", path.string()}};
    std::cout << out.dump() << '\n';
    return kExitOk;
}

discnet::SimConfig sim_config_from(const json& params) {
    discnet::SimConfig cfg;
    cfg.actors = params.at("actors").get<std::int64_t>();
    cfg.steps = params.at("steps").get<std::int64_t>();
    cfg.runs = params.at("runs").get<std::int64_t>();
    cfg.seed = params.at("seed").get<std::uint64_t>();
    cfg.initial_true_fraction = params.at("initial_true_fraction").get<double>();
    return cfg;
}

int run_simulate(const json& params) {
    discnet::SimConfig cfg = sim_config_from(params);
    discnet::HazardParams h = hazards_from(params);
    bool dual = params.at("dual").get<bool>();
    fs::path out_path = params.at("out").get<std::string>();
    std::vector<std::string> outputs{out_path.string()};

    std::ostringstream csv;
    json summary_json;
    double final_pi_f = 0.0;
    if (dual) {
        discnet::DetectionParams det{params.at("d").get<double>()};
        discnet::DualEnsembleSummary summary =
            discnet::run_ensemble_dual(cfg, discnet::DualHazards::symmetric(h), det);
        discnet::write_dual_ensemble_csv(csv, summary);
        summary_json = discnet::dual_ensemble_to_json(summary);
        final_pi_f = summary.network1.final_step().mean_pi_f;
    } else {
        discnet::EnsembleSummary summary = discnet::run_ensemble(cfg, h);
        discnet::write_ensemble_csv(csv, summary);
        summary_json = discnet::ensemble_to_json(summary);
        final_pi_f = summary.final_step().mean_pi_f;
    }
    write_file(out_path, csv.str());

    std::string json_out = params.at("json").get<std::string>();
    if (!json_out.empty()) {
        write_file(json_out, summary_json.dump(2) + "\n");
        outputs.push_back(json_out);
    }
    save_manifest(dual ? "simulate-dual" : "simulate-single", params, cfg.seed, outputs,
                  out_path.string() + ".manifest.json");

    json out{{"out", out_path.string()}, {"final_mean_pi_f", final_pi_f}};
    std::cout << out.dump() << '\n';
    return kExitOk;
}

int run_foo_cmd(const json& params) {
    discnet::Roster roster = discnet::load_roster(params.at("config").get<std::string>());
    std::string task = read_file(params.at("task").get<std::string>());

    discnet::FooConfig config;
    config.seed = params.at("seed").get<std::uint64_t>();
    config.policy.min_rounds = params.at("min_rounds").get<int>();
    config.policy.max_rounds = params.at("max_rounds").get<int>();
    config.policy.edit_distance_threshold = params.at("threshold").get<double>();
    config.enable_critique = !params.at("no_critique").get<bool>();
    config.fixed_timestamp = params.at("timestamp").get<std::string>();

    discnet::FooOrchestrator orch(roster, config,
                                  discnet::make_backends(roster, config.seed));
    discnet::FooResult result = orch.run(task);

    fs::path dir = params.at("out_dir").get<std::string>();
    fs::create_directories(dir);
    std::vector<std::string> outputs;
    auto emit = [&](const fs::path& name, const std::string& content) {
        fs::path p = dir / name;
        write_file(p, content);
        outputs.push_back(p.string());
    };
    emit("judgement.json", result.final_judgement.to_json().dump(2) + "\n");
    emit("history.json", result.history_to_json().dump(2) + "\n");
    result.run_ledger.save(dir / "run_ledger.jsonl");
    outputs.push_back((dir / "run_ledger.jsonl").string());
    for (const auto& [agent, ledger] : result.agent_ledgers) {
        fs::path p = dir / ("agent_" + agent + ".ledger.jsonl");
        ledger.save(p);
        outputs.push_back(p.string());
    }
    save_manifest("foo-run", params, config.seed, outputs, dir / "manifest.json");

    discnet::VerifyResult verdict = result.run_ledger.verify();
    json out{{"rounds", result.rounds},
             {"converged", result.converged},
             {"backend_calls", result.backend_calls},
             {"ledger_blocks", result.run_ledger.size()},
             {"ledger_verdict", verdict.message},
             {"out_dir", dir.string()}};
    if (result.aborted) out["abort_reason"] = result.abort_reason;
    std::cout << out.dump() << '\n';

    if (!verdict.ok) {
        std::cerr << discnet::kTamperBanner << '\n';
        return kExitTamper;
    }
    return result.aborted ? kExitBackend : kExitOk;
}

int run_ledger_verify(const json& params) {
    std::string salt = params.at("salt").get<std::string>();
    if (salt.empty()) {
        std::string roster_path = params.at("config").get<std::string>();
        if (roster_path.empty())
            throw discnet::config_error("ledger verify needs --salt or --config");
        salt = discnet::load_roster(roster_path).salt;
    }
    auto [ledger, verdict] =
        discnet::Ledger::load(params.at("file").get<std::string>(), salt);
    std::cout << verdict.message << '\n';
    if (!verdict.ok) {
        std::cerr << discnet::kTamperBanner << '\n';
        return kExitTamper;
    }
    return kExitOk;
}

int execute(const std::string& subcommand, const json& params) {
    if (subcommand == "calibration") return run_calibration(params);
    if (subcommand == "fixed-point") return run_fixed_point(params);
    if (subcommand == "floor") return run_floor(params);
    if (subcommand == "plan-agents") return run_plan_agents(params);
    if (subcommand == "simulate-single" || subcommand == "simulate-dual")
        return run_simulate(params);
    if (subcommand == "foo-run") return run_foo_cmd(params);
    if (subcommand == "ledger-verify") return run_ledger_verify(params);
    throw discnet::config_error("unknown subcommand in manifest: " + subcommand);
}

int run_replay(const fs::path& manifest_path) {
    discnet::RunManifest manifest = discnet::RunManifest::load(manifest_path);
    return execute(manifest.subcommand, manifest.parameters);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"discursive-network invalidation models, FOO consensus, and tamper-evident ledgers"};
    app.set_version_flag("--version", discnet::kVersion);
    app.require_subcommand(1);

    std::string pending;   // subcommand to execute after parsing
    json params;

    // calibration
    app.add_subcommand("calibration", "Print the default hazard profile")
        ->callback([&] { pending = "calibration"; });

    // fixed-point
    {
        auto* cmd = app.add_subcommand("fixed-point",
                                       "Closed-form stationary shares of the belief chain");
        auto p = std::make_shared<json>(json{{"p", discnet::kCalibratedHazards.p},
                                             {"q", discnet::kCalibratedHazards.q},
                                             {"lambda", discnet::kCalibratedHazards.lambda},
                                             {"d", discnet::kCalibratedDetection.d},
                                             {"cross", false},
                                             {"consistency_tol",
                                              discnet::kDefaultConsistencyTolerance},
                                             {"out", ""}});
        cmd->add_option_function<double>(
               "--p", [p](double v) { (*p)["p"] = v; }, "true->false slip hazard");
        cmd->add_option_function<double>(
               "--q", [p](double v) { (*p)["q"] = v; }, "false->true repair hazard");
        cmd->add_option_function<double>(
               "--lambda", [p](double v) { (*p)["lambda"] = v; }, "fabrication hazard");
        cmd->add_option_function<double>(
               "--d", [p](double v) { (*p)["d"] = v; }, "cross-network detection probability");
        cmd->add_flag_function(
               "--cross", [p](std::int64_t) { (*p)["cross"] = true; },
               "report the cross-network mean fixed point");
        cmd->add_option_function<double>(
               "--consistency-tol", [p](double v) { (*p)["consistency_tol"] = v; },
               "relative tolerance on lambda vs d*p/(p+q)");
        cmd->add_option_function<std::string>(
               "--out", [p](std::string v) { (*p)["out"] = v; }, "also write the JSON here");
        cmd->callback([&, p] {
            pending = "fixed-point";
            params = *p;
        });
    }

    // floor
    {
        auto* cmd = app.add_subcommand("floor", "Invalidation floor q*exp(-KL/q)");
        auto p = std::make_shared<json>(json{{"q_corpus", 0.0}, {"kl", 0.0}, {"out", ""}});
        cmd->add_option_function<double>(
               "--q", [p](double v) { (*p)["q_corpus"] = v; },
               "fraction of corpus mass on invalid sequences")
            ->required();
        cmd->add_option_function<double>(
               "--kl", [p](double v) { (*p)["kl"] = v; },
               "KL divergence from corpus to model, in nats")
            ->required();
        cmd->add_option_function<std::string>(
               "--out", [p](std::string v) { (*p)["out"] = v; }, "also write the JSON here");
        cmd->callback([&, p] {
            pending = "floor";
            params = *p;
        });
    }

    // plan-agents
    {
        auto* cmd = app.add_subcommand(
            "plan-agents", "Smallest agent count meeting a false-share tolerance");
        auto p = std::make_shared<json>(json{{"eps", 0.05},
                                             {"p", discnet::kCalibratedHazards.p},
                                             {"q", discnet::kCalibratedHazards.q},
                                             {"lambda", discnet::kCalibratedHazards.lambda},
                                             {"d", discnet::kCalibratedDetection.d},
                                             {"max_n", 12},
                                             {"out", "plan_agents.csv"}});
        cmd->add_option_function<double>(
               "--eps", [p](double v) { (*p)["eps"] = v; }, "target false share in (0,1)")
            ->required();
        cmd->add_option_function<double>(
               "--p", [p](double v) { (*p)["p"] = v; }, "true->false slip hazard");
        cmd->add_option_function<double>(
               "--q", [p](double v) { (*p)["q"] = v; }, "false->true repair hazard");
        cmd->add_option_function<double>(
               "--lambda", [p](double v) { (*p)["lambda"] = v; }, "fabrication hazard");
        cmd->add_option_function<double>(
               "--d", [p](double v) { (*p)["d"] = v; }, "per-partner detection probability");
        cmd->add_option_function<std::int64_t>(
               "--max-n", [p](std::int64_t v) { (*p)["max_n"] = v; },
               "minimum number of table rows");
        cmd->add_option_function<std::string>(
               "--out", [p](std::string v) { (*p)["out"] = v; }, "CSV output path");
        cmd->callback([&, p] {
            pending = "plan-agents";
            params = *p;
        });
    }

    // simulate single|dual
    {
        auto* sim = app.add_subcommand("simulate", "Seeded Monte Carlo ensembles");
        sim->require_subcommand(1);
        for (bool dual : {false, true}) {
            auto* cmd = sim->add_subcommand(
                dual ? "dual" : "single",
                dual ? "Two cross-detecting networks" : "One isolated network");
            auto p = std::make_shared<json>(
                json{{"dual", dual},
                     {"actors", 1000},
                     {"steps", dual ? 200 : 100},
                     {"runs", 20},
                     {"seed", 0},
                     {"initial_true_fraction", 1.0},
                     {"p", discnet::kCalibratedHazards.p},
                     {"q", discnet::kCalibratedHazards.q},
                     {"lambda", discnet::kCalibratedHazards.lambda},
                     {"d", discnet::kCalibratedDetection.d},
                     {"out", dual ? "simulate_dual.csv" : "simulate_single.csv"},
                     {"json", ""}});
            cmd->add_option_function<std::int64_t>(
                   "--actors", [p](std::int64_t v) { (*p)["actors"] = v; },
                   "actors per network");
            cmd->add_option_function<std::int64_t>(
                   "--steps", [p](std::int64_t v) { (*p)["steps"] = v; }, "time horizon");
            cmd->add_option_function<std::int64_t>(
                   "--runs", [p](std::int64_t v) { (*p)["runs"] = v; }, "ensemble size");
            cmd->add_option_function<std::uint64_t>(
                   "--seed", [p](std::uint64_t v) { (*p)["seed"] = v; },
                   "reproducibility seed");
            cmd->add_option_function<double>(
                   "--initial-true-fraction",
                   [p](double v) { (*p)["initial_true_fraction"] = v; },
                   "starting share of true endorsements");
            cmd->add_option_function<double>(
                   "--p", [p](double v) { (*p)["p"] = v; }, "true->false slip hazard");
            cmd->add_option_function<double>(
                   "--q", [p](double v) { (*p)["q"] = v; }, "false->true repair hazard");
            cmd->add_option_function<double>(
                   "--lambda", [p](double v) { (*p)["lambda"] = v; }, "fabrication hazard");
            if (dual)
                cmd->add_option_function<double>(
                       "--d", [p](double v) { (*p)["d"] = v; },
                       "cross-network detection probability");
            cmd->add_option_function<std::string>(
                   "--out", [p](std::string v) { (*p)["out"] = v; }, "CSV output path");
            cmd->add_option_function<std::string>(
                   "--json", [p](std::string v) { (*p)["json"] = v; },
                   "also write the ensemble summary as JSON");
            cmd->callback([&, p, dual] {
                pending = dual ? "simulate-dual" : "simulate-single";
                params = *p;
            });
        }
    }

    // foo run
    {
        auto* foo = app.add_subcommand("foo", "Flaws-of-Others consensus loop");
        foo->require_subcommand(1);
        auto* cmd = foo->add_subcommand("run", "Run the loop over a configured roster");
        auto p = std::make_shared<json>(json{{"config", ""},
                                             {"task", ""},
                                             {"out_dir", "foo_out"},
                                             {"seed", 0},
                                             {"min_rounds", 3},
                                             {"max_rounds", 10},
                                             {"threshold", 0.05},
                                             {"no_critique", false},
                                             {"timestamp", ""}});
        cmd->add_option_function<std::string>(
               "--config", [p](std::string v) { (*p)["config"] = v; },
               "roster JSON (agents, salt, mock hazards)")
            ->required();
        cmd->add_option_function<std::string>(
               "--task", [p](std::string v) { (*p)["task"] = v; }, "file holding the task text")
            ->required();
        cmd->add_option_function<std::string>(
               "--out-dir", [p](std::string v) { (*p)["out_dir"] = v; }, "output directory");
        cmd->add_option_function<std::uint64_t>(
               "--seed", [p](std::uint64_t v) { (*p)["seed"] = v; }, "reproducibility seed");
        cmd->add_option_function<int>(
               "--min-rounds", [p](int v) { (*p)["min_rounds"] = v; },
               "consensus rounds before convergence may stop the loop");
        cmd->add_option_function<int>(
               "--max-rounds", [p](int v) { (*p)["max_rounds"] = v; }, "hard round cap");
        cmd->add_option_function<double>(
               "--threshold", [p](double v) { (*p)["threshold"] = v; },
               "normalized edit distance under which answers count as converged");
        cmd->add_flag_function(
               "--no-critique", [p](std::int64_t) { (*p)["no_critique"] = true; },
               "control mode: skip cross-examination");
        cmd->add_option_function<std::string>(
               "--fixed-timestamp", [p](std::string v) { (*p)["timestamp"] = v; },
               "RFC3339 timestamp stamped on every ledger block (default: now, pinned in the manifest)");
        cmd->callback([&, p] {
            pending = "foo-run";
            params = *p;
            if (params.at("timestamp").get<std::string>().empty())
                params["timestamp"] = discnet::now_rfc3339_utc_ms();
        });
    }

    // ledger verify
    {
        auto* ledger = app.add_subcommand("ledger", "Tamper-evident ledger tools");
        ledger->require_subcommand(1);
        auto* cmd = ledger->add_subcommand("verify", "Re-hash a ledger file and report the verdict");
        auto p = std::make_shared<json>(json{{"file", ""}, {"salt", ""}, {"config", ""}});
        cmd->add_option_function<std::string>(
               "--file", [p](std::string v) { (*p)["file"] = v; }, "ledger JSONL file")
            ->required();
        cmd->add_option_function<std::string>(
               "--salt", [p](std::string v) { (*p)["salt"] = v; }, "ledger salt");
        cmd->add_option_function<std::string>(
               "--config", [p](std::string v) { (*p)["config"] = v; },
               "roster JSON supplying the salt");
        cmd->callback([&, p] {
            pending = "ledger-verify";
            params = *p;
        });
    }

    // replay
    std::string manifest_path;
    {
        auto* cmd = app.add_subcommand("replay", "Re-execute a recorded manifest");
        cmd->add_option("--manifest", manifest_path, "manifest JSON written by a previous run")
            ->required();
        cmd->callback([&] { pending = "replay"; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (pending == "replay") return run_replay(manifest_path);
        return execute(pending, params);
    } catch (const discnet::backend_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBackend;
    } catch (const discnet::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const discnet::parse_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const discnet::config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    }
}

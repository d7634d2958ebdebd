#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "discnet/errors.hpp"
#include "discnet/hazards.hpp"
#include "discnet/markov.hpp"
#include "discnet/rng.hpp"

namespace discnet {

// Integer actor counts of one network: t_count endorse the true statement,
// f_count the false one, and the two always sum to n.
struct NetworkState {
    std::int64_t n = 0;
    std::int64_t t_count = 0;
    std::int64_t f_count = 0;

    void validate() const {
        if (n < 1) throw domain_error("network must have at least one actor");
        if (t_count < 0 || f_count < 0 || t_count + f_count != n)
            throw domain_error("actor counts must be non-negative and sum to n");
    }

    ProportionState proportions() const {
        double nn = static_cast<double>(n);
        return {static_cast<double>(t_count) / nn, static_cast<double>(f_count) / nn};
    }
};

struct SimConfig {
    std::int64_t actors = 1000;
    std::int64_t steps = 100;
    std::int64_t runs = 20;
    std::uint64_t seed = 0;
    double initial_true_fraction = 1.0;

    void validate() const {
        if (actors < 1) throw domain_error("actors must be >= 1");
        if (steps < 0) throw domain_error("steps must be >= 0");
        if (runs < 1) throw domain_error("runs must be >= 1");
        if (!(initial_true_fraction >= 0.0 && initial_true_fraction <= 1.0))
            throw domain_error("initial_true_fraction must lie in [0,1]");
    }

    NetworkState initial_state() const {
        std::int64_t t = std::llround(initial_true_fraction * static_cast<double>(actors));
        t = std::clamp<std::int64_t>(t, 0, actors);
        return {actors, t, actors - t};
    }
};

// Per-network hazards of a coupled pair, with the symmetric case as the
// common constructor.
struct DualHazards {
    HazardParams network1;
    HazardParams network2;

    static DualHazards symmetric(const HazardParams& h) { return {h, h}; }

    void validate() const {
        network1.validate();
        network2.validate();
    }
};

struct Trajectory {
    std::vector<ProportionState> proportions;  // steps + 1 entries
    std::vector<NetworkState> states;          // raw counts, same indexing
};

struct DualTrajectory {
    Trajectory network1;
    Trajectory network2;
};

// One sampled step of the isolated network. Draw order is fixed as
// (Z, X, W): internal slips Z ~ Binomial(T, p), fabrications
// X ~ Poisson(lambda T) truncated so Z + X never exceeds T, repairs
// W ~ Binomial(F, q). Fabrication consumes true statements, so the actor
// count is conserved exactly.
inline NetworkState step_single(const NetworkState& s, const HazardParams& h,
                                SplitStream& rng) {
    std::int64_t z = rng.binomial(s.t_count, h.p);
    std::int64_t x = std::min(rng.poisson(h.lambda * static_cast<double>(s.t_count)),
                              s.t_count - z);
    std::int64_t w = rng.binomial(s.f_count, h.q);
    return {s.n, s.t_count - z - x + w, s.f_count + z + x - w};
}

// One sampled step of the cross-detecting pair. Each network k draws, in
// order, Z_k ~ Binomial(T_k, p_k), fabrications X_k ~ Poisson(lambda_k n_k)
// truncated at T_k - Z_k, repairs W_k ~ Binomial(F_k, q_k), and detections
// Y_k ~ Binomial(F_k, d) truncated so W_k + Y_k never exceeds F_k; network 1
// draws before network 2. Fabrication here scales with the actor count, the
// regime whose mean fixed point is the cross-network equilibrium lambda/d.
inline std::pair<NetworkState, NetworkState> step_dual(
    const std::pair<NetworkState, NetworkState>& s, const DualHazards& hz,
    const DetectionParams& det, SplitStream& rng) {
    auto advance = [&](const NetworkState& st, const HazardParams& h) {
        std::int64_t z = rng.binomial(st.t_count, h.p);
        std::int64_t x = std::min(rng.poisson(h.lambda * static_cast<double>(st.n)),
                                  st.t_count - z);
        std::int64_t w = rng.binomial(st.f_count, h.q);
        std::int64_t y = std::min(rng.binomial(st.f_count, det.d), st.f_count - w);
        return NetworkState{st.n, st.t_count - z - x + w + y,
                            st.f_count + z + x - w - y};
    };
    return {advance(s.first, hz.network1), advance(s.second, hz.network2)};
}

namespace detail {
// Streams are keyed (seed, run, step); draws inside a step consume the
// step substream's counter.
inline SplitStream run_stream(std::uint64_t seed, std::uint64_t run_index) {
    return SplitStream(seed).derive(run_index);
}
}  // namespace detail

inline Trajectory run_trajectory(const SimConfig& cfg, const HazardParams& h,
                                 std::uint64_t run_index = 0) {
    cfg.validate();
    h.validate();
    SplitStream run = detail::run_stream(cfg.seed, run_index);
    Trajectory out;
    out.states.reserve(cfg.steps + 1);
    out.proportions.reserve(cfg.steps + 1);
    NetworkState state = cfg.initial_state();
    out.states.push_back(state);
    out.proportions.push_back(state.proportions());
    for (std::int64_t t = 0; t < cfg.steps; ++t) {
        SplitStream step = run.derive(static_cast<std::uint64_t>(t));
        state = step_single(state, h, step);
        out.states.push_back(state);
        out.proportions.push_back(state.proportions());
    }
    return out;
}

inline DualTrajectory run_trajectory_dual(const SimConfig& cfg, const DualHazards& hz,
                                          const DetectionParams& det,
                                          std::uint64_t run_index = 0) {
    cfg.validate();
    hz.validate();
    det.validate();
    SplitStream run = detail::run_stream(cfg.seed, run_index);
    DualTrajectory out;
    std::pair<NetworkState, NetworkState> state{cfg.initial_state(), cfg.initial_state()};
    auto record = [&](const std::pair<NetworkState, NetworkState>& st) {
        out.network1.states.push_back(st.first);
        out.network1.proportions.push_back(st.first.proportions());
        out.network2.states.push_back(st.second);
        out.network2.proportions.push_back(st.second.proportions());
    };
    record(state);
    for (std::int64_t t = 0; t < cfg.steps; ++t) {
        SplitStream step = run.derive(static_cast<std::uint64_t>(t));
        state = step_dual(state, hz, det, step);
        record(state);
    }
    return out;
}

struct StepSummary {
    double mean_pi_r = 0.0;
    double mean_pi_f = 0.0;
    double ci_r = 0.0;  // 95% half-width, 1.96 sd / sqrt(runs)
    double ci_f = 0.0;
};

struct EnsembleSummary {
    std::int64_t runs = 0;
    std::vector<StepSummary> per_step;  // steps + 1 entries

    const StepSummary& final_step() const { return per_step.back(); }
};

struct DualEnsembleSummary {
    EnsembleSummary network1;
    EnsembleSummary network2;
};

namespace detail {

inline void for_each_run(std::int64_t runs, const std::function<void(std::int64_t)>& body) {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    unsigned workers = static_cast<unsigned>(std::min<std::int64_t>(runs, hw));
    if (workers <= 1) {
        for (std::int64_t r = 0; r < runs; ++r) body(r);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::future<void>> futs;
    futs.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        futs.push_back(std::async(std::launch::async, [&] {
            for (std::int64_t r = next.fetch_add(1); r < runs; r = next.fetch_add(1))
                body(r);
        }));
    for (auto& f : futs) f.get();
}

// Deterministic reduction across runs: results land in per-run slots, so
// the summary is independent of completion order.
inline EnsembleSummary summarize(const std::vector<std::vector<ProportionState>>& series,
                                 std::int64_t runs) {
    EnsembleSummary out;
    out.runs = runs;
    std::size_t len = series.front().size();
    out.per_step.resize(len);
    double rn = static_cast<double>(runs);
    for (std::size_t t = 0; t < len; ++t) {
        double mean_r = 0.0;
        for (std::int64_t r = 0; r < runs; ++r) mean_r += series[r][t].pi_r;
        mean_r /= rn;
        double mean_f = 0.0;
        for (std::int64_t r = 0; r < runs; ++r) mean_f += series[r][t].pi_f;
        mean_f /= rn;
        double var_r = 0.0, var_f = 0.0;
        for (std::int64_t r = 0; r < runs; ++r) {
            var_r += (series[r][t].pi_r - mean_r) * (series[r][t].pi_r - mean_r);
            var_f += (series[r][t].pi_f - mean_f) * (series[r][t].pi_f - mean_f);
        }
        var_r /= rn - 1.0;
        var_f /= rn - 1.0;
        out.per_step[t] = {mean_r, mean_f, 1.96 * std::sqrt(var_r / rn),
                           1.96 * std::sqrt(var_f / rn)};
    }
    return out;
}

}  // namespace detail

// Ensemble of independent runs; run r uses the substream derived for
// (seed, r). Runs execute in parallel; aggregation is deterministic.
inline EnsembleSummary run_ensemble(const SimConfig& cfg, const HazardParams& h) {
    cfg.validate();
    h.validate();
    if (cfg.runs < 2)
        throw config_error("ensembles need at least 2 runs for confidence intervals");
    std::vector<std::vector<ProportionState>> series(cfg.runs);
    detail::for_each_run(cfg.runs, [&](std::int64_t r) {
        series[r] = run_trajectory(cfg, h, static_cast<std::uint64_t>(r)).proportions;
    });
    return detail::summarize(series, cfg.runs);
}

inline DualEnsembleSummary run_ensemble_dual(const SimConfig& cfg, const DualHazards& hz,
                                             const DetectionParams& det) {
    cfg.validate();
    hz.validate();
    det.validate();
    if (cfg.runs < 2)
        throw config_error("ensembles need at least 2 runs for confidence intervals");
    std::vector<std::vector<ProportionState>> series1(cfg.runs), series2(cfg.runs);
    detail::for_each_run(cfg.runs, [&](std::int64_t r) {
        DualTrajectory t = run_trajectory_dual(cfg, hz, det, static_cast<std::uint64_t>(r));
        series1[r] = std::move(t.network1.proportions);
        series2[r] = std::move(t.network2.proportions);
    });
    return {detail::summarize(series1, cfg.runs), detail::summarize(series2, cfg.runs)};
}

// Shortest round-trip decimal form; keeps emitted artifacts byte-stable.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_ensemble_csv(std::ostream& os, const EnsembleSummary& summary) {
    os << "step,mean_pi_r,mean_pi_f,ci_r,ci_f\n";
    for (std::size_t t = 0; t < summary.per_step.size(); ++t) {
        const StepSummary& s = summary.per_step[t];
        os << t << ',' << format_double(s.mean_pi_r) << ',' << format_double(s.mean_pi_f)
           << ',' << format_double(s.ci_r) << ',' << format_double(s.ci_f) << '\n';
    }
}

inline void write_dual_ensemble_csv(std::ostream& os, const DualEnsembleSummary& summary) {
    os << "network,step,mean_pi_r,mean_pi_f,ci_r,ci_f\n";
    auto rows = [&](int network, const EnsembleSummary& e) {
        for (std::size_t t = 0; t < e.per_step.size(); ++t) {
            const StepSummary& s = e.per_step[t];
            os << network << ',' << t << ',' << format_double(s.mean_pi_r) << ','
               << format_double(s.mean_pi_f) << ',' << format_double(s.ci_r) << ','
               << format_double(s.ci_f) << '\n';
        }
    };
    rows(1, summary.network1);
    rows(2, summary.network2);
}

inline nlohmann::json ensemble_to_json(const EnsembleSummary& summary) {
    nlohmann::json steps = nlohmann::json::array();
    for (std::size_t t = 0; t < summary.per_step.size(); ++t) {
        const StepSummary& s = summary.per_step[t];
        steps.push_back({{"step", t},
                         {"mean_pi_r", s.mean_pi_r},
                         {"mean_pi_f", s.mean_pi_f},
                         {"ci_r", s.ci_r},
                         {"ci_f", s.ci_f}});
    }
    const StepSummary& fin = summary.final_step();
    return {{"runs", summary.runs},
            {"per_step", std::move(steps)},
            {"final", {{"step", summary.per_step.size() - 1},
                       {"mean_pi_r", fin.mean_pi_r},
                       {"mean_pi_f", fin.mean_pi_f},
                       {"ci_r", fin.ci_r},
                       {"ci_f", fin.ci_f}}}};
}

inline nlohmann::json dual_ensemble_to_json(const DualEnsembleSummary& summary) {
    return {{"networks",
             {ensemble_to_json(summary.network1), ensemble_to_json(summary.network2)}}};
}

}  // namespace discnet

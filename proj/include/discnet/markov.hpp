#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "discnet/errors.hpp"
#include "discnet/hazards.hpp"

namespace discnet {

// Normalized belief shares. pi_r is the fraction of actors endorsing the
// true statement, pi_f the false one; the two must sum to 1.
struct ProportionState {
    double pi_r = 1.0;
    double pi_f = 0.0;

    static constexpr double kSumTolerance = 1e-12;

    static ProportionState of(double pi_r, double pi_f) {
        if (!(pi_r >= 0.0 && pi_r <= 1.0 && pi_f >= 0.0 && pi_f <= 1.0))
            throw domain_error("proportions must lie in [0,1]");
        if (std::fabs(pi_r + pi_f - 1.0) > kSumTolerance)
            throw domain_error("proportions must sum to 1, got " +
                               std::to_string(pi_r + pi_f));
        return {pi_r, pi_f};
    }
};

// Column-stochastic 2x2 transition matrix over states (r, f).
// m[row][col]; column j holds the outflow distribution of state j.
struct TransitionMatrix {
    std::array<std::array<double, 2>, 2> m{};

    // One expectation step. The product preserves the unit sum exactly in
    // real arithmetic; the result is renormalized to keep long iterations
    // from accumulating rounding drift.
    ProportionState apply(const ProportionState& s) const {
        double r = m[0][0] * s.pi_r + m[0][1] * s.pi_f;
        double f = m[1][0] * s.pi_r + m[1][1] * s.pi_f;
        double sum = r + f;
        return {r / sum, f / sum};
    }

    bool column_stochastic(double tol = 1e-12) const {
        for (int j = 0; j < 2; ++j) {
            if (std::fabs(m[0][j] + m[1][j] - 1.0) > tol) return false;
            for (int i = 0; i < 2; ++i)
                if (m[i][j] < 0.0 || m[i][j] > 1.0) return false;
        }
        return true;
    }
};

// Transition matrix of the fabrication-augmented chain: the r column loses
// p + lambda to f, the f column loses q back to r.
inline TransitionMatrix build_transition(const HazardParams& h) {
    h.validate();
    return TransitionMatrix{{{{1.0 - (h.p + h.lambda), h.q},
                              {h.p + h.lambda, 1.0 - h.q}}}};
}

// Unique fixed point of the chain: shares proportional to (q, p + lambda).
inline ProportionState fixed_point(const HazardParams& h) {
    h.validate();
    double denom = h.p + h.lambda + h.q;
    return {h.q / denom, (h.p + h.lambda) / denom};
}

// Second eigenvalue of the transition matrix and the spectral gap that sets
// the geometric convergence rate.
struct SpectralInfo {
    double second_eigenvalue;  // 1 - (p + lambda + q)
    double gap;                // 1 - |second_eigenvalue|, strictly positive
};

inline SpectralInfo spectral_gap(const HazardParams& h) {
    h.validate();
    double second = 1.0 - (h.p + h.lambda + h.q);
    return {second, 1.0 - std::fabs(second)};
}

// Deterministic expectation trajectory of length steps + 1.
inline std::vector<ProportionState> iterate_expectation(const TransitionMatrix& t,
                                                        const ProportionState& start,
                                                        std::size_t steps) {
    std::vector<ProportionState> out;
    out.reserve(steps + 1);
    out.push_back(ProportionState::of(start.pi_r, start.pi_f));
    for (std::size_t i = 0; i < steps; ++i) out.push_back(t.apply(out.back()));
    return out;
}

// Fabrication hazard that makes the dual-network mean fixed point sum to
// one: lambda = d p / (p + q). Accepts d = 0 (no detection, no consistent
// fabrication).
inline double consistency_lambda(double p, double q, double d) {
    if (!(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0))
        throw domain_error("hazards p, q must lie in (0,1)");
    if (!(d >= 0.0 && d < 1.0))
        throw domain_error("detection probability d must lie in [0,1)");
    return d * p / (p + q);
}

inline constexpr double kDefaultConsistencyTolerance = 0.05;

// Mean fixed point of one network coupled to a cross-detecting partner:
// pi_f = lambda / d and pi_r = lambda q / (d p). The components sum to one
// only when lambda equals consistency_lambda(p, q, d) exactly; `exact`
// flags that case, `lambda_residual` carries the relative deviation.
struct CrossEquilibrium {
    double pi_r;
    double pi_f;
    double lambda_residual;
    bool exact;
};

inline CrossEquilibrium cross_fixed_point(const HazardParams& h, const DetectionParams& det,
                                          double consistency_tolerance = kDefaultConsistencyTolerance) {
    h.validate();
    det.validate();
    double target = consistency_lambda(h.p, h.q, det.d);
    double residual = std::fabs(h.lambda - target) / target;
    if (residual > consistency_tolerance)
        throw consistency_error("lambda deviates from d*p/(p+q) by a relative " +
                                    std::to_string(residual) + ", beyond tolerance " +
                                    std::to_string(consistency_tolerance),
                                residual);
    double pi_f = h.lambda / det.d;
    if (pi_f > 1.0)
        throw domain_error("lambda/d exceeds 1; the falsehood share cannot exceed the population");
    double pi_r = h.lambda * h.q / (det.d * h.p);
    return {pi_r, pi_f, residual, residual <= 1e-12};
}

// Whether coupling to a cross-detecting partner lowers the stationary false
// share below the isolated value, and by how much.
struct DominanceVerdict {
    bool truth_dominant;  // lambda/d < (p+lambda)/(p+lambda+q), strictly
    double margin;        // pi_f isolated minus pi_f cross-coupled
};

inline DominanceVerdict truth_dominance(const HazardParams& h, const DetectionParams& det) {
    h.validate();
    det.validate();
    double single = fixed_point(h).pi_f;
    double cross = h.lambda / det.d;
    return {cross < single, single - cross};
}

// Aggregate false->true repair rate when n-1 partners each contribute an
// independent detection channel of rate d on top of the internal q.
inline double effective_hazard(double q, double d, std::int64_t n) {
    if (!(q > 0.0 && q < 1.0))
        throw domain_error("hazard q must lie in (0,1)");
    if (!(d > 0.0 && d < 1.0))
        throw domain_error("detection probability d must lie in (0,1)");
    if (n < 1) throw domain_error("agent count must be >= 1, got " + std::to_string(n));
    return q + static_cast<double>(n - 1) * d;
}

// Stationary false share of the focal network when n mutually detecting
// agents participate. Strictly decreasing in n; n = 1 recovers the isolated
// fixed point exactly.
inline double false_share_with_agents(const HazardParams& h, const DetectionParams& det,
                                      std::int64_t n) {
    h.validate();
    det.validate();
    if (n < 1) throw domain_error("agent count must be >= 1, got " + std::to_string(n));
    return (h.p + h.lambda) /
           (h.p + h.lambda + h.q + static_cast<double>(n - 1) * det.d);
}

// Smallest agent count whose stationary false share is at or below epsilon.
// Seeded by the closed form ceil(1 + ((p+lambda)(1/eps - 1) - q)/d) and then
// tightened so the minimality contract holds under rounding; clamped at 1.
inline std::int64_t min_agents(const HazardParams& h, const DetectionParams& det,
                               double epsilon) {
    h.validate();
    det.validate();
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw domain_error("tolerance epsilon must lie in (0,1), got " +
                           std::to_string(epsilon));
    double interior =
        1.0 + ((h.p + h.lambda) * (1.0 / epsilon - 1.0) - h.q) / det.d;
    std::int64_t n = 1;
    if (interior > 1.0)
        n = static_cast<std::int64_t>(std::ceil(interior));
    while (n > 1 && false_share_with_agents(h, det, n - 1) <= epsilon) --n;
    while (false_share_with_agents(h, det, n) > epsilon) ++n;
    return n;
}

}  // namespace discnet

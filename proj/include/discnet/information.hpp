#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "discnet/errors.hpp"

namespace discnet {

// Inputs of the invalidation floor. q_corpus is the fraction of
// training-distribution mass on invalid sequences; kl is the divergence
// KL(reference || model) in natural log units.
struct FloorInputs {
    double q_corpus = 0.0;
    double kl = 0.0;
};

// Lower bound q * exp(-KL/q) on the probability mass a trained model keeps
// on invalid sequences. Strictly positive for finite KL and never above
// q_corpus. KL is taken in nats.
inline double invalidation_floor(const FloorInputs& in) {
    if (!(in.q_corpus > 0.0 && in.q_corpus <= 1.0))
        throw domain_error("q_corpus must lie in (0,1], got " +
                           std::to_string(in.q_corpus));
    if (!(in.kl >= 0.0))
        throw domain_error("KL divergence must be >= 0, got " + std::to_string(in.kl));
    return in.q_corpus * std::exp(-in.kl / in.q_corpus);
}

// Finite probability vector. Entries must be non-negative and sum to 1
// within 1e-9. Support counts the strictly positive entries.
class DiscreteDistribution {
public:
    static constexpr double kSumTolerance = 1e-9;

    explicit DiscreteDistribution(std::vector<double> probabilities)
        : probs_(std::move(probabilities)) {
        if (probs_.empty()) throw domain_error("distribution must not be empty");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0))
                throw domain_error("probabilities must be >= 0, got " + std::to_string(p));
            sum += p;
        }
        if (std::fabs(sum - 1.0) > kSumTolerance)
            throw domain_error("probabilities must sum to 1, got " + std::to_string(sum));
    }

    const std::vector<double>& probabilities() const { return probs_; }

    std::size_t size() const { return probs_.size(); }

    std::size_t support_size() const {
        return static_cast<std::size_t>(
            std::count_if(probs_.begin(), probs_.end(), [](double p) { return p > 0.0; }));
    }

    // Shannon entropy in bits, with 0 log 0 = 0.
    double entropy_bits() const {
        double h = 0.0;
        for (double p : probs_)
            if (p > 0.0) h -= p * std::log2(p);
        return h;
    }

private:
    std::vector<double> probs_;
};

// Chain-rule decomposition of the joint entropy of (length, content):
// H(L,Y) = H(L) + sum_n pi(n) H(Y | L = n), all in bits.
struct EntropyDecomposition {
    double length_entropy;                    // H(L)
    std::vector<double> conditional_entropy;  // H(Y | L = n), one per length
    double weighted_conditional;              // sum_n pi(n) H(Y | L = n)
    double joint_entropy;                     // H(L) + weighted_conditional
};

// conditionals[n] is the content distribution given length n. A conditional
// must be present for every length of positive probability; lengths of zero
// probability contribute nothing and report zero conditional entropy.
inline EntropyDecomposition joint_entropy_decomposition(
    const DiscreteDistribution& length_dist,
    const std::vector<DiscreteDistribution>& conditionals) {
    const auto& pi = length_dist.probabilities();
    EntropyDecomposition out{};
    out.length_entropy = length_dist.entropy_bits();
    out.conditional_entropy.assign(pi.size(), 0.0);
    for (std::size_t n = 0; n < pi.size(); ++n) {
        if (pi[n] > 0.0 && n >= conditionals.size())
            throw domain_error("missing conditional distribution for length " +
                               std::to_string(n) + " with positive probability");
        if (n < conditionals.size())
            out.conditional_entropy[n] = conditionals[n].entropy_bits();
        if (pi[n] > 0.0)
            out.weighted_conditional += pi[n] * out.conditional_entropy[n];
    }
    out.joint_entropy = out.length_entropy + out.weighted_conditional;
    return out;
}

inline constexpr double kDefaultConcentrationEps = 1e-9;

// Top-k mass of the ranked distribution over the mass a uniform support
// would put there: R_k = (sum of k largest probabilities) / max(k/|supp|, eps).
inline double concentration_ratio(const DiscreteDistribution& dist, std::size_t k,
                                  double eps = kDefaultConcentrationEps) {
    if (k < 1) throw domain_error("k must be >= 1");
    if (!(eps > 0.0)) throw domain_error("eps must be > 0");
    std::vector<double> ranked = dist.probabilities();
    std::sort(ranked.begin(), ranked.end(), std::greater<double>());
    double top = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) top += ranked[i];
    double support = static_cast<double>(dist.support_size());
    double denom = std::max(static_cast<double>(k) / support, eps);
    return top / denom;
}

}  // namespace discnet

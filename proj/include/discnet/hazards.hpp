#pragma once

#include <string>

#include "discnet/errors.hpp"

namespace discnet {

// Per-statement transition hazards of one network, all per step:
//   p       true -> false slip probability
//   q       false -> true repair probability
//   lambda  fabrication hazard (new falsehoods per true statement)
//
// p and q must lie strictly inside (0,1); degenerate hazards are rejected.
// The combined flow p + lambda + q may reach 1 but never exceed it, so the
// belief chain always contracts onto its fixed point.
struct HazardParams {
    double p = 0.0;
    double q = 0.0;
    double lambda = 0.0;

    void validate() const {
        if (!(p > 0.0 && p < 1.0))
            throw domain_error("hazard p must lie in (0,1), got " + std::to_string(p));
        if (!(q > 0.0 && q < 1.0))
            throw domain_error("hazard q must lie in (0,1), got " + std::to_string(q));
        if (!(lambda >= 0.0))
            throw domain_error("fabrication hazard lambda must be >= 0, got " +
                               std::to_string(lambda));
        if (!(p + lambda + q <= 1.0))
            throw domain_error("p + lambda + q must not exceed 1, got " +
                               std::to_string(p + lambda + q));
    }
};

// Probability per step that a false statement is noticed and corrected by a
// partner network. Symmetric across the pair: both directions share one d.
struct DetectionParams {
    double d = 0.0;

    void validate() const {
        if (!(d > 0.0 && d < 1.0))
            throw domain_error("detection probability d must lie in (0,1), got " +
                               std::to_string(d));
    }
};

// Hazard profile used throughout the reference figures and the CLI defaults.
inline constexpr HazardParams kCalibratedHazards{0.02, 0.05, 0.055};
inline constexpr DetectionParams kCalibratedDetection{0.19};

}  // namespace discnet

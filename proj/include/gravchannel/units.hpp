#pragma once

#include "gravchannel/errors.hpp"

namespace gravchannel {

/// Physical constants used by every builder. Natural units (all ones) by default;
/// SI values can be supplied for dimensional runs.
struct UnitConstants {
    double hbar = 1.0;
    double G = 1.0;
    double kB = 1.0;

    static UnitConstants natural() { return {}; }
    static UnitConstants si() { return {1.054571817e-34, 6.67430e-11, 1.380649e-23}; }

    void validate() const {
        detail::require(hbar > 0.0, "hbar must be > 0");
        detail::require(G >= 0.0, "G must be >= 0");
        detail::require(kB > 0.0, "kB must be > 0");
    }
};

}  // namespace gravchannel

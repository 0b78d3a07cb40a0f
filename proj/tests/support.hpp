#pragma once

#include <cmath>

#include "gravchannel/gravchannel.hpp"

namespace gravchannel::testing {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

inline KtmParams ktm(double m, double omega, double alpha, double K) {
    KtmParams p;
    p.m1 = p.m2 = m;
    p.omega1 = p.omega2 = omega;
    p.alpha1 = p.alpha2 = alpha;
    p.stiffness = K;
    return p;
}

/// 1 <-> 2 permutation of (x1, p1, x2, p2).
inline Mat exchange() {
    Mat p = Mat::Zero(4, 4);
    p(0, 2) = p(1, 3) = p(2, 0) = p(3, 1) = 1.0;
    return p;
}

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace gravchannel::testing

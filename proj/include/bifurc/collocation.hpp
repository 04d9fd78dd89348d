#pragma once

#include <vector>

namespace bifurc {

/// Radial ground state by Chebyshev collocation of the boundary value problem
///
///   z″ + k/r z′ − z + A|z|^{p−1}z = 0 on (0, L),  z′(0) = 0,  z(L) = 0,
///
/// with Newton's method and continuation in k from 0 (where the exact N = 1
/// soliton is the starting guess) to N − 1. Independent of the shooting
/// solver and used as its oracle.
struct CollocationProfile {
    std::vector<double> r;  ///< Chebyshev–Lobatto nodes on [0, L], ascending
    std::vector<double> z;
    double peak = 0.0;
    int newton_iters = 0;   ///< total over the continuation
};

/// Throws groundstate.NonConvergence when a Newton solve stalls or the
/// result collapses to the trivial solution.
CollocationProfile collocation_ground_state(int N, double p, double A, int nodes = 120, double L = 24.0);

}  // namespace bifurc

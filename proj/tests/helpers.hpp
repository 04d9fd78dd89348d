#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bifurc/config.hpp"
#include "bifurc/errors.hpp"
#include "bifurc/grid.hpp"
#include "bifurc/groundstate.hpp"
#include "bifurc/problem.hpp"

namespace testing {

inline bifurc::ProblemSpec canonical_spec(double S = 1.0) {
    bifurc::ProblemSpec s = bifurc::default_config(1).problem;
    s.a_coeff = bifurc::CoefficientSpec::gaussian_with_integral(S, 1.0, 1);
    return s;
}

inline bifurc::ProblemSpec n2_spec(bifurc::CaseTag tag, double gamma = 1.0) {
    bifurc::ProblemSpec s;
    s.N = 2;
    s.p = 2.0;
    s.q = 3.0;
    s.A = 1.0;
    s.case_tag = tag;
    s.a_coeff = tag == bifurc::CaseTag::L1Case ? bifurc::CoefficientSpec::gaussian_with_integral(1.0, 1.0, 2)
                                               : bifurc::CoefficientSpec::algebraic(1.0, gamma, 2);
    s.b_coeff = bifurc::CoefficientSpec::gaussian(1.0, 1.0, 2);
    return s;
}

// Smooth random field: sum of three Gaussian bumps with random centres and widths.
inline bifurc::Field smooth_random(const bifurc::Grid& g, std::mt19937& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> amp(-1.0, 1.0), ctr(-3.0, 3.0), wid(0.5, 2.0);
    bifurc::Vec v = bifurc::Vec::Zero(static_cast<Eigen::Index>(g.size()));
    for (int b = 0; b < 3; ++b) {
        const double a = amp(rng) * scale, w = wid(rng);
        const double c[3] = {ctr(rng), ctr(rng), ctr(rng)};
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto mi = g.multi_index(i);
            double r2 = 0.0;
            for (int d = 0; d < g.N; ++d) r2 += std::pow(g.coord(mi[static_cast<std::size_t>(d)]) - c[d], 2);
            v[static_cast<Eigen::Index>(i)] += a * std::exp(-r2 / (w * w));
        }
    }
    return bifurc::Field(g, v);
}

// Nodal white noise, zero on the boundary layer.
inline bifurc::Field noise(const bifurc::Grid& g, std::mt19937& rng) {
    std::normal_distribution<double> n01;
    bifurc::Vec v(static_cast<Eigen::Index>(g.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n01(rng);
    return bifurc::Field(g, v);
}

// Module-qualified code of the bifurc::Error thrown by f, or "" when none is.
template <class F>
std::string error_code(F&& f) {
    try {
        f();
    } catch (const bifurc::Error& e) {
        return e.code();
    }
    return "";
}

inline const bifurc::GroundState& gs_1d_p3() {
    static const bifurc::GroundState gs = bifurc::solve_ground_state(1, 3.0, 1.0, 1e-12);
    return gs;
}

inline const bifurc::GroundState& gs_2d_p2() {
    static const bifurc::GroundState gs = bifurc::solve_ground_state(2, 2.0, 1.0, 1e-12);
    return gs;
}

}  // namespace testing

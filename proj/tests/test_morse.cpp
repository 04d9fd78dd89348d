#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "bifurc/groundstate.hpp"
#include "bifurc/morse.hpp"
#include "helpers.hpp"

using namespace bifurc;

namespace {

double smallest_abs(const std::vector<double>& v) {
    double m = INFINITY;
    for (double x : v) m = std::min(m, std::abs(x));
    return m;
}

}  // namespace

TEST_SUITE("morse") {

TEST_CASE("unperturbed spectrum: one negative direction and a one-dimensional near kernel") {
    const Grid g = Grid::make(1, 16.0, 0.04);
    const Functional fn(testing::canonical_spec(), g);
    const MorseReport r = unperturbed_spectrum(fn, testing::gs_1d_p3(), 4);
    CHECK(r.m0 == 1);
    CHECK(r.near_kernel_dim == 1);
    REQUIRE(r.eigenvalues_low.size() >= 3);
    CHECK(r.eigenvalues_low[0] < -0.1);
    CHECK(smallest_abs(r.eigenvalues_low) < 1e-3);
    for (std::size_t j = 1; j < r.eigenvalues_low.size(); ++j) CHECK(r.eigenvalues_low[j] >= r.eigenvalues_low[j - 1]);
}

TEST_CASE("near-kernel eigenvalue is a discretization artefact of second order") {
    std::vector<double> mu;
    for (double h : {0.08, 0.04}) {
        const Grid g = Grid::make(1, 16.0, h);
        const Functional fn(testing::canonical_spec(), g);
        mu.push_back(smallest_abs(unperturbed_spectrum(fn, testing::gs_1d_p3(), 4).eigenvalues_low));
    }
    CHECK(mu[0] / mu[1] >= 3.5);
}

TEST_CASE("two-dimensional near kernel") {
    const Grid g = Grid::make(2, 8.0, 0.1);
    const Functional fn(testing::n2_spec(CaseTag::L1Case), g);
    const MorseReport r = unperturbed_spectrum(fn, testing::gs_2d_p2(), 5);
    CHECK(r.m0 == 1);
    CHECK(r.near_kernel_dim == 2);
}

TEST_CASE("index of u_eps follows the sign of S") {
    const Grid g = Grid::make(1, 16.0, 0.04);
    for (double S : {1.0, -1.0}) {
        const Functional fn(testing::canonical_spec(S), g);
        const Reduction red(fn, testing::gs_1d_p3());
        const double zero[1] = {0.0};
        const double eps = 0.1;
        const ReducedSolution s = red.solve_w(eps, zero);
        const Field u = embed_state(testing::gs_1d_p3(), g, zero) + s.w;
        const MorseReport r = perturbed_index(fn, testing::gs_1d_p3(), eps, u, zero, 4, 1);
        // Γ has a minimum for S > 0 (index m0) and a maximum for S < 0 (m0 + N)
        CHECK(r.index_u_eps == (S > 0 ? 1 : 2));
        CHECK(r.index_stable);
        CHECK(r.nondegenerate);
        // the scaled tangent block approximates D²Γ(0) = 4S
        CHECK(r.tangent_block_scaled(0, 0) == doctest::Approx(4.0 * S).epsilon(0.15));
        // more eigenpairs give the same count
        const MorseReport r6 = perturbed_index(fn, testing::gs_1d_p3(), eps, u, zero, 6, 1);
        CHECK(r6.index_u_eps == r.index_u_eps);
    }
}

TEST_CASE("tangent block vanishes at eps = 0 on z0") {
    const Grid g = Grid::make(1, 16.0, 0.02);
    const Functional fn(testing::canonical_spec(), g);
    const double zero[1] = {0.0};
    const Field z = embed_state(testing::gs_1d_p3(), g, zero);
    const Eigen::MatrixXd B = tangent_block(fn, testing::gs_1d_p3(), 0.0, z, zero);
    const std::vector<Field> t = tangent_frame(testing::gs_1d_p3(), g, zero);
    CHECK(std::abs(B(0, 0)) < 1e-3 * h1_norm(t[0]) * h1_norm(t[0]));
}

TEST_CASE("tangent block limit along a branch") {
    const Grid g = Grid::make(1, 16.0, 0.04);
    const Functional fn(testing::canonical_spec(), g);
    const Reduction red(fn, testing::gs_1d_p3());
    const double start[1] = {0.0};
    const std::vector<BranchPoint> br = red.solve_branch(geometric_grid(0.2, 0.5, 5), start, 1.0);
    const TangentBlockLimit lim = tangent_block_limit(fn, testing::gs_1d_p3(), br);
    CHECK(lim.reference(0, 0) == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(lim.terminal_relative_error < 0.15);
    CHECK(lim.sign_consistent);
    const std::vector<BranchPoint> few(br.begin(), br.begin() + 3);
    CHECK(testing::error_code([&] { tangent_block_limit(fn, testing::gs_1d_p3(), few); }) ==
          "morse.InsufficientPoints");
}

TEST_CASE("tangent frame of a radial profile is orthogonal with equal norms") {
    const double th[2] = {0.0, 0.0};
    const HypothesisHReport h = check_hypothesis_H(testing::gs_2d_p2(), Grid::make(2, 8.0, 0.1), th);
    CHECK(h.orthogonality_ok);
    CHECK(h.norms_ok);
    CHECK(h.ok);
}

}  // TEST_SUITE

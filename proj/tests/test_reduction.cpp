#include <cmath>

#include "doctest.h"

#include "bifurc/reduction.hpp"
#include "bifurc/groundstate.hpp"
#include "helpers.hpp"

using namespace bifurc;

namespace {

const Grid& grid1() {
    static const Grid g = Grid::make(1, 16.0, 0.04);
    return g;
}

}  // namespace

TEST_SUITE("reduction") {

TEST_CASE("w is orthogonal to the tangent frame and solves the projected equation") {
    const Functional fn(testing::canonical_spec(), grid1());
    const Reduction red(fn, testing::gs_1d_p3());
    for (double eps : {0.2, 0.05}) {
        for (double th : {0.0, 0.3}) {
            const double t[1] = {th};
            const ReducedSolution s = red.solve_w(eps, t);
            CHECK(s.orthogonality < 1e-8);
            CHECK(s.residual < 1e-9);
            REQUIRE(s.multipliers.size() == 1);
            // by symmetry the multiplier vanishes at θ = 0
            if (th == 0.0) CHECK(std::abs(s.multipliers[0]) < 1e-9);
            else CHECK(std::abs(s.multipliers[0]) > 1e-6);
        }
    }
}

TEST_CASE("w shrinks with eps") {
    const Functional fn(testing::canonical_spec(), grid1());
    const Reduction red(fn, testing::gs_1d_p3());
    const double t[1] = {0.0};
    const std::vector<double> eps = geometric_grid(0.2, 0.5, 4);
    std::vector<double> n;
    for (double e : eps) n.push_back(h1_norm(red.solve_w(e, t).w));
    for (std::size_t i = 1; i < n.size(); ++i) CHECK(n[i] < n[i - 1]);
    CHECK(fit_rate(eps, n).fitted_slope > 0.8);
}

TEST_CASE("reduced functional expands as c + Gamma eps^alpha") {
    const Functional fn(testing::canonical_spec(), grid1());
    const Reduction red(fn, testing::gs_1d_p3());
    const double c = red.energy0();
    CHECK(c == doctest::Approx(4.0 / 3.0).epsilon(2e-3));
    for (double th : {0.0, 0.5}) {
        const double t[1] = {th};
        const double eps = 0.025;
        const double gamma = -std::pow(1.0 / std::cosh(th), 4);
        CHECK((red.reduced_functional(eps, t) - c) / eps == doctest::Approx(gamma).epsilon(0.05));
    }
}

TEST_CASE("find_theta locates the symmetric extremum") {
    for (double S : {1.0, -1.0}) {
        const Functional fn(testing::canonical_spec(S), grid1());
        const Reduction red(fn, testing::gs_1d_p3());
        const double zero[1] = {0.0}, start[1] = {0.4};
        const ExtremumKind kind = red.extremum_kind(zero);
        CHECK(kind == (S > 0 ? ExtremumKind::Minimum : ExtremumKind::Maximum));
        const ReducedSolution s = red.find_theta(0.05, zero, 1.0, kind, start);
        CHECK(std::abs(s.theta[0]) < 1e-3);
        CHECK(std::abs(s.multipliers[0]) < 1e-8);
    }
}

TEST_CASE("error paths") {
    const Functional fn(testing::canonical_spec(), grid1());
    const Reduction red(fn, testing::gs_1d_p3());
    const double zero[1] = {0.0}, far[1] = {5.0};
    CHECK(testing::error_code([&] { red.solve_w(0.1, far); }) == "reduction.ThetaOutOfRange");
    CHECK(testing::error_code([&] { red.find_theta(0.0, zero, 1.0, ExtremumKind::Minimum); }) ==
          "reduction.InvalidEpsilon");
    std::vector<BranchPoint> few(3);
    CHECK(testing::error_code([&] { asymptotic_report(testing::canonical_spec(), few); }) ==
          "reduction.InsufficientPoints");
}

TEST_CASE("rescaling identities") {
    const Grid& g = grid1();
    const double th[1] = {0.0};
    const Field z = embed_state(testing::gs_1d_p3(), g, th);
    const double eps = 0.1;
    const PhysicalNorms n = rescale_to_physical(testing::canonical_spec(), eps, z);
    CHECK(n.lambda == doctest::Approx(-0.01).epsilon(1e-14));
    // ψ(x) = ε u(εx) for p = 3, N = 1: ‖ψ‖∞ = ε‖u‖∞, ‖ψ‖₂² = ε‖u‖₂²
    CHECK(n.psi_linf == doctest::Approx(eps * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(n.psi_l2_sq == doctest::Approx(eps * 4.0).epsilon(1e-6));
    CHECK(n.psi_grad_sq == doctest::Approx(eps * eps * eps * 4.0 / 3.0).epsilon(2e-3));
    const Functional fn(testing::canonical_spec(), g);
    CHECK(psi_residual_consistency(fn, eps, z) < 1e-10);
}

TEST_CASE("branch sweep") {
    const Functional fn(testing::canonical_spec(), grid1());
    const Reduction red(fn, testing::gs_1d_p3());
    const double start[1] = {0.1};
    const std::vector<BranchPoint> br = red.solve_branch(geometric_grid(0.2, 0.5, 5), start, 1.0);
    REQUIRE(br.size() == 5);
    for (const BranchPoint& b : br) {
        CHECK(b.ok);
        CHECK(b.lambda == doctest::Approx(-b.eps * b.eps));
        CHECK(b.pde_residual < 1e-6);
        CHECK(std::abs(b.theta[0]) < 1e-3);
        REQUIRE(b.u);
        CHECK(b.psi_linf > 0.0);
    }
    const AsymptoticReport ar = asymptotic_report(testing::canonical_spec(), br);
    CHECK(ar.alpha == 1.0);
    CHECK(ar.predicted_psi_linf == 1.0);
    CHECK(ar.predicted_psi_l2 == 0.5);
    CHECK(ar.psi_linf.fitted_slope == doctest::Approx(1.0).epsilon(0.05));
}

}  // TEST_SUITE

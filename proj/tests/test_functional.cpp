#include <cmath>
#include <random>

#include "doctest.h"

#include "bifurc/functional.hpp"
#include "bifurc/groundstate.hpp"
#include "helpers.hpp"

using namespace bifurc;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

Field zero_shift(const GroundState& gs, const Grid& g) {
    const double th[3] = {0.0, 0.0, 0.0};
    return embed_state(gs, g, std::span<const double>(th, static_cast<std::size_t>(g.N)));
}

}  // namespace

TEST_SUITE("functional") {

TEST_CASE("values at the ground state") {
    const Grid g = Grid::make(1, 20.0, 0.01);
    const Functional fn(testing::canonical_spec(), g);
    const Field z = zero_shift(testing::gs_1d_p3(), g);
    // F(z₀) = ¼∫4 sech⁴ = 4/3, f₀(z₀) = ½·16/3 − 4/3 = 4/3
    CHECK(fn.F_eval(z) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
    CHECK(fn.G_eval(0.0, z) == 0.0);
    CHECK(fn.f_eval(0.0, z) == doctest::Approx(4.0 / 3.0).epsilon(1e-4));
    // z₀ is critical for f₀ up to discretization error
    CHECK(h1_norm(fn.f_grad(0.0, z)) < 1e-4);
}

TEST_CASE("f splits into its three parts") {
    const Grid g = Grid::make(1, 10.0, 0.05);
    const Functional fn(testing::canonical_spec(), g);
    std::mt19937 rng(5);
    for (int k = 0; k < 5; ++k) {
        const Field u = testing::smooth_random(g, rng);
        for (double eps : {0.0, 0.1, 0.4}) {
            const double n = h1_norm(u);
            CHECK(fn.f_eval(eps, u) == doctest::Approx(0.5 * n * n - fn.F_eval(u) + fn.G_eval(eps, u)).epsilon(1e-13));
        }
    }
}

TEST_CASE("finite-difference checks of gradients and Hessians") {
    std::mt19937 rng(20240601);
    for (int N : {1, 2}) {
        const ProblemSpec spec = N == 1 ? testing::canonical_spec() : testing::n2_spec(CaseTag::AlgebraicCase, 1.0);
        const Grid g = N == 1 ? Grid::make(1, 10.0, 0.02) : Grid::make(2, 6.0, 0.1);
        const Functional fn(spec, g);
        const Field z = zero_shift(N == 1 ? testing::gs_1d_p3() : testing::gs_2d_p2(), g);
        const double eps = 0.1, t = 1e-5;
        double eg = 0.0, eh = 0.0, es = 0.0;
        for (int k = 0; k < 10; ++k) {
            const Field u = z + testing::smooth_random(g, rng, 0.3);
            const Field v = testing::smooth_random(g, rng), w = testing::smooth_random(g, rng);
            const double fd = (fn.f_eval(eps, u + v * t) - fn.f_eval(eps, u - v * t)) / (2.0 * t);
            eg = std::max(eg, rel(fd, h1_inner(fn.f_grad(eps, u), v)));
            const double fdg = (fn.G_eval(eps, u + v * t) - fn.G_eval(eps, u - v * t)) / (2.0 * t);
            eg = std::max(eg, rel(fdg, h1_inner(fn.G_grad(eps, u), v)));
            const double fdh =
                (h1_inner(fn.f_grad(eps, u + v * t), w) - h1_inner(fn.f_grad(eps, u - v * t), w)) / (2.0 * t);
            const Field Hv = fn.f_hess_apply(eps, u, v), Hw = fn.f_hess_apply(eps, u, w);
            eh = std::max(eh, rel(fdh, h1_inner(Hv, w)));
            es = std::max(es, rel(h1_inner(Hv, w), h1_inner(v, Hw)));
            // assembled Hessian agrees with its matrix-free application
            const Vec dual = fn.f_hessian(eps, u.values()) * v.values();
            CHECK((dual - fn.f_hess_dual_apply(eps, u.values(), v.values())).norm() < 1e-10 * dual.norm());
        }
        CHECK(eg < 1e-5);
        CHECK(eh < 1e-5);
        CHECK(es < 1e-10);
    }
}

TEST_CASE("Gamma in the integrable case") {
    const Grid g = Grid::make(1, 20.0, 0.05);
    const double zero[1] = {0.0}, far[1] = {10.0};
    for (double S : {1.0, -1.0}) {
        const ProblemSpec spec = testing::canonical_spec(S);
        // Γ(θ) = −S/4 · 4 sech⁴θ, so Γ(0) = −S and Γ″(0) = 4S
        CHECK(gamma_L1(spec, testing::gs_1d_p3(), zero) == doctest::Approx(-S).epsilon(1e-12));
        const GammaHessian H = hess_gamma(spec, testing::gs_1d_p3(), g, zero);
        CHECK(H.matrix(0, 0) == doctest::Approx(4.0 * S).epsilon(1e-8));
        CHECK(H.definiteness == (S > 0 ? Definiteness::PosDef : Definiteness::NegDef));
        CHECK(std::abs(gamma_L1(spec, testing::gs_1d_p3(), far)) < 1e-15);
        CHECK(gamma_value(spec, testing::gs_1d_p3(), g, zero) == gamma_L1(spec, testing::gs_1d_p3(), zero));
    }
    CHECK(testing::error_code([&] {
              gamma_L1(testing::n2_spec(CaseTag::AlgebraicCase), testing::gs_2d_p2(), zero);
          }) == "functional.WrongCase");
}

TEST_CASE("Gamma Hessian in two dimensions is diagonal at the origin") {
    const double zero[2] = {0.0, 0.0};
    for (const ProblemSpec& spec : {testing::n2_spec(CaseTag::L1Case), testing::n2_spec(CaseTag::AlgebraicCase, 1.0)}) {
        const Grid g = Grid::make(2, 8.0, 0.1);
        const GammaHessian H = hess_gamma(spec, testing::gs_2d_p2(), g, zero);
        CHECK(std::abs(H.matrix(0, 1)) < 1e-6 * std::abs(H.matrix(0, 0)));
        CHECK(H.matrix(0, 0) == doctest::Approx(H.matrix(1, 1)).epsilon(1e-6));
        CHECK(H.definiteness == Definiteness::PosDef);
    }
}

TEST_CASE("algebraic Gamma refines with the grid") {
    ProblemSpec spec = testing::canonical_spec();
    spec.case_tag = CaseTag::AlgebraicCase;
    spec.a_coeff = CoefficientSpec::algebraic(1.0, 0.5, 1);
    const double th[1] = {0.5};
    std::vector<double> v;
    for (double h : {0.04, 0.02, 0.01}) v.push_back(gamma_algebraic(spec, testing::gs_1d_p3(), Grid::make(1, 20.0, h), th));
    CHECK(std::abs(v[2] - v[1]) < std::abs(v[1] - v[0]));
    CHECK(std::abs(v[2] - v[1]) < 1e-2 * std::abs(v[2]));
    CHECK(v[2] < 0.0);
}

TEST_CASE("limit probe converges in the canonical case") {
    const Grid g = Grid::make(1, 20.0, 0.02);
    const Functional fn(testing::canonical_spec(), g);
    const double zero[1] = {0.0};
    const LimitProbe lp = gamma_limit_probe(fn, testing::gs_1d_p3(), zero, geometric_grid(0.4, 0.5, 6));
    CHECK(lp.gamma_ref == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(lp.alpha == 1.0);
    CHECK(lp.terminal_relative_error < 0.05);
    CHECK(lp.error_decreasing);
}

TEST_CASE("the b term alone decays faster than the mass term") {
    ProblemSpec spec = testing::canonical_spec();
    spec.a_coeff = CoefficientSpec::gaussian(0.0, 1.0, 1);
    const Grid g = Grid::make(1, 20.0, 0.02);
    const Functional fn(spec, g);
    const Field z = zero_shift(testing::gs_1d_p3(), g);
    std::vector<double> eps = geometric_grid(0.4, 0.5, 5), val;
    for (double e : eps) val.push_back(std::abs(fn.G_eval(e, z)));
    // ε^κ · ε^N with κ = 2 here
    CHECK(fit_rate(eps, val).fitted_slope >= 2.0);
}

TEST_CASE("predicted G' exponents") {
    CHECK(predicted_gprime_exponent(testing::canonical_spec()) == 1.5);
    CHECK(predicted_gprime_exponent(testing::n2_spec(CaseTag::L1Case)) == 2.0);
    bool thr = true;
    CHECK(predicted_gprime_exponent(testing::n2_spec(CaseTag::AlgebraicCase, 1.0), &thr) == 1.0);
    CHECK_FALSE(thr);
}

TEST_CASE("Gamma profile finds the extremum at the origin") {
    const Grid g = Grid::make(1, 20.0, 0.05);
    std::vector<std::vector<double>> th;
    for (int i = -8; i <= 8; ++i) th.push_back({0.25 * i});
    const GammaProfile pr = gamma_profile(testing::canonical_spec(), testing::gs_1d_p3(), g, th);
    REQUIRE(pr.extremum_theta.size() == 1);
    CHECK(pr.extremum_theta[0] == 0.0);
    CHECK(pr.definiteness == Definiteness::PosDef);
    CHECK(pr.gamma_samples.size() == th.size());
}

}  // TEST_SUITE

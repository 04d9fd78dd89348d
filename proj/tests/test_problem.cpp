#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"

#include "bifurc/grid.hpp"
#include "bifurc/problem.hpp"
#include "helpers.hpp"

using namespace bifurc;

TEST_SUITE("problem") {

TEST_CASE("beta star in the integrable case") {
    ProblemSpec s = testing::canonical_spec();
    s.N = 3;
    s.p = 2.0;
    s.q = 3.0;
    s.a_coeff = CoefficientSpec::gaussian_with_integral(1.0, 1.0, 3);
    s.b_coeff = CoefficientSpec::gaussian(1.0, 1.0, 3);
    const AdmissibilityReport r = validate(s);
    CHECK(r.ok);
    // 2(q−p)/(p−1) = 2 < N = 3, so β* = N(p−1)/(N(p−1) − 2(q−p)) = 3
    CHECK(r.beta_star == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(r.alpha == 3.0);

    ProblemSpec t = testing::n2_spec(CaseTag::L1Case);
    const AdmissibilityReport r2 = validate(t);
    CHECK(r2.ok);
    CHECK(std::isinf(r2.beta_star));
}

TEST_CASE("zero mass violates (a2)") {
    ProblemSpec s = testing::canonical_spec();
    s.a_coeff = CoefficientSpec::gaussian(0.0, 1.0, 1);
    const AdmissibilityReport r = validate(s);
    CHECK_FALSE(r.ok);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0] == "(a2)");
}

TEST_CASE("exponent window") {
    ProblemSpec s = testing::canonical_spec();
    s.N = 3;
    s.a_coeff = CoefficientSpec::gaussian_with_integral(1.0, 1.0, 3);
    s.b_coeff = CoefficientSpec::gaussian(1.0, 1.0, 3);
    s.q = 5.0;
    CHECK(validate(s).ok);
    s.q = 5.5;
    const AdmissibilityReport r = validate(s);
    CHECK_FALSE(r.ok);
    CHECK(r.violations.front() == "exponent-window");
    s.q = 2.0;  // q < p
    CHECK_FALSE(validate(s).ok);
}

TEST_CASE("algebraic case needs 0 < gamma < N and L != 0") {
    ProblemSpec s = testing::n2_spec(CaseTag::AlgebraicCase, 1.0);
    CHECK(validate(s).ok);
    CHECK(validate(s).alpha == 1.0);
    s.a_coeff = CoefficientSpec::algebraic(1.0, 2.5, 2);
    CHECK_FALSE(validate(s).ok);
    s.a_coeff = CoefficientSpec::algebraic(0.0, 1.0, 2);
    CHECK_FALSE(validate(s).ok);
}

TEST_CASE("classify_branch") {
    CHECK(classify_branch(1, 3.0) == BranchBehavior::Origin);
    CHECK(classify_branch(2, 3.0) == BranchBehavior::Bounded);
    CHECK(classify_branch(3, 4.0) == BranchBehavior::Infinity);
    CHECK(classify_branch(1, 5.0) == BranchBehavior::Bounded);
    CHECK(classify_branch(1, 6.0) == BranchBehavior::Infinity);
}

TEST_CASE("coefficient values") {
    const CoefficientSpec g = CoefficientSpec::gaussian(1.0, 1.0, 1);
    const double zero[1] = {0.0};
    CHECK(eval_coefficient(g, zero) == 1.0);

    const CoefficientSpec a = CoefficientSpec::algebraic(2.0, 1.0, 2);
    const double far[2] = {3e4, 4e4};  // |x| = 5e4
    CHECK(5e4 * eval_coefficient(a, far) == doctest::Approx(2.0).epsilon(1e-8));

    const CoefficientSpec c = CoefficientSpec::compact(1.0, 2.0, 1);
    const double out[1] = {2.5};
    CHECK(eval_coefficient(c, out) == 0.0);
}

TEST_CASE("Gaussian integral: closed form against quadrature") {
    const CoefficientSpec g = CoefficientSpec::gaussian(1.0, 1.0, 1);
    REQUIRE(g.derived_integral);
    CHECK(*g.derived_integral == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-14));
    CHECK(*g.derived_integral == doctest::Approx(1.7724539).epsilon(1e-7));
    // trapezoid oracle on a fine grid
    const Grid grid = Grid::make(1, 10.0, 0.01);
    Vec v(static_cast<Eigen::Index>(grid.size()));
    for (int i = 0; i < grid.n; ++i) {
        const double x[1] = {grid.coord(i)};
        v[i] = eval_coefficient(g, x);
    }
    CHECK(quadrature(Field(grid, v)) == doctest::Approx(*g.derived_integral).epsilon(1e-12));

    // compact bump and N = 2, 3 Gaussians against the same oracle
    for (int N : {2, 3}) {
        const Grid gN = Grid::make(N, 6.0, N == 2 ? 0.05 : 0.1);
        for (const CoefficientSpec& c : {CoefficientSpec::gaussian(0.7, 1.3, N), CoefficientSpec::compact(1.0, 2.0, N)}) {
            Vec w(static_cast<Eigen::Index>(gN.size()));
            for (std::size_t i = 0; i < gN.size(); ++i) {
                const auto mi = gN.multi_index(i);
                double x[3];
                for (int d = 0; d < N; ++d) x[d] = gN.coord(mi[static_cast<std::size_t>(d)]);
                w[static_cast<Eigen::Index>(i)] = eval_coefficient(c, std::span<const double>(x, static_cast<std::size_t>(N)));
            }
            CHECK(quadrature(Field(gN, w)) == doctest::Approx(*c.derived_integral).epsilon(2e-3));
        }
    }
}

TEST_CASE("gaussian_with_integral hits its target mass") {
    for (int N : {1, 2, 3}) {
        const CoefficientSpec c = CoefficientSpec::gaussian_with_integral(-2.5, 0.8, N);
        CHECK(*c.derived_integral == doctest::Approx(-2.5).epsilon(1e-14));
    }
}

TEST_CASE("property: validate is deterministic, alpha and the mass flag are consistent") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> pd(1.1, 6.0), dq(0.05, 3.0), gd(0.1, 2.9);
    std::uniform_int_distribution<int> nd(1, 3);
    for (int trial = 0; trial < 200; ++trial) {
        ProblemSpec s;
        s.N = nd(rng);
        s.p = pd(rng);
        s.q = s.p + dq(rng);
        s.A = 1.0;
        s.b_coeff = CoefficientSpec::gaussian(1.0, 1.0, s.N);
        if (trial % 2 == 0) {
            s.case_tag = CaseTag::L1Case;
            s.a_coeff = CoefficientSpec::gaussian_with_integral(1.0, 1.0, s.N);
        } else {
            s.case_tag = CaseTag::AlgebraicCase;
            s.a_coeff = CoefficientSpec::algebraic(1.0, std::min(gd(rng), s.N - 0.05), s.N);
        }
        const AdmissibilityReport a = validate(s), b = validate(s);
        CHECK(a.ok == b.ok);
        CHECK(a.violations == b.violations);
        CHECK(a.ok == a.violations.empty());
        CHECK((classify_branch(s.N, s.p) == BranchBehavior::Origin) == a.subcritical_mass_flag);
        if (a.ok) {
            CHECK(a.alpha > 0.0);
            CHECK(a.alpha <= s.N);
            CHECK(a.alpha == (s.case_tag == CaseTag::L1Case ? s.N : s.a_coeff.gamma));
        }
    }
}

TEST_CASE("property: beta star grows with q on its finite branch") {
    // β* = N(p−1)/(N(p−1) − 2(q−p)) has a denominator decreasing in q
    for (int N : {1, 2, 3}) {
        ProblemSpec s;
        s.N = N;
        s.p = 3.0;
        s.A = 1.0;
        s.a_coeff = CoefficientSpec::gaussian_with_integral(1.0, 1.0, N);
        s.b_coeff = CoefficientSpec::gaussian(1.0, 1.0, N);
        double prev = 0.0;
        for (double q = 3.05; 2.0 * (q - s.p) / (s.p - 1.0) < N - 1e-6 && q <= 5.0; q += 0.05) {
            s.q = q;
            const double b = validate(s).beta_star;
            CHECK(std::isfinite(b));
            CHECK(b > prev);
            prev = b;
        }
    }
}

}  // TEST_SUITE

#include <algorithm>
#include <cmath>
#include <functional>

#include "doctest.h"

#include "bifurc/collocation.hpp"
#include "bifurc/groundstate.hpp"
#include "helpers.hpp"

using namespace bifurc;

namespace {

double sup_diff(const GroundState& a, const GroundState& b, double r_max) {
    double m = 0.0;
    for (double r = 0.0; r <= r_max; r += 0.01) m = std::max(m, std::abs(a.eval(r) - b.eval(r)));
    return m;
}

}  // namespace

TEST_SUITE("groundstate") {

TEST_CASE("closed-form peaks and norms in one dimension") {
    const GroundState z3 = closed_form_1d(3.0, 1.0);
    CHECK(z3.peak() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    // z = √2 sech x: ∫z² = 4, ∫z′² = 4/3
    CHECK(z3.l2_norm_sq() == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(z3.grad_norm_sq() == doctest::Approx(4.0 / 3.0).epsilon(1e-8));
    CHECK(z3.h1_norm_sq() == doctest::Approx(16.0 / 3.0).epsilon(1e-8));

    const GroundState z2 = closed_form_1d(2.0, 1.0);
    CHECK(z2.peak() == doctest::Approx(1.5).epsilon(1e-14));
    // z = 3/2 sech²(x/2): ∫z² = 6
    CHECK(z2.l2_norm_sq() == doctest::Approx(6.0).epsilon(1e-8));
}

TEST_CASE("shooting reproduces the closed form") {
    for (double p : {2.0, 3.0, 4.0})
        for (double A : {1.0, 2.0}) {
            const GroundState s = solve_ground_state(1, p, A, 1e-12);
            const GroundState c = closed_form_1d(p, A);
            CHECK(sup_diff(s, c, 20.0) < 1e-6);
            CHECK(residual_norm(s) < 1e-8);
        }
}

TEST_CASE("first integral in one dimension") {
    const GroundState& z = testing::gs_1d_p3();
    double worst = 0.0;
    for (double r = 0.0; r <= 15.0; r += 0.037) {
        const double v = z.eval(r), d = z.eval_deriv(r);
        worst = std::max(worst, std::abs(0.5 * d * d - 0.5 * v * v + 0.25 * std::pow(v, 4)));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("profile is positive, decreasing and decays at unit rate") {
    for (int N : {1, 2, 3}) {
        const GroundState z = solve_ground_state(N, N == 3 ? 3.0 : 2.0, 1.0, 1e-12);
        CHECK(z.peak() > 0.0);
        const auto& pr = z.profile();
        CHECK(std::all_of(pr.begin(), pr.end(), [](double v) { return v > 0.0; }));
        CHECK(std::adjacent_find(pr.begin(), pr.end(), std::less_equal<double>()) == pr.end());
        // rate fitted on the sampled tail approaches the linear rate 1
        CHECK(z.decay_rate() == doctest::Approx(1.0).epsilon(1e-3));
        // the profile continues past the mesh with that rate
        const double rm = z.r_max();
        CHECK(z.eval(rm + 1.0) / z.eval(rm) ==
              doctest::Approx(std::pow(rm / (rm + 1.0), 0.5 * (N - 1)) * std::exp(-z.decay_rate())).epsilon(1e-12));
    }
}

TEST_CASE("scaling covariance in A") {
    // z_A = A^{−1/(p−1)} z_1
    for (int N : {1, 2}) {
        const double p = 3.0;
        const GroundState z1 = solve_ground_state(N, p, 1.0, 1e-12);
        const GroundState z4 = solve_ground_state(N, p, 4.0, 1e-12);
        double worst = 0.0;
        for (double r = 0.0; r <= 12.0; r += 0.05)
            worst = std::max(worst, std::abs(z4.eval(r) - std::pow(4.0, -1.0 / (p - 1.0)) * z1.eval(r)));
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("perturbed initial height leaves the ground state") {
    // a 1% change of z(0) must be visible in the residual of the profile,
    // which checks that the residual measure is sensitive
    const GroundState& z = testing::gs_1d_p3();
    std::vector<double> prof = z.profile(), dprof = z.dprofile();
    for (double& v : prof) v *= 1.01;
    for (double& v : dprof) v *= 1.01;
    const GroundState bad(1, 3.0, 1.0, z.dr(), prof, dprof);
    CHECK(residual_norm(bad) > 1e-2);
    CHECK(residual_norm(z) < 1e-8);
}

TEST_CASE("shooting agrees with Chebyshev collocation in three dimensions") {
    const GroundState s = solve_ground_state(3, 3.0, 1.0, 1e-12);
    const CollocationProfile c = collocation_ground_state(3, 3.0, 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < c.r.size(); ++i)
        if (c.r[i] <= 15.0) worst = std::max(worst, std::abs(s.eval(c.r[i]) - c.z[i]));
    CHECK(worst < 1e-5);
    CHECK(c.peak == doctest::Approx(s.peak()).epsilon(1e-6));
}

TEST_CASE("collocation reproduces the one-dimensional soliton") {
    const CollocationProfile c = collocation_ground_state(1, 3.0, 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < c.r.size(); ++i)
        if (c.r[i] <= 15.0) worst = std::max(worst, std::abs(std::sqrt(2.0) / std::cosh(c.r[i]) - c.z[i]));
    CHECK(worst < 1e-8);
}

TEST_CASE("invalid input") {
    CHECK(testing::error_code([] { solve_ground_state(1, 0.5, 1.0, 1e-12); }).starts_with("groundstate."));
    CHECK(testing::error_code([] { solve_ground_state(1, 3.0, -1.0, 1e-12); }).starts_with("groundstate."));
    CHECK(testing::error_code([] { collocation_ground_state(3, 3.0, 0.0); }) == "groundstate.InvalidInput");
}

}  // TEST_SUITE

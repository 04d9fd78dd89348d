#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "bifurc/grid.hpp"
#include "helpers.hpp"

using namespace bifurc;

namespace {

Field sample(const Grid& g, double (*f)(double r2)) {
    Vec v(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto mi = g.multi_index(i);
        double r2 = 0.0;
        for (int d = 0; d < g.N; ++d) r2 += std::pow(g.coord(mi[static_cast<std::size_t>(d)]), 2);
        v[static_cast<Eigen::Index>(i)] = f(r2);
    }
    return Field(g, v);
}

double gauss(double r2) { return std::exp(-r2); }

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("layout") {
    const Grid g = Grid::make(2, 4.0, 0.5);
    CHECK(g.n == 17);
    CHECK(g.size() == 289);
    CHECK(g.coord(g.multi_index(g.center())[0]) == 0.0);
    for (std::size_t i : {std::size_t{0}, std::size_t{17}, std::size_t{200}}) CHECK(g.index(g.multi_index(i)) == i);
    CHECK(g.cell_volume() == 0.25);
    CHECK(testing::error_code([] { Grid::make(4, 4.0, 0.5); }).starts_with("grid."));
}

TEST_CASE("embedded ground state: H1 norm and L2 mass") {
    const Grid g = Grid::make(1, 20.0, 0.01);
    const double th[1] = {0.0};
    const Field z = embed_state(testing::gs_1d_p3(), g, th);
    const double n2 = h1_norm(z) * h1_norm(z);
    CHECK(n2 == doctest::Approx(16.0 / 3.0).epsilon(1e-4));
    CHECK(quadrature(Field(g, z.values().cwiseProduct(z.values()))) == doctest::Approx(4.0).epsilon(1e-10));
    // translation leaves the norm unchanged
    const double sh[1] = {2.5};
    CHECK(h1_norm(embed_state(testing::gs_1d_p3(), g, sh)) == doctest::Approx(h1_norm(z)).epsilon(1e-8));
}

TEST_CASE("H1 norm converges at second order") {
    const double th[1] = {0.0};
    std::vector<double> err;
    for (double h : {0.08, 0.04, 0.02}) {
        const Grid g = Grid::make(1, 20.0, h);
        const Field z = embed_state(testing::gs_1d_p3(), g, th);
        err.push_back(std::abs(h1_norm(z) * h1_norm(z) - 16.0 / 3.0));
    }
    CHECK(std::log2(err[0] / err[1]) > 1.8);
    CHECK(std::log2(err[1] / err[2]) > 1.8);
}

TEST_CASE("inner products are symmetric and the operator is self-adjoint and positive") {
    std::mt19937 rng(11);
    for (int N : {1, 2, 3}) {
        const Grid g = Grid::make(N, 5.0, N == 3 ? 0.25 : 0.1);
        for (int t = 0; t < 5; ++t) {
            const Field u = testing::noise(g, rng), v = testing::noise(g, rng);
            CHECK(h1_inner(u, v) == doctest::Approx(h1_inner(v, u)).epsilon(1e-13));
            CHECK(l2_inner(apply_operator(u), v) == doctest::Approx(l2_inner(u, apply_operator(v))).epsilon(1e-11));
            // (u|v) = (Lu|v)_{L²}
            CHECK(h1_inner(u, v) == doctest::Approx(l2_inner(apply_operator(u), v)).epsilon(1e-11));
            CHECK(l2_inner(apply_operator(u), u) >= l2_inner(u, u));
            CHECK(h1_inner(g, u.values(), v.values()) == doctest::Approx(h1_inner(u, v)).epsilon(1e-13));
        }
        const SparseMat L = operator_matrix(g);
        const Field u = testing::noise(g, rng);
        CHECK((L * u.values() - apply_operator(u).values()).norm() < 1e-10 * u.values().norm());
    }
}

TEST_CASE("trapezoid quadrature of a Gaussian") {
    CHECK(quadrature(sample(Grid::make(1, 8.0, 0.05), gauss)) == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
    CHECK(quadrature(sample(Grid::make(2, 8.0, 0.1), gauss)) == doctest::Approx(std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("singular quadrature") {
    // ∫|x|^{−1/2} e^{−x²} dx = Γ(1/4)
    const double r1 = singular_quadrature(sample(Grid::make(1, 8.0, 0.005), gauss), 0.5);
    CHECK(r1 == doctest::Approx(std::tgamma(0.25)).epsilon(2e-3));
    // ∫_{ℝ²} |x|^{−1} e^{−|x|²} dx = π^{3/2}
    const double r2 = singular_quadrature(sample(Grid::make(2, 8.0, 0.05), gauss), 1.0);
    CHECK(r2 == doctest::Approx(std::pow(std::numbers::pi, 1.5)).epsilon(5e-3));
    // singular cell: ∫_{−h/2}^{h/2} |x|^{−γ} dx = 2 (h/2)^{1−γ}/(1−γ)
    CHECK(singular_cell_integral(1, 0.2, 0.5) == doctest::Approx(2.0 * std::sqrt(0.1) / 0.5).epsilon(1e-12));
    CHECK(testing::error_code([] { singular_quadrature(Field(Grid::make(1, 2.0, 0.1)), 1.0); }) ==
          "grid.GammaOutOfRange");
    CHECK(testing::error_code([] { singular_quadrature(Field(Grid::make(2, 2.0, 0.1)), 0.0); }) ==
          "grid.GammaOutOfRange");
}

TEST_CASE("singular quadrature refines") {
    std::vector<double> err;
    for (double h : {0.02, 0.01, 0.005}) {
        const double r = singular_quadrature(sample(Grid::make(1, 8.0, h), gauss), 0.5);
        err.push_back(std::abs(r - std::tgamma(0.25)));
    }
    CHECK(err[1] < err[0]);
    CHECK(err[2] < err[1]);
}

TEST_CASE("Riesz representative inverts the operator") {
    std::mt19937 rng(3);
    for (int N : {1, 2}) {
        const Grid g = Grid::make(N, 6.0, N == 1 ? 0.02 : 0.1);
        const Field u = testing::smooth_random(g, rng);
        const auto [r, norm] = riesz_dual_norm(apply_operator(u));
        CHECK((r.values() - u.values()).norm() < 1e-8 * u.values().norm());
        CHECK(norm == doctest::Approx(h1_norm(u)).epsilon(1e-8));
        const HelmholtzSolver hs(g);
        CHECK((hs.solve(apply_operator(u).values()) - u.values()).norm() < 1e-10 * u.values().norm());
        // riesz(dual) with dual_j = ∂/∂u_j (u|v) reproduces v
        const Vec dual = std::pow(g.h, N) * apply_operator(g, u.values());
        CHECK((hs.riesz(dual) - u.values()).norm() < 1e-10 * u.values().norm());
    }
}

TEST_CASE("tangent frame matches finite differences of the embedding") {
    const Grid g = Grid::make(2, 8.0, 0.1);
    const double th[2] = {0.3, -0.2};
    const auto frame = tangent_frame(testing::gs_2d_p2(), g, th);
    REQUIRE(frame.size() == 2);
    for (int i = 0; i < 2; ++i) {
        double tp[2] = {th[0], th[1]}, tm[2] = {th[0], th[1]};
        tp[i] += 1e-5;
        tm[i] -= 1e-5;
        const Vec fd = (embed_state(testing::gs_2d_p2(), g, tp).values() -
                        embed_state(testing::gs_2d_p2(), g, tm).values()) / 2e-5;
        CHECK((fd - frame[static_cast<std::size_t>(i)].values()).lpNorm<Eigen::Infinity>() < 1e-6);
    }
    const auto curv = curvature_frame(testing::gs_2d_p2(), g, th);
    CHECK((curv[0][1].values() - curv[1][0].values()).norm() < 1e-12);
}

TEST_CASE("errors") {
    const Grid g = Grid::make(1, 4.0, 0.1);
    const double th[1] = {3.0};
    CHECK(testing::error_code([&] { embed_state(testing::gs_1d_p3(), g, th); }) == "grid.ThetaOutOfRange");
    CHECK(testing::error_code([&] { require_same_grid(g, Grid::make(1, 4.0, 0.2)); }).starts_with("grid."));
}

}  // TEST_SUITE

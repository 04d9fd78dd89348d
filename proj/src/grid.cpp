#include "bifurc/grid.hpp"

#include <cmath>

#include "bifurc/errors.hpp"
#include "bifurc/groundstate.hpp"
#include "bifurc/krylov.hpp"
#include "bifurc/quadrature_rules.hpp"

namespace bifurc {

Grid Grid::make(int N, double R, double h, double memory_budget) {
    if (N < 1 || N > 3) throw Error("grid", "InvalidGrid", "N must be 1, 2 or 3");
    if (!(R > 0.0) || !(h > 0.0)) throw Error("grid", "InvalidGrid", "R and h must be positive");
    const double cells = R / h;
    if (std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells))
        throw Error("grid", "InvalidGrid", "R/h must be an integer");
    Grid g;
    g.N = N;
    g.R = R;
    g.h = h;
    g.n = 2 * static_cast<int>(std::llround(cells)) + 1;
    if (N * std::pow(static_cast<double>(g.n), N) > memory_budget)
        throw Error("grid", "MemoryBudget", "grid exceeds the configured memory budget");
    return g;
}

Grid Grid::defaults(int N) {
    switch (N) {
        case 1: return make(1, 20.0, 0.02);
        case 2: return make(2, 12.0, 0.1);
        default: return make(3, 8.0, 0.25);
    }
}

std::size_t Grid::size() const {
    std::size_t s = 1;
    for (int k = 0; k < N; ++k) s *= static_cast<std::size_t>(n);
    return s;
}

std::size_t Grid::stride(int axis) const {
    std::size_t s = 1;
    for (int k = axis + 1; k < N; ++k) s *= static_cast<std::size_t>(n);
    return s;
}

std::array<int, 3> Grid::multi_index(std::size_t idx) const {
    std::array<int, 3> mi{0, 0, 0};
    for (int k = N - 1; k >= 0; --k) {
        mi[static_cast<std::size_t>(k)] = static_cast<int>(idx % static_cast<std::size_t>(n));
        idx /= static_cast<std::size_t>(n);
    }
    return mi;
}

std::size_t Grid::index(const std::array<int, 3>& mi) const {
    std::size_t idx = 0;
    for (int k = 0; k < N; ++k) idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(mi[static_cast<std::size_t>(k)]);
    return idx;
}

std::size_t Grid::center() const {
    const int c = (n - 1) / 2;
    return index({c, c, c});
}

double Grid::cell_volume() const { return std::pow(h, N); }

Field::Field(const Grid& grid, Vec values) : grid_(grid), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != grid_.size())
        throw Error("grid", "GridMismatch", "value count does not match grid");
    if (!values_.allFinite()) throw Error("grid", "NonFinite", "field contains non-finite values");
}

Field Field::operator+(const Field& o) const {
    require_same_grid(grid_, o.grid_);
    return Field(grid_, values_ + o.values_);
}

Field Field::operator-(const Field& o) const {
    require_same_grid(grid_, o.grid_);
    return Field(grid_, values_ - o.values_);
}

Field Field::operator*(double s) const { return Field(grid_, values_ * s); }

void require_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) throw Error("grid", "GridMismatch", "fields live on different grids");
}

Vec apply_operator(const Grid& g, const Vec& u) {
    const double ih2 = 1.0 / (g.h * g.h);
    Vec out = (1.0 + 2.0 * g.N * ih2) * u;
    const auto n = static_cast<std::size_t>(g.n);
    const std::size_t total = g.size();
    for (int k = 0; k < g.N; ++k) {
        const std::size_t s = g.stride(k);
        for (std::size_t idx = 0; idx < total; ++idx) {
            const std::size_t ik = (idx / s) % n;
            double nb = 0.0;
            if (ik > 0) nb += u[static_cast<Eigen::Index>(idx - s)];
            if (ik + 1 < n) nb += u[static_cast<Eigen::Index>(idx + s)];
            out[static_cast<Eigen::Index>(idx)] -= ih2 * nb;
        }
    }
    return out;
}

Field apply_operator(const Field& u) { return Field(u.grid(), apply_operator(u.grid(), u.values())); }

SparseMat operator_matrix(const Grid& g) {
    const double ih2 = 1.0 / (g.h * g.h);
    const auto n = static_cast<std::size_t>(g.n);
    const std::size_t total = g.size();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(total * static_cast<std::size_t>(2 * g.N + 1));
    for (std::size_t idx = 0; idx < total; ++idx) {
        const auto i = static_cast<int>(idx);
        t.emplace_back(i, i, 1.0 + 2.0 * g.N * ih2);
        for (int k = 0; k < g.N; ++k) {
            const std::size_t s = g.stride(k);
            const std::size_t ik = (idx / s) % n;
            if (ik > 0) t.emplace_back(i, static_cast<int>(idx - s), -ih2);
            if (ik + 1 < n) t.emplace_back(i, static_cast<int>(idx + s), -ih2);
        }
    }
    const auto sz = static_cast<Eigen::Index>(total);
    SparseMat L(sz, sz);
    L.setFromTriplets(t.begin(), t.end());
    return L;
}

double h1_inner(const Grid& g, const Vec& u, const Vec& v) {
    return g.cell_volume() * u.dot(apply_operator(g, v));
}

double h1_inner(const Field& u, const Field& v) {
    require_same_grid(u.grid(), v.grid());
    return h1_inner(u.grid(), u.values(), v.values());
}

double h1_norm(const Field& u) { return std::sqrt(std::max(0.0, h1_inner(u, u))); }

double l2_inner(const Field& u, const Field& v) {
    require_same_grid(u.grid(), v.grid());
    return u.grid().cell_volume() * u.values().dot(v.values());
}

namespace {

void check_theta(const Grid& g, std::span<const double> theta) {
    if (static_cast<int>(theta.size()) != g.N)
        throw Error("grid", "ThetaOutOfRange", "θ has the wrong dimension");
    double t2 = 0.0;
    for (double t : theta) t2 += t * t;
    if (std::sqrt(t2) > 0.5 * g.R + 1e-12) throw Error("grid", "ThetaOutOfRange", "|θ| exceeds R/2");
}

// Calls f(idx, y) with y = x + θ for every node.
template <class F>
void for_each_shifted(const Grid& g, std::span<const double> theta, F&& f) {
    const std::size_t total = g.size();
    std::array<double, 3> y{0, 0, 0};
    for (std::size_t idx = 0; idx < total; ++idx) {
        const auto mi = g.multi_index(idx);
        for (int k = 0; k < g.N; ++k)
            y[static_cast<std::size_t>(k)] = g.coord(mi[static_cast<std::size_t>(k)]) + theta[static_cast<std::size_t>(k)];
        f(idx, y);
    }
}

double radius(const std::array<double, 3>& y, int N) {
    double r2 = 0.0;
    for (int k = 0; k < N; ++k) r2 += y[static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(k)];
    return std::sqrt(r2);
}

}  // namespace

Field embed_state(const GroundState& gs, const Grid& g, std::span<const double> theta) {
    check_theta(g, theta);
    Vec v(static_cast<Eigen::Index>(g.size()));
    for_each_shifted(g, theta, [&](std::size_t idx, const std::array<double, 3>& y) {
        v[static_cast<Eigen::Index>(idx)] = gs.eval(radius(y, g.N));
    });
    return Field(g, std::move(v));
}

std::vector<Field> tangent_frame(const GroundState& gs, const Grid& g, std::span<const double> theta) {
    check_theta(g, theta);
    std::vector<Vec> parts(static_cast<std::size_t>(g.N), Vec(static_cast<Eigen::Index>(g.size())));
    for_each_shifted(g, theta, [&](std::size_t idx, const std::array<double, 3>& y) {
        const double r = radius(y, g.N);
        const double dz = gs.eval_deriv(r);
        for (int i = 0; i < g.N; ++i)
            parts[static_cast<std::size_t>(i)][static_cast<Eigen::Index>(idx)] =
                r > 0.0 ? dz * y[static_cast<std::size_t>(i)] / r : 0.0;
    });
    std::vector<Field> out;
    for (auto& p : parts) out.emplace_back(g, std::move(p));
    return out;
}

std::vector<std::vector<Field>> curvature_frame(const GroundState& gs, const Grid& g,
                                                std::span<const double> theta) {
    check_theta(g, theta);
    const auto N = static_cast<std::size_t>(g.N);
    std::vector<std::vector<Vec>> parts(N, std::vector<Vec>(N, Vec(static_cast<Eigen::Index>(g.size()))));
    for_each_shifted(g, theta, [&](std::size_t idx, const std::array<double, 3>& y) {
        const double r = radius(y, g.N);
        const double d2 = gs.eval_second(r);
        // z′(r)/r → z″(0) as r → 0
        const double dr_over_r = r > 1e-8 ? gs.eval_deriv(r) / r : d2;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                const double ninj = r > 1e-8 ? y[i] * y[j] / (r * r) : 0.0;
                const double delta = i == j ? 1.0 : 0.0;
                const double val = r > 1e-8 ? d2 * ninj + dr_over_r * (delta - ninj) : d2 * delta;
                parts[i][j][static_cast<Eigen::Index>(idx)] = val;
            }
    });
    std::vector<std::vector<Field>> out(N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) out[i].emplace_back(g, std::move(parts[i][j]));
    return out;
}

namespace {

double trapezoid_weight(const Grid& g, const std::array<int, 3>& mi) {
    double w = g.cell_volume();
    for (int k = 0; k < g.N; ++k) {
        const int i = mi[static_cast<std::size_t>(k)];
        if (i == 0 || i == g.n - 1) w *= 0.5;
    }
    return w;
}

}  // namespace

double quadrature(const Field& f) {
    const Grid& g = f.grid();
    double s = 0.0;
    for (std::size_t idx = 0; idx < g.size(); ++idx) s += trapezoid_weight(g, g.multi_index(idx)) * f[idx];
    return s;
}

double singular_cell_integral(int N, double h, double gamma) {
    // Cone formula: ∫_{[−a,a]^N} |x|^{−γ} dx = a^{N−γ}/(N−γ) · Σ_faces ∫_face |x|^{−γ} (x·n) dS
    const double a = 0.5 * h;
    double face = 1.0;
    if (N >= 2) {
        const GaussRule gr = gauss_legendre(24);
        face = 0.0;
        for (std::size_t i = 0; i < gr.nodes.size(); ++i) {
            const double t1 = gr.nodes[i];
            if (N == 2) {
                face += gr.weights[i] * std::pow(1.0 + t1 * t1, -0.5 * gamma);
            } else {
                for (std::size_t j = 0; j < gr.nodes.size(); ++j) {
                    const double t2 = gr.nodes[j];
                    face += gr.weights[i] * gr.weights[j] * std::pow(1.0 + t1 * t1 + t2 * t2, -0.5 * gamma);
                }
            }
        }
    }
    return std::pow(a, N - gamma) * 2.0 * N * face / (N - gamma);
}

double singular_quadrature(const Field& f, double gamma) { return singular_quadrature(f, gamma, {0, 0, 0}); }

double singular_quadrature(const Field& f, double gamma, const std::array<int, 3>& center_offset) {
    const Grid& g = f.grid();
    if (!(gamma > 0.0) || !(gamma < g.N)) throw Error("grid", "GammaOutOfRange", "need 0 < γ < N");
    const int c = (g.n - 1) / 2;
    std::array<int, 3> cm{0, 0, 0};
    for (int k = 0; k < g.N; ++k) {
        cm[static_cast<std::size_t>(k)] = c + center_offset[static_cast<std::size_t>(k)];
        if (cm[static_cast<std::size_t>(k)] < 0 || cm[static_cast<std::size_t>(k)] >= g.n)
            throw Error("grid", "ThetaOutOfRange", "singular point outside the grid");
    }
    const std::size_t cidx = g.index(cm);
    double s = 0.0;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        if (idx == cidx) continue;
        const auto mi = g.multi_index(idx);
        double r2 = 0.0;
        for (int k = 0; k < g.N; ++k) {
            const double d = g.h * (mi[static_cast<std::size_t>(k)] - cm[static_cast<std::size_t>(k)]);
            r2 += d * d;
        }
        s += trapezoid_weight(g, mi) * std::pow(r2, -0.5 * gamma) * f[idx];
    }
    return s + f[cidx] * singular_cell_integral(g.N, g.h, gamma);
}

HelmholtzSolver::HelmholtzSolver(const Grid& g) : grid_(g), L_(operator_matrix(g)) {
    llt_.compute(L_);
    if (llt_.info() != Eigen::Success)
        throw Error("grid", "SolverNonConvergence", "factorization of −Δ_h + 1 failed");
}

Vec HelmholtzSolver::solve(const Vec& g) const { return llt_.solve(g); }

Vec HelmholtzSolver::riesz(const Vec& dual) const { return llt_.solve(dual / grid_.cell_volume()); }

std::pair<Field, double> riesz_dual_norm(const Field& g) {
    const Grid& grid = g.grid();
    if (g.values().squaredNorm() == 0.0) return {Field(grid), 0.0};
    auto A = [&grid](const Vec& x) { return apply_operator(grid, x); };
    const int max_iter = 20 * grid.n + 200;
    const KrylovResult res = conjugate_gradient(A, g.values(), 1e-10, max_iter);
    if (!res.converged)
        throw Error("grid", "SolverNonConvergence", "conjugate gradients did not reach 1e-10");
    const double norm_sq = grid.cell_volume() * res.x.dot(g.values());
    return {Field(grid, res.x), std::sqrt(std::max(0.0, norm_sq))};
}

}  // namespace bifurc

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace bifurc {

class GroundState;

using Vec = Eigen::VectorXd;
using SparseMat = Eigen::SparseMatrix<double>;

/// Truncated uniform tensor grid [−R, R]^N with spacing h; functions vanish
/// outside the box (zero-Dirichlet ghost layer).
struct Grid {
    int N = 1;
    double R = 20.0;
    double h = 0.02;
    int n = 2001;  ///< points per axis = 2R/h + 1

    static constexpr double kDefaultMemoryBudget = 6e7;  // doubles

    static Grid make(int N, double R, double h, double memory_budget = kDefaultMemoryBudget);
    /// Desk-scale defaults per dimension.
    static Grid defaults(int N);

    std::size_t size() const;
    std::size_t stride(int axis) const;
    double coord(int i) const { return -R + h * i; }
    std::array<int, 3> multi_index(std::size_t idx) const;
    std::size_t index(const std::array<int, 3>& mi) const;
    std::size_t center() const;
    double cell_volume() const;

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.N == b.N && a.n == b.n && a.R == b.R && a.h == b.h;
    }
};

/// Real function sampled on a Grid.
class Field {
public:
    explicit Field(const Grid& grid) : grid_(grid), values_(Vec::Zero(static_cast<Eigen::Index>(grid.size()))) {}
    Field(const Grid& grid, Vec values);

    const Grid& grid() const { return grid_; }
    const Vec& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

    Field operator+(const Field& o) const;
    Field operator-(const Field& o) const;
    Field operator*(double s) const;

private:
    Grid grid_;
    Vec values_;
};

void require_same_grid(const Grid& a, const Grid& b);

/// (u|v) = h^N Σ (D⁺u·D⁺v + uv) over all grid edges including the two ghost
/// edges per line, so that (u|v) = (Lu|v)_{L²} exactly with L = −Δ_h + 1.
double h1_inner(const Field& u, const Field& v);
double h1_norm(const Field& u);
double h1_inner(const Grid& g, const Vec& u, const Vec& v);
double l2_inner(const Field& u, const Field& v);

/// (2N+1)-point −Δ_h + 1 with zero Dirichlet data outside the box.
Field apply_operator(const Field& u);
Vec apply_operator(const Grid& g, const Vec& u);
SparseMat operator_matrix(const Grid& g);

/// z₀(x + θ) sampled on the grid. Throws grid.ThetaOutOfRange if |θ| > R/2.
Field embed_state(const GroundState& gs, const Grid& g, std::span<const double> theta);
/// ∂z_θ/∂θ_i, i = 1..N.
std::vector<Field> tangent_frame(const GroundState& gs, const Grid& g, std::span<const double> theta);
/// ∂²z_θ/∂θ_i∂θ_j as an N×N table.
std::vector<std::vector<Field>> curvature_frame(const GroundState& gs, const Grid& g,
                                                std::span<const double> theta);

/// Trapezoid rule over the box.
double quadrature(const Field& f);
/// ∫ |x − c|^{−γ} f(x) dx with c the grid node `center_offset` steps from the
/// grid centre (origin by default). The cell around c is integrated by the
/// local model f(c)·∫_cell |x − c|^{−γ} dx; all other nodes by the
/// trapezoid rule. Throws grid.GammaOutOfRange unless 0 < γ < N.
double singular_quadrature(const Field& f, double gamma);
double singular_quadrature(const Field& f, double gamma, const std::array<int, 3>& center_offset);
/// ∫_{[−h/2,h/2]^N} |x|^{−γ} dx.
double singular_cell_integral(int N, double h, double gamma);

/// Solves (−Δ_h + 1) r = g with a sparse Cholesky factorization, built once.
class HelmholtzSolver {
public:
    explicit HelmholtzSolver(const Grid& g);
    const Grid& grid() const { return grid_; }
    const SparseMat& matrix() const { return L_; }
    Vec solve(const Vec& g) const;
    /// Riesz representative in the h1_inner metric of the functional whose
    /// partial derivatives (dual vector) are `dual`: solves h^N L r = dual.
    Vec riesz(const Vec& dual) const;

private:
    Grid grid_;
    SparseMat L_;
    Eigen::SimplicialLDLT<SparseMat> llt_;
};

/// Riesz representative r of ℓ(v) = ∫ g v (i.e. (−Δ_h + 1) r = g) by conjugate
/// gradients to relative residual 1e-10, and ‖r‖_{H¹} = ‖ℓ‖_{H⁻¹}.
/// Throws grid.SolverNonConvergence.
std::pair<Field, double> riesz_dual_norm(const Field& g);

}  // namespace bifurc

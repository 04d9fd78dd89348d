#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bifurc/functional.hpp"
#include "bifurc/grid.hpp"
#include "bifurc/rates.hpp"

namespace bifurc {

class GroundState;

struct ReductionOptions {
    double newton_tol = 1e-10;  ///< on ‖P f′_ε(z_θ + w)‖_{H¹}
    double search_tol = 1e-7;   ///< looser tolerance for compass-search trial points
    int max_newton = 40;
    double minres_tol = 1e-11;
    int minres_max_iter = 2000;
    double delta = 1.0;           ///< radius of the θ search ball
    double initial_step = 0.25;   ///< compass search
    double terminal_step = 1e-4;
    bool polish = true;           ///< drive the multipliers to zero after the search
};

/// w(ε,θ) with f′_ε(z_θ + w) = Σ a_l ∂_l z_θ and (w | ∂_i z_θ) = 0.
struct ReducedSolution {
    explicit ReducedSolution(const Grid& g) : w(g) {}

    double eps = 0.0;
    std::vector<double> theta;
    Field w;
    std::vector<double> multipliers;
    int newton_iters = 0;
    double residual = 0.0;        ///< ‖f′_ε(z_θ + w) − Σ a_l ∂_l z_θ‖_{H¹}
    double orthogonality = 0.0;   ///< max_i |(w|∂_i z)| / (‖w‖ ‖∂_i z‖)
};

enum class ExtremumKind { Minimum, Maximum };

struct BranchPoint {
    double eps = 0.0;
    double lambda = 0.0;
    std::vector<double> theta;
    std::optional<Field> u;
    std::optional<Field> w;
    std::vector<double> multipliers;
    double u_norm_h1 = 0.0;
    double w_norm_h1 = 0.0;
    double psi_l2 = 0.0;
    double psi_h1 = 0.0;
    double psi_linf = 0.0;
    double energy = 0.0;
    double energy0 = 0.0;
    double energy_remainder = 0.0;
    double gamma_at_theta = 0.0;
    int morse_index = -1;
    double pde_residual = 0.0;    ///< ‖f′_ε(u_ε)‖_{H⁻¹} (discrete dual norm)
    double orthogonality = 0.0;
    double jump_from_previous = 0.0;
    int newton_iters = 0;
    bool ok = false;
    std::string error;
};

/// Lyapunov–Schmidt reduction around the translates z_θ = z₀(· + θ).
///
/// The correction w is found by Newton's method restricted to the
/// H¹-orthogonal complement of the tangent frame: the step solves
/// P M⁻¹ H P δ = −P M⁻¹ f′ with MINRES in the H¹ product, where M is the
/// Gram operator of h1_inner and P the complementary projector. The
/// multipliers are the tangent coordinates of the gradient.
class Reduction {
public:
    Reduction(const Functional& fn, const GroundState& gs, ReductionOptions opt = {});

    const Functional& functional() const { return fn_; }
    const ReductionOptions& options() const { return opt_; }

    /// Throws reduction.NewtonDivergence, reduction.BorderSingular,
    /// reduction.ThetaOutOfRange (|θ| > R/4).
    ReducedSolution solve_w(double eps, std::span<const double> theta, const Field* warm = nullptr) const;
    ReducedSolution solve_w(double eps, std::span<const double> theta, const Field* warm, double tol) const;

    /// f_ε(z_θ + w(ε,θ)).
    double reduced_functional(double eps, std::span<const double> theta, const Field* warm = nullptr) const;

    /// f₀ at the discrete critical point z₀ + w(0, 0): the constant c.
    double energy0() const;

    /// Compass search for the extremum of θ ↦ reduced_functional(ε, θ) in
    /// the ball |θ − center| ≤ δ, starting from `start`, then Newton on the
    /// multipliers a(θ) = 0 with finite-difference Jacobian. Rejects ε = 0
    /// (reduction.InvalidEpsilon); throws reduction.BoundaryExtremum when the
    /// result sits on the ball boundary.
    ReducedSolution find_theta(double eps, std::span<const double> center, double delta, ExtremumKind kind,
                               std::span<const double> start = {}, const Field* warm = nullptr) const;

    /// Sweeps ε from largest to smallest with warm starts. Failed points are
    /// kept with ok = false and the error code.
    std::vector<BranchPoint> solve_branch(const std::vector<double>& eps_grid, std::span<const double> theta_start,
                                          double delta) const;

    /// Extremum kind from the definiteness of D²Γ at θ. Throws
    /// reduction.IndefiniteGamma unless definite.
    ExtremumKind extremum_kind(std::span<const double> theta) const;

    std::vector<Vec> tangent_vectors(std::span<const double> theta) const;

private:
    const Functional& fn_;
    const GroundState& gs_;
    ReductionOptions opt_;
    mutable std::optional<double> energy0_;
};

struct PhysicalNorms {
    double lambda = 0.0;
    double psi_l2_sq = 0.0;
    double psi_grad_sq = 0.0;
    double psi_l2 = 0.0;
    double psi_h1 = 0.0;
    double psi_linf = 0.0;
};

/// λ = −ε² and the norms of ψ(x) = ε^{2/(p−1)} u(εx) by the exact scaling
/// identities applied to the discrete norms of u.
PhysicalNorms rescale_to_physical(const ProblemSpec& spec, double eps, const Field& u);

/// Largest nodal discrepancy between the weak residual of
/// −Δψ − λψ = a|ψ|^{p−1}ψ + b|ψ|^{q−1}ψ for ψ on the grid of spacing h/ε
/// and ε^{2/(p−1)+2−N} times the weak residual of the rescaled equation for
/// u, relative to the size of the linear term.
double psi_residual_consistency(const Functional& fn, double eps, const Field& u);

struct AsymptoticReport {
    RateFit w;
    RateFit energy_remainder;
    RateFit psi_l2;
    RateFit psi_h1;
    RateFit psi_linf;
    double alpha = 0.0;
    double predicted_psi_l2 = 0.0;    ///< (4/(p−1) − N)/2
    double predicted_psi_linf = 0.0;  ///< 2/(p−1)
};

/// Slope fits over the successful points (last four). Throws
/// reduction.InsufficientPoints with fewer than five.
AsymptoticReport asymptotic_report(const ProblemSpec& spec, const std::vector<BranchPoint>& branch);

}  // namespace bifurc

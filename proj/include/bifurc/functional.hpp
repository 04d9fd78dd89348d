#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "bifurc/coefficient_quadrature.hpp"
#include "bifurc/grid.hpp"
#include "bifurc/problem.hpp"
#include "bifurc/rates.hpp"

namespace bifurc {

class GroundState;

/// Discrete f_ε(u) = ½‖u‖² − F(u) + G(ε,u) on a grid, with
///
///   F(u)   = A/(p+1) Σ h^N |u_i|^{p+1}                    (nodal sum)
///   G(ε,u) = −1/(p+1) ∫ (a−A)(x/ε) |Iu|^{p+1}
///            − ε^κ/(q+1) ∫ b(x/ε) |Iu|^{q+1},  κ = 2(q−p)/(p−1)
///
/// where Iu is the multilinear interpolant. "Dual" vectors hold the partial
/// derivatives ∂/∂u_j; Field-valued gradients are their Riesz
/// representatives in the discrete H¹ product, so that
/// h1_inner(grad, v) is the directional derivative along v.
class Functional {
public:
    Functional(const ProblemSpec& spec, const Grid& grid);

    const ProblemSpec& spec() const { return spec_; }
    const Grid& grid() const { return grid_; }
    const HelmholtzSolver& solver() const { return *solver_; }

    double F_eval(const Vec& u) const;
    Vec F_dual(const Vec& u) const;
    double G_eval(double eps, const Vec& u) const;
    Vec G_dual(double eps, const Vec& u) const;
    Vec G_hess_dual_apply(double eps, const Vec& u, const Vec& v) const;
    double f_eval(double eps, const Vec& u) const;
    Vec f_dual(double eps, const Vec& u) const;
    Vec f_hess_dual_apply(double eps, const Vec& u, const Vec& v) const;
    /// Matrix of second partial derivatives of f_ε at u.
    SparseMat f_hessian(double eps, const Vec& u) const;

    double F_eval(const Field& u) const { return F_eval(u.values()); }
    Field F_grad(const Field& u) const;
    Field F_hess_apply(const Field& u, const Field& v) const;
    double G_eval(double eps, const Field& u) const { return G_eval(eps, u.values()); }
    Field G_grad(double eps, const Field& u) const;
    Field G_hess_apply(double eps, const Field& u, const Field& v) const;
    double f_eval(double eps, const Field& u) const { return f_eval(eps, u.values()); }
    Field f_grad(double eps, const Field& u) const;
    Field f_hess_apply(double eps, const Field& u, const Field& v) const;

    /// ‖·‖_{H⁻¹} of a dual vector, through the Cholesky solve.
    double dual_norm(const Vec& dual) const;

private:
    struct Plans {
        std::unique_ptr<CoefficientQuadrature> a;
        std::unique_ptr<CoefficientQuadrature> b;
        // storage layout of the Hessian and where each contribution lands
        SparseMat pattern;
        std::vector<std::int64_t> pos_L, pos_diag, pos_a, pos_b;
    };
    const Plans& plans(double eps) const;

    ProblemSpec spec_;
    Grid grid_;
    std::unique_ptr<HelmholtzSolver> solver_;
    mutable std::mutex mutex_;
    mutable std::map<double, std::unique_ptr<Plans>> cache_;
};

// ---------------------------------------------------------------- Γ

enum class Definiteness { PosDef, NegDef, Indefinite, Degenerate };
std::string to_string(Definiteness d);

/// −S/(p+1)·z₀^{p+1}(θ) with S = ∫(a−A). Throws functional.WrongCase
/// outside the L¹ case.
double gamma_L1(const ProblemSpec& spec, const GroundState& gs, std::span<const double> theta);

/// −L/(p+1)·∫|x|^{−γ} z₀^{p+1}(x+θ) dx by singular quadrature. The box is
/// enlarged to at least 2|θ| so that the translated profile stays inside.
/// Throws functional.WrongCase outside the algebraic case and
/// grid.GammaOutOfRange unless 0 < γ < N.
double gamma_algebraic(const ProblemSpec& spec, const GroundState& gs, const Grid& grid,
                       std::span<const double> theta);

/// Dispatches on the case tag.
double gamma_value(const ProblemSpec& spec, const GroundState& gs, const Grid& grid,
                   std::span<const double> theta);

struct GammaHessian {
    Eigen::MatrixXd matrix;
    Definiteness definiteness = Definiteness::Degenerate;
};

/// D²Γ(θ): analytic in the L¹ case, central differences (step 1e−3) of
/// gamma_algebraic otherwise. Throws functional.DegenerateHessian when the
/// smallest |eigenvalue| is below 1e−8 of the largest.
GammaHessian hess_gamma(const ProblemSpec& spec, const GroundState& gs, const Grid& grid,
                        std::span<const double> theta);

struct GammaProfile {
    CaseTag case_tag = CaseTag::L1Case;
    double alpha = 0.0;
    std::vector<std::vector<double>> theta_samples;
    std::vector<double> gamma_samples;
    std::vector<double> extremum_theta;
    Eigen::MatrixXd hessian_at_extremum;
    Definiteness definiteness = Definiteness::Degenerate;
};

/// Samples Γ at the given points; the extremum is the sample of largest |Γ|.
GammaProfile gamma_profile(const ProblemSpec& spec, const GroundState& gs, const Grid& grid,
                           const std::vector<std::vector<double>>& thetas);

struct LimitProbe {
    std::vector<double> eps_values;
    std::vector<double> ratios;           ///< G(ε, z_θ)/ε^α
    std::vector<double> relative_errors;  ///< |ratio − Γ(θ)|/|Γ(θ)|
    double gamma_ref = 0.0;
    double alpha = 0.0;
    double terminal_relative_error = 0.0;
    bool error_decreasing = false;  ///< over the last three samples
    RateFit error_fit;
};

LimitProbe gamma_limit_probe(const Functional& fn, const GroundState& gs, std::span<const double> theta,
                             const std::vector<double>& eps_grid);

struct GprimeProbe {
    RateFit fit;                 ///< ‖G′(ε, z_θ)‖_{H⁻¹} against ε
    double predicted_exponent = 0.0;
    double gate_exponent = 0.0;  ///< α/2, which the slope must exceed
    bool threshold_case = false;
};

/// Expected decay exponent of ‖G′(ε, z_θ)‖: N/2+1 in the L¹ case; in the
/// algebraic case γ below (N+2)/2, N/2+1 above, and only "> γ/2" at it.
double predicted_gprime_exponent(const ProblemSpec& spec, bool* threshold_case = nullptr);

/// Dual norms by riesz_dual_norm (conjugate gradients to 1e−10); sweeps ε in
/// parallel up to the thread cap, results in ε order.
GprimeProbe gprime_rate_probe(const Functional& fn, const GroundState& gs, std::span<const double> theta,
                              const std::vector<double>& eps_grid);

/// Thread cap from BIFURC_THREADS (default: hardware concurrency).
int thread_cap();

}  // namespace bifurc

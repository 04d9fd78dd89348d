#pragma once

#include <span>
#include <vector>

#include "bifurc/functional.hpp"
#include "bifurc/grid.hpp"
#include "bifurc/rates.hpp"
#include "bifurc/reduction.hpp"

namespace bifurc {

class GroundState;

/// Spectral data of the H¹-metric Hessian: eigenvalues μ of
/// D²f(u)[v, ·] = μ (v | ·), i.e. of M⁻¹H self-adjoint in h1_inner.
struct MorseReport {
    double eps = 0.0;
    int m0 = -1;                       ///< negative eigenvalues on the complement of the tangent frame
    int near_kernel_dim = 0;           ///< |μ| < threshold with tangent alignment > 0.99
    std::vector<double> tangent_alignment;
    int index_u_eps = -1;              ///< negative eigenvalues of the full Hessian
    bool index_stable = true;          ///< count unchanged with two more eigenpairs
    Eigen::MatrixXd tangent_block;     ///< D²f_ε(u)[∂_i z, ∂_j z]
    Eigen::MatrixXd tangent_block_scaled;
    Eigen::MatrixXd gamma_hessian_ref;
    std::vector<double> eigenvalues_low;
    std::vector<double> eigenvalues_projected;
    double band = 0.0;                 ///< 1e−2·ε^α nondegeneracy band
    bool nondegenerate = true;         ///< no eigenvalue inside the band
};

struct MorseOptions {
    double lanczos_tol = 1e-8;
    int lanczos_max_iter = 600;
    double near_kernel_threshold = 1e-3;
    double alignment_threshold = 0.99;
};

/// Smallest k eigenvalues of D²f₀(z₀) at θ = 0; m0 from the same problem
/// deflated to the complement of the tangent frame. Throws
/// morse.EigensolverNonConvergence.
MorseReport unperturbed_spectrum(const Functional& fn, const GroundState& gs, int k,
                                 const MorseOptions& opt = {});

/// Index of u_ε with k eigenvalues (also checked with k + 2), the tangent
/// block at θ and its ε^α scaling. Throws morse.DegenerateAtScale when an
/// eigenvalue lies inside the 1e−2·ε^α band and
/// morse.EigensolverNonConvergence.
MorseReport perturbed_index(const Functional& fn, const GroundState& gs, double eps, const Field& u,
                            std::span<const double> theta, int k, int m0, const MorseOptions& opt = {});

/// D²f_ε(u)[∂_i z_θ, ∂_j z_θ].
Eigen::MatrixXd tangent_block(const Functional& fn, const GroundState& gs, double eps, const Field& u,
                              std::span<const double> theta);

struct TangentBlockLimit {
    std::vector<double> eps_values;
    std::vector<Eigen::MatrixXd> scaled_blocks;
    Eigen::MatrixXd reference;         ///< D²Γ at the last branch θ
    std::vector<double> relative_errors;  ///< max-entry error / max |reference|
    double terminal_relative_error = 0.0;
    bool sign_consistent = true;       ///< definiteness matches the reference on the tail
    RateFit error_fit;
};

/// Throws morse.InsufficientPoints with fewer than four solved points.
TangentBlockLimit tangent_block_limit(const Functional& fn, const GroundState& gs,
                                      const std::vector<BranchPoint>& branch);

struct HypothesisHReport {
    double orthogonality = 0.0;   ///< max_{i≠j} |(∂_i z|∂_j z)| / (‖∂_i z‖‖∂_j z‖)
    double norm_spread = 0.0;     ///< max_i |‖∂_i z‖ − ‖∂_1 z‖| / ‖∂_1 z‖
    double curvature = 0.0;       ///< max |(∂_ij z|∂_l z)| / (‖∂_ij z‖‖∂_l z‖)
    double tolerance = 1e-5;
    bool orthogonality_ok = false;
    bool norms_ok = false;
    bool curvature_ok = false;
    bool ok = false;
};

HypothesisHReport check_hypothesis_H(const std::vector<Field>& tangent,
                                     const std::vector<std::vector<Field>>& curvature, double tol = 1e-5);
HypothesisHReport check_hypothesis_H(const GroundState& gs, const Grid& grid, std::span<const double> theta,
                                     double tol = 1e-5);

}  // namespace bifurc

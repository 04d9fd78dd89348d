#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bifurc {

/// Which hypothesis set the coefficient a falls under: a − A integrable with
/// nonzero mass, or a − A ~ L |x|^{-γ} at infinity.
enum class CaseTag { L1Case, AlgebraicCase };

enum class CoefficientFamily { GaussianBump, AlgebraicTail, CompactBump };

/// Radial coefficient from a closed parametric menu.
///
///   GaussianBump   amplitude · exp(−|x|²/σ²)
///   AlgebraicTail  amplitude · (1 + |x|²)^{−γ/2}
///   CompactBump    amplitude · cos²(π|x| / 2σ) on |x| < σ, zero outside
///
/// For the coefficient a this describes the perturbation a − A; for b it is
/// b itself. `derived_integral` is ∫ value dx over ℝᴺ when the family is
/// integrable in that dimension (closed form), empty otherwise.
struct CoefficientSpec {
    CoefficientFamily family = CoefficientFamily::GaussianBump;
    double amplitude = 0.0;
    double width = 1.0;
    double gamma = 0.0;
    std::optional<double> derived_integral;

    static CoefficientSpec gaussian(double amplitude, double width, int N);
    static CoefficientSpec algebraic(double amplitude, double gamma, int N);
    static CoefficientSpec compact(double amplitude, double width, int N);
    /// Gaussian bump scaled so that its integral over ℝᴺ equals `integral`.
    static CoefficientSpec gaussian_with_integral(double integral, double width, int N);
};

/// Closed-form ∫_{ℝᴺ} c(x) dx, or empty when the family is not in L¹(ℝᴺ).
std::optional<double> coefficient_integral(const CoefficientSpec& c, int N);

/// True when c ∈ L^r(ℝᴺ) (r > 0).
bool coefficient_in_lebesgue(const CoefficientSpec& c, int N, double r);

double eval_coefficient(const CoefficientSpec& c, std::span<const double> x);
double eval_coefficient_radial(const CoefficientSpec& c, double r);

/// Radius beyond which the coefficient is negligible (below 1e-21 of its peak)
/// or exactly zero; +inf for the algebraic tail.
double coefficient_support_radius(const CoefficientSpec& c);

/// Length over which the coefficient varies appreciably near radius r.
/// Drives the sub-cell refinement of coefficient-weighted quadrature.
double coefficient_variation_length(const CoefficientSpec& c, double r);

std::string to_string(CoefficientFamily f);
std::string to_string(CaseTag t);

/// Data of  −Δψ − λψ = a(x)|ψ|^{p−1}ψ + b(x)|ψ|^{q−1}ψ  in ℝᴺ.
struct ProblemSpec {
    int N = 1;
    double p = 3.0;
    double q = 5.0;
    double A = 1.0;
    CoefficientSpec a_coeff;
    CoefficientSpec b_coeff;
    CaseTag case_tag = CaseTag::L1Case;

    /// 2(q − p)/(p − 1): the power of ε multiplying the b-term after rescaling.
    double b_scaling_exponent() const { return 2.0 * (q - p) / (p - 1.0); }
};

struct AdmissibilityReport {
    bool ok = false;
    double beta_star = 0.0;  ///< +inf when unrestricted
    double alpha = 0.0;
    bool subcritical_mass_flag = false;
    std::vector<std::string> violations;
};

AdmissibilityReport validate(const ProblemSpec& spec);

enum class BranchBehavior { Origin, Bounded, Infinity };

/// Limit of ‖ψ_λ‖_{H¹} as λ ↑ 0, decided by the sign of 4/(p−1) − N.
BranchBehavior classify_branch(int N, double p);

std::string to_string(BranchBehavior b);

}  // namespace bifurc

#include "bifurc/problem.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "bifurc/errors.hpp"

namespace bifurc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool nearly_equal(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

// ∫_{|x|<1} cos²(π|x|/2) dx in dimension N.
double compact_unit_integral(int N) {
    using std::numbers::pi;
    switch (N) {
        case 1: return 1.0;
        case 2: return 2.0 * pi * (0.25 - 1.0 / (pi * pi));
        case 3: return 4.0 * pi * (1.0 / 6.0 - 1.0 / (pi * pi));
        default: throw Error("problem", "DimensionOutOfRange", "N must be 1, 2 or 3");
    }
}

}  // namespace

CoefficientSpec CoefficientSpec::gaussian(double amplitude, double width, int N) {
    CoefficientSpec c{CoefficientFamily::GaussianBump, amplitude, width, 0.0, {}};
    c.derived_integral = coefficient_integral(c, N);
    return c;
}

CoefficientSpec CoefficientSpec::algebraic(double amplitude, double gamma, int N) {
    CoefficientSpec c{CoefficientFamily::AlgebraicTail, amplitude, 1.0, gamma, {}};
    c.derived_integral = coefficient_integral(c, N);
    return c;
}

CoefficientSpec CoefficientSpec::compact(double amplitude, double width, int N) {
    CoefficientSpec c{CoefficientFamily::CompactBump, amplitude, width, 0.0, {}};
    c.derived_integral = coefficient_integral(c, N);
    return c;
}

CoefficientSpec CoefficientSpec::gaussian_with_integral(double integral, double width, int N) {
    const double unit = std::pow(width * std::sqrt(std::numbers::pi), N);
    return gaussian(integral / unit, width, N);
}

std::optional<double> coefficient_integral(const CoefficientSpec& c, int N) {
    using std::numbers::pi;
    switch (c.family) {
        case CoefficientFamily::GaussianBump:
            return c.amplitude * std::pow(c.width * std::sqrt(pi), N);
        case CoefficientFamily::CompactBump:
            return c.amplitude * std::pow(c.width, N) * compact_unit_integral(N);
        case CoefficientFamily::AlgebraicTail:
            if (c.amplitude == 0.0) return 0.0;
            if (c.gamma <= N) return std::nullopt;
            return c.amplitude * std::pow(pi, 0.5 * N) * std::tgamma(0.5 * (c.gamma - N)) /
                   std::tgamma(0.5 * c.gamma);
    }
    return std::nullopt;
}

bool coefficient_in_lebesgue(const CoefficientSpec& c, int N, double r) {
    if (c.amplitude == 0.0) return true;
    if (c.family == CoefficientFamily::AlgebraicTail) return c.gamma * r > N;
    return true;
}

double eval_coefficient_radial(const CoefficientSpec& c, double r) {
    switch (c.family) {
        case CoefficientFamily::GaussianBump: {
            const double s = r / c.width;
            return c.amplitude * std::exp(-s * s);
        }
        case CoefficientFamily::AlgebraicTail:
            return c.amplitude * std::pow(1.0 + r * r, -0.5 * c.gamma);
        case CoefficientFamily::CompactBump: {
            if (r >= c.width) return 0.0;
            const double cs = std::cos(0.5 * std::numbers::pi * r / c.width);
            return c.amplitude * cs * cs;
        }
    }
    return 0.0;
}

double eval_coefficient(const CoefficientSpec& c, std::span<const double> x) {
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    return eval_coefficient_radial(c, std::sqrt(r2));
}

double coefficient_support_radius(const CoefficientSpec& c) {
    if (c.amplitude == 0.0) return 0.0;
    switch (c.family) {
        case CoefficientFamily::GaussianBump: return 7.0 * c.width;
        case CoefficientFamily::CompactBump: return c.width;
        case CoefficientFamily::AlgebraicTail: return kInf;
    }
    return kInf;
}

double coefficient_variation_length(const CoefficientSpec& c, double r) {
    switch (c.family) {
        case CoefficientFamily::GaussianBump:
        case CoefficientFamily::CompactBump: return 0.5 * c.width;
        case CoefficientFamily::AlgebraicTail: return 0.5 * std::sqrt(1.0 + r * r);
    }
    return 1.0;
}

std::string to_string(CoefficientFamily f) {
    switch (f) {
        case CoefficientFamily::GaussianBump: return "gaussian";
        case CoefficientFamily::AlgebraicTail: return "algebraic";
        case CoefficientFamily::CompactBump: return "compact";
    }
    return "?";
}

std::string to_string(CaseTag t) { return t == CaseTag::L1Case ? "l1" : "algebraic"; }

std::string to_string(BranchBehavior b) {
    switch (b) {
        case BranchBehavior::Origin: return "Origin";
        case BranchBehavior::Bounded: return "Bounded";
        case BranchBehavior::Infinity: return "Infinity";
    }
    return "?";
}

AdmissibilityReport validate(const ProblemSpec& spec) {
    AdmissibilityReport rep;
    auto fail = [&](const char* name) { rep.violations.emplace_back(name); };

    const int N = spec.N;
    const double p = spec.p;
    const double q = spec.q;

    if (N < 1 || N > 3) fail("dimension");
    if (!(spec.A > 0.0) || !std::isfinite(spec.A)) fail("amplitude-A");
    const bool exponents_finite = std::isfinite(p) && std::isfinite(q);
    if (!exponents_finite || !(p > 1.0) || !(q > p)) fail("exponent-window");
    else if (N == 3 && q > 5.0 + 1e-12) fail("exponent-window");

    const auto& a = spec.a_coeff;
    const auto& b = spec.b_coeff;
    auto bad_shape = [](const CoefficientSpec& c) {
        if (c.family == CoefficientFamily::AlgebraicTail) return !(c.gamma > 0.0);
        return !(c.width > 0.0);
    };
    if (bad_shape(a)) fail("coefficient-a-shape");
    if (bad_shape(b)) fail("coefficient-b-shape");

    // Threshold 2(q−p)/(p−1) compared against N (L1 case) or γ (algebraic).
    const double thr = spec.b_scaling_exponent();
    double decay = N;
    if (spec.case_tag == CaseTag::L1Case) {
        rep.alpha = N;
        const auto S = coefficient_integral(a, N);
        if (!S) fail("(a1)");
        else if (*S == 0.0) fail("(a2)");
    } else {
        rep.alpha = a.gamma;
        decay = a.gamma;
        if (a.family != CoefficientFamily::AlgebraicTail || !(a.gamma > 0.0) || !(a.gamma < N) ||
            a.amplitude == 0.0)
            fail("(a3)");
    }

    if (nearly_equal(decay, thr) || decay < thr)
        rep.beta_star = kInf;
    else
        rep.beta_star = N * (p - 1.0) / (decay * (p - 1.0) - 2.0 * (q - p));

    const char* b_label = spec.case_tag == CaseTag::L1Case ? "(b2)" : "(b3)";
    bool b_ok = coefficient_in_lebesgue(b, N, 2.0 * N / (N + 2.0));
    if (b_ok && (decay > thr || nearly_equal(decay, thr))) {
        // need some β ∈ [1, β*) with b ∈ L^β
        if (b.family == CoefficientFamily::AlgebraicTail && b.amplitude != 0.0) {
            const double beta_min = N / b.gamma;  // b ∈ L^β iff β > N/γ_b
            b_ok = beta_min < rep.beta_star;
        }
    }
    if (!b_ok) fail(b_label);

    rep.subcritical_mass_flag = p < 1.0 + 4.0 / N;
    rep.ok = rep.violations.empty();
    return rep;
}

BranchBehavior classify_branch(int N, double p) {
    const double s = 4.0 / (p - 1.0) - N;
    if (std::abs(s) <= 1e-12 * std::max(1.0, std::abs(4.0 / (p - 1.0)))) return BranchBehavior::Bounded;
    return s > 0.0 ? BranchBehavior::Origin : BranchBehavior::Infinity;
}

}  // namespace bifurc

#include "bifurc/reduction.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "bifurc/errors.hpp"
#include "bifurc/groundstate.hpp"
#include "bifurc/krylov.hpp"
#include "tangent_projector.hpp"

namespace bifurc {

namespace {

double norm_of(std::span<const double> t) {
    double s = 0.0;
    for (double x : t) s += x * x;
    return std::sqrt(s);
}

double alpha_of(const ProblemSpec& spec) {
    return spec.case_tag == CaseTag::L1Case ? static_cast<double>(spec.N) : spec.a_coeff.gamma;
}

struct GradientState {
    Vec dual;         // ∂f/∂u
    Vec multipliers;  // a_l
    double residual;  // ‖P M⁻¹ f′‖_{H¹}
    Vec projected;    // P M⁻¹ f′
};

GradientState gradient_state(const Functional& fn, const TangentProjector& P, double eps, const Vec& u) {
    GradientState s;
    s.dual = fn.f_dual(eps, u);
    Vec prod(static_cast<Eigen::Index>(P.t.size()));
    for (std::size_t i = 0; i < P.t.size(); ++i) prod[static_cast<Eigen::Index>(i)] = P.t[i].dot(s.dual);
    s.multipliers = P.coefficients_from_products(prod);
    Vec g = fn.solver().riesz(s.dual);
    for (std::size_t i = 0; i < P.t.size(); ++i) g -= s.multipliers[static_cast<Eigen::Index>(i)] * P.t[i];
    s.projected = g;
    s.residual = std::sqrt(std::max(0.0, h1_inner(fn.grid(), g, g)));
    return s;
}

double orthogonality_residue(const Grid& g, const TangentProjector& P, const Vec& w) {
    const double wn = std::sqrt(std::max(0.0, h1_inner(g, w, w)));
    if (wn == 0.0) return 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < P.t.size(); ++i) {
        const double tn = std::sqrt(std::max(0.0, P.Mt[i].dot(P.t[i])));
        worst = std::max(worst, std::abs(P.Mt[i].dot(w)) / (wn * tn));
    }
    return worst;
}

}  // namespace

Reduction::Reduction(const Functional& fn, const GroundState& gs, ReductionOptions opt)
    : fn_(fn), gs_(gs), opt_(opt) {}

std::vector<Vec> Reduction::tangent_vectors(std::span<const double> theta) const {
    std::vector<Vec> out;
    for (const Field& f : tangent_frame(gs_, fn_.grid(), theta)) out.push_back(f.values());
    return out;
}

ReducedSolution Reduction::solve_w(double eps, std::span<const double> theta, const Field* warm) const {
    return solve_w(eps, theta, warm, opt_.newton_tol);
}

ReducedSolution Reduction::solve_w(double eps, std::span<const double> theta, const Field* warm, double tol) const {
    const Grid& g = fn_.grid();
    if (static_cast<int>(theta.size()) != g.N || norm_of(theta) > 0.25 * g.R + 1e-12)
        throw Error("reduction", "ThetaOutOfRange", "|θ| must not exceed R/4");
    const Vec z = embed_state(gs_, g, theta).values();
    const TangentProjector P(g, tangent_vectors(theta));

    Vec w = warm ? P.apply(warm->values()) : Vec::Zero(z.size());
    GradientState st = gradient_state(fn_, P, eps, z + w);
    const InnerProduct dot = [&g](const Vec& a, const Vec& b) { return h1_inner(g, a, b); };

    int iters = 0;
    int stalled = 0;
    double best = st.residual;
    while (st.residual > tol) {
        if (iters >= opt_.max_newton)
            throw Error("reduction", "NewtonDivergence", "Newton iteration limit reached");
        const SparseMat H = fn_.f_hessian(eps, z + w);
        // identity on the tangent space keeps the operator nonsingular, so
        // rounding-level tangent components of the right side are harmless
        const LinearOp A = [&](const Vec& v) {
            const Vec pv = P.apply(v);
            return Vec(P.apply(fn_.solver().riesz(H * pv)) + (v - pv));
        };
        // forcing term: inner accuracy tracks the outer residual
        const double rtol = std::clamp(1e-2 * st.residual, opt_.minres_tol, 1e-3);
        const KrylovResult kr = minres(A, dot, -st.projected, rtol, opt_.minres_max_iter);
        const Vec step = P.apply(kr.x);

        // backtracking on the projected residual
        double t = 1.0;
        Vec w_new = w;
        GradientState st_new = st;
        bool accepted = false;
        for (int k = 0; k < 8; ++k, t *= 0.5) {
            w_new = P.apply(w + t * step);
            st_new = gradient_state(fn_, P, eps, z + w_new);
            if (st_new.residual < st.residual) {
                accepted = true;
                break;
            }
        }
        ++iters;
        if (!accepted) {
            // residual already at the rounding floor
            if (st.residual < 100.0 * tol) break;
            w_new = P.apply(w + step);
            st_new = gradient_state(fn_, P, eps, z + w_new);
        }
        w = w_new;
        st = st_new;
        if (st.residual < best) {
            best = st.residual;
            stalled = 0;
        } else if (++stalled >= 5) {
            throw Error("reduction", "NewtonDivergence", "no residual decrease over 5 Newton steps");
        }
    }

    ReducedSolution sol(g);
    sol.eps = eps;
    sol.theta.assign(theta.begin(), theta.end());
    sol.w = Field(g, w);
    sol.multipliers.assign(st.multipliers.data(), st.multipliers.data() + st.multipliers.size());
    sol.newton_iters = iters;
    sol.residual = st.residual;
    sol.orthogonality = orthogonality_residue(g, P, w);
    return sol;
}

double Reduction::reduced_functional(double eps, std::span<const double> theta, const Field* warm) const {
    const ReducedSolution sol = solve_w(eps, theta, warm);
    const Field z = embed_state(gs_, fn_.grid(), theta);
    return fn_.f_eval(eps, z.values() + sol.w.values());
}

double Reduction::energy0() const {
    if (!energy0_) {
        const std::vector<double> zero(static_cast<std::size_t>(fn_.grid().N), 0.0);
        energy0_ = reduced_functional(0.0, zero);
    }
    return *energy0_;
}

ExtremumKind Reduction::extremum_kind(std::span<const double> theta) const {
    const GammaHessian H = hess_gamma(fn_.spec(), gs_, fn_.grid(), theta);
    if (H.definiteness == Definiteness::PosDef) return ExtremumKind::Minimum;
    if (H.definiteness == Definiteness::NegDef) return ExtremumKind::Maximum;
    throw Error("reduction", "IndefiniteGamma", "D²Γ is not definite at the starting point");
}

ReducedSolution Reduction::find_theta(double eps, std::span<const double> center, double delta, ExtremumKind kind,
                                      std::span<const double> start, const Field* warm) const {
    if (!(eps > 0.0)) throw Error("reduction", "InvalidEpsilon", "find_theta needs ε > 0");
    const Grid& g = fn_.grid();
    const auto N = static_cast<std::size_t>(g.N);
    const double sign = kind == ExtremumKind::Minimum ? 1.0 : -1.0;
    auto dist = [&](const std::vector<double>& th) {
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i) s += (th[i] - center[i]) * (th[i] - center[i]);
        return std::sqrt(s);
    };
    auto objective = [&](const ReducedSolution& sol) {
        const Field z = embed_state(gs_, g, sol.theta);
        return sign * fn_.f_eval(eps, z.values() + sol.w.values());
    };

    std::vector<double> theta(center.begin(), center.end());
    if (!start.empty()) theta.assign(start.begin(), start.end());
    if (dist(theta) > delta) theta.assign(center.begin(), center.end());

    const double stol = std::max(opt_.search_tol, opt_.newton_tol);
    ReducedSolution cur = solve_w(eps, theta, warm, stol);
    double J = objective(cur);
    double step = std::min(opt_.initial_step, delta);
    while (step >= opt_.terminal_step) {
        bool improved = false;
        for (std::size_t i = 0; i < N && !improved; ++i)
            for (double dir : {1.0, -1.0}) {
                std::vector<double> trial = cur.theta;
                trial[i] += dir * step;
                if (dist(trial) > delta) continue;
                ReducedSolution sol = solve_w(eps, trial, &cur.w, stol);
                const double Jt = objective(sol);
                if (Jt < J) {
                    cur = std::move(sol);
                    J = Jt;
                    improved = true;
                    break;
                }
            }
        if (!improved) step *= 0.5;
    }

    cur = solve_w(eps, cur.theta, &cur.w);

    if (opt_.polish) {
        // Newton on a(θ) = 0; the multipliers vanish exactly at critical points of f_ε
        const double s = 0.1 * opt_.terminal_step;
        const std::vector<double> anchor = cur.theta;
        auto amax = [](const ReducedSolution& r) {
            double m = 0.0;
            for (double a : r.multipliers) m = std::max(m, std::abs(a));
            return m;
        };
        for (int it = 0; it < 4 && amax(cur) > 1e-13; ++it) {
            Eigen::MatrixXd Jac(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
            for (std::size_t k = 0; k < N; ++k) {
                std::vector<double> tp = cur.theta, tm = cur.theta;
                tp[k] += s;
                tm[k] -= s;
                const ReducedSolution sp = solve_w(eps, tp, &cur.w);
                const ReducedSolution sm = solve_w(eps, tm, &cur.w);
                for (std::size_t l = 0; l < N; ++l)
                    Jac(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = (sp.multipliers[l] - sm.multipliers[l]) / (2.0 * s);
            }
            Eigen::VectorXd a(static_cast<Eigen::Index>(N));
            for (std::size_t l = 0; l < N; ++l) a[static_cast<Eigen::Index>(l)] = cur.multipliers[l];
            const Eigen::VectorXd d = Jac.fullPivLu().solve(-a);
            if (!d.allFinite()) break;
            std::vector<double> next = cur.theta;
            double moved = 0.0;
            for (std::size_t k = 0; k < N; ++k) {
                next[k] += d[static_cast<Eigen::Index>(k)];
                moved += (next[k] - anchor[k]) * (next[k] - anchor[k]);
            }
            if (std::sqrt(moved) > 4.0 * opt_.terminal_step || dist(next) > delta) break;
            ReducedSolution sol = solve_w(eps, next, &cur.w);
            if (!(amax(sol) < amax(cur))) break;
            cur = std::move(sol);
        }
    }

    if (dist(cur.theta) > delta - 2.0 * opt_.terminal_step)
        throw Error("reduction", "BoundaryExtremum", "extremizer lies on the boundary of the search ball");
    return cur;
}

std::vector<BranchPoint> Reduction::solve_branch(const std::vector<double>& eps_grid,
                                                 std::span<const double> theta_start, double delta) const {
    const Grid& g = fn_.grid();
    const ProblemSpec& spec = fn_.spec();
    const double alpha = alpha_of(spec);
    const ExtremumKind kind = extremum_kind(theta_start);
    const double e0 = energy0();

    std::vector<BranchPoint> out;
    std::vector<double> theta(theta_start.begin(), theta_start.end());
    std::optional<Field> warm;
    std::optional<Field> prev_u;
    for (double eps : eps_grid) {
        BranchPoint bp;
        bp.eps = eps;
        bp.lambda = -eps * eps;
        bp.energy0 = e0;
        try {
            const ReducedSolution sol = find_theta(eps, theta_start, delta, kind, theta, warm ? &*warm : nullptr);
            const Field z = embed_state(gs_, g, sol.theta);
            const Field u(g, z.values() + sol.w.values());
            bp.theta = sol.theta;
            bp.multipliers = sol.multipliers;
            bp.newton_iters = sol.newton_iters;
            bp.orthogonality = sol.orthogonality;
            bp.u_norm_h1 = h1_norm(u);
            bp.w_norm_h1 = h1_norm(sol.w);
            const PhysicalNorms pn = rescale_to_physical(spec, eps, u);
            bp.psi_l2 = pn.psi_l2;
            bp.psi_h1 = pn.psi_h1;
            bp.psi_linf = pn.psi_linf;
            bp.energy = fn_.f_eval(eps, u);
            bp.gamma_at_theta = gamma_value(spec, gs_, g, sol.theta);
            bp.energy_remainder = std::abs(bp.energy - e0 - std::pow(eps, alpha) * bp.gamma_at_theta);
            bp.pde_residual = fn_.dual_norm(fn_.f_dual(eps, u.values()));
            if (prev_u) bp.jump_from_previous = h1_norm(u - *prev_u);
            bp.ok = true;
            theta = sol.theta;
            warm = sol.w;
            prev_u = u;
            bp.u = u;
            bp.w = sol.w;
        } catch (const Error& e) {
            bp.ok = false;
            bp.error = e.code();
        }
        out.push_back(std::move(bp));
    }
    return out;
}

PhysicalNorms rescale_to_physical(const ProblemSpec& spec, double eps, const Field& u) {
    const Grid& g = u.grid();
    const double l2 = l2_inner(u, u);
    const double grad = std::max(0.0, h1_inner(u, u) - l2);
    const double s = 2.0 / (spec.p - 1.0);
    PhysicalNorms pn;
    pn.lambda = -eps * eps;
    pn.psi_l2_sq = std::pow(eps, 2.0 * s - g.N) * l2;
    pn.psi_grad_sq = std::pow(eps, 2.0 * s + 2.0 - g.N) * grad;
    pn.psi_l2 = std::sqrt(pn.psi_l2_sq);
    pn.psi_h1 = std::sqrt(pn.psi_l2_sq + pn.psi_grad_sq);
    pn.psi_linf = std::pow(eps, s) * u.values().cwiseAbs().maxCoeff();
    return pn;
}

double psi_residual_consistency(const Functional& fn, double eps, const Field& u) {
    const ProblemSpec& spec = fn.spec();
    const Grid& g = fn.grid();
    if (!(eps > 0.0)) throw Error("reduction", "InvalidEpsilon", "rescaling needs ε > 0");
    const double s = 2.0 / (spec.p - 1.0);
    const Grid gy = Grid::make(g.N, g.R / eps, g.h / eps, 1e12);
    const Vec psi = std::pow(eps, s) * u.values();
    const double kN = gy.cell_volume();
    const double p1 = spec.p + 1.0, q1 = spec.q + 1.0;

    // −Δψ + ε²ψ = −Δψ − λψ
    const Vec lap = apply_operator(gy, psi) - psi;
    Vec r_psi = kN * (lap + eps * eps * psi);
    for (Eigen::Index i = 0; i < psi.size(); ++i)
        r_psi[i] -= kN * spec.A * (psi[i] < 0 ? -std::pow(-psi[i], spec.p) : std::pow(psi[i], spec.p));
    const CoefficientQuadrature qa(gy, spec.a_coeff, 1.0);
    const CoefficientQuadrature qb(gy, spec.b_coeff, 1.0);
    r_psi -= qa.gradient(psi, p1) / p1;
    r_psi -= qb.gradient(psi, q1) / q1;

    const double factor = std::pow(eps, s + 2.0 - g.N);
    const Vec r_u = fn.f_dual(eps, u.values());
    const double scale = factor * (g.cell_volume() * apply_operator(g, u.values())).cwiseAbs().maxCoeff();
    return (r_psi - factor * r_u).cwiseAbs().maxCoeff() / scale;
}

AsymptoticReport asymptotic_report(const ProblemSpec& spec, const std::vector<BranchPoint>& branch) {
    std::vector<double> eps, w, rem, l2, h1, linf;
    for (const BranchPoint& bp : branch) {
        if (!bp.ok) continue;
        eps.push_back(bp.eps);
        w.push_back(bp.w_norm_h1);
        rem.push_back(bp.energy_remainder);
        l2.push_back(bp.psi_l2);
        h1.push_back(bp.psi_h1);
        linf.push_back(bp.psi_linf);
    }
    if (eps.size() < 5) throw Error("reduction", "InsufficientPoints", "need at least five branch points");
    AsymptoticReport rep;
    rep.alpha = alpha_of(spec);
    rep.w = fit_rate(eps, w);
    rep.energy_remainder = fit_rate(eps, rem);
    rep.psi_l2 = fit_rate(eps, l2);
    rep.psi_h1 = fit_rate(eps, h1);
    rep.psi_linf = fit_rate(eps, linf);
    rep.predicted_psi_l2 = 0.5 * (4.0 / (spec.p - 1.0) - spec.N);
    rep.predicted_psi_linf = 2.0 / (spec.p - 1.0);
    return rep;
}

}  // namespace bifurc

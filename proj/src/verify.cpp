#include "bifurc/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <random>

#include "bifurc/collocation.hpp"
#include "bifurc/errors.hpp"
#include "bifurc/functional.hpp"
#include "bifurc/groundstate.hpp"
#include "bifurc/io.hpp"
#include "bifurc/morse.hpp"
#include "bifurc/reduction.hpp"

namespace bifurc {

namespace {

using nlohmann::json;
namespace acc = acceptance;

// One problem with its discretization and the artifacts computed for it so far.
struct Scenario {
    std::string name;
    ProblemSpec spec;
    Grid grid;
    std::vector<double> eps;
    std::vector<double> theta0;
    ReductionOptions ropt;
    MorseOptions mopt;
    double gs_tol = 1e-12;
    bool canonical = false;  // the N = 1, p = 3, A = 1, S = ±1 run with closed-form constants

    std::unique_ptr<GroundState> gs;
    std::unique_ptr<Functional> fn;
    std::unique_ptr<Reduction> red;
    bool branch_done = false;
    std::vector<BranchPoint> branch;
    std::string branch_error;
    std::optional<AsymptoticReport> asym;
    std::string asym_error;
    std::optional<GammaProfile> lattice;
};

std::string scenario_key(const ProblemSpec& s, const Grid& g, const std::vector<double>& eps) {
    RunConfig c;
    c.problem = s;
    c.grid_R = g.R;
    c.grid_h = g.h;
    c.eps_grid = eps;
    c.theta_start.assign(static_cast<std::size_t>(s.N), 0.0);
    const json j = config_to_json(c);
    return j.at("problem").dump() + j.at("grid").dump() + j.at("eps_grid").dump();
}

class Context {
public:
    Context(const RunConfig& cfg, VerifyLevel level) : cfg_(cfg), level_(level) {
        add("primary", cfg.problem, cfg.grid(), cfg.eps_grid);
        const RunConfig canon = default_config(1);
        ProblemSpec s = canon.problem;
        add("canonical", s, Grid::defaults(1), canon.eps_grid);
        s.a_coeff = CoefficientSpec::gaussian_with_integral(-1.0, 1.0, 1);
        add("canonical_negative_S", s, Grid::defaults(1), canon.eps_grid);
        for (double p : {5.0, 6.0}) {
            ProblemSpec sp = canon.problem;
            sp.p = p;
            sp.q = p + 2.0;
            add("n1_p" + std::to_string(static_cast<int>(p)), sp, Grid::defaults(1), canon.eps_grid);
        }
        if (level == VerifyLevel::Full) {
            ProblemSpec n2;
            n2.N = 2;
            n2.p = 2.0;
            n2.q = 3.0;
            n2.A = 1.0;
            n2.b_coeff = CoefficientSpec::gaussian(1.0, 1.0, 2);
            n2.case_tag = CaseTag::L1Case;
            n2.a_coeff = CoefficientSpec::gaussian_with_integral(1.0, 1.0, 2);
            add("n2_l1", n2, Grid::defaults(2), default_eps_grid(2));
            n2.case_tag = CaseTag::AlgebraicCase;
            n2.a_coeff = CoefficientSpec::algebraic(1.0, 1.0, 2);
            add("n2_algebraic_gamma1", n2, Grid::defaults(2), default_eps_grid(2));
            n2.a_coeff = CoefficientSpec::algebraic(1.0, 1.5, 2);
            add("n2_algebraic_gamma1.5", n2, Grid::defaults(2), default_eps_grid(2));
        }
    }

    std::vector<Scenario*> all() {
        std::vector<Scenario*> out;
        for (auto& s : scenarios_) out.push_back(s.get());
        return out;
    }
    template <class Pred>
    std::vector<Scenario*> where(Pred pred) {
        std::vector<Scenario*> out;
        for (auto& s : scenarios_)
            if (pred(*s)) out.push_back(s.get());
        return out;
    }
    Scenario* find(const std::string& name) {
        for (auto& s : scenarios_)
            if (s->name == name) return s.get();
        return nullptr;
    }
    VerifyLevel level() const { return level_; }

    const GroundState& ground(Scenario& s) {
        if (!s.gs) s.gs = std::make_unique<GroundState>(solve_ground_state(s.spec.N, s.spec.p, s.spec.A, s.gs_tol));
        return *s.gs;
    }
    const Functional& functional(Scenario& s) {
        if (!s.fn) s.fn = std::make_unique<Functional>(s.spec, s.grid);
        return *s.fn;
    }
    const Reduction& reduction(Scenario& s) {
        if (!s.red) s.red = std::make_unique<Reduction>(functional(s), ground(s), s.ropt);
        return *s.red;
    }
    std::vector<BranchPoint>& branch(Scenario& s) {
        if (!s.branch_done) {
            s.branch_done = true;
            try {
                s.branch = reduction(s).solve_branch(s.eps, s.theta0, s.ropt.delta);
            } catch (const Error& e) {
                s.branch_error = e.what();
            }
        }
        return s.branch;
    }
    const AsymptoticReport* asymptotics(Scenario& s) {
        if (!s.asym && s.asym_error.empty()) {
            try {
                s.asym = asymptotic_report(s.spec, branch(s));
            } catch (const Error& e) {
                s.asym_error = e.code();
            }
        }
        return s.asym ? &*s.asym : nullptr;
    }
    // Γ sampled on a lattice of spacing 0.25 in the unit cube around the origin.
    const GammaProfile& lattice(Scenario& s) {
        if (!s.lattice) {
            std::vector<std::vector<double>> pts;
            const int m = 4, N = s.spec.N;
            const int total = static_cast<int>(std::pow(2 * m + 1, N));
            for (int k = 0; k < total; ++k) {
                std::vector<double> th(static_cast<std::size_t>(N));
                int rem = k;
                for (int i = 0; i < N; ++i) {
                    th[static_cast<std::size_t>(i)] = 0.25 * ((rem % (2 * m + 1)) - m);
                    rem /= 2 * m + 1;
                }
                pts.push_back(th);
            }
            s.lattice = gamma_profile(s.spec, ground(s), s.grid, pts);
        }
        return *s.lattice;
    }

private:
    void add(const std::string& name, const ProblemSpec& spec, const Grid& grid, const std::vector<double>& eps) {
        const std::string key = scenario_key(spec, grid, eps);
        for (const auto& k : keys_)
            if (k == key) return;
        if (!validate(spec).ok && name != "primary") return;
        keys_.push_back(key);
        auto s = std::make_unique<Scenario>();
        s->name = name;
        s->spec = spec;
        s->grid = grid;
        s->eps = eps;
        s->ropt = cfg_.reduction;
        s->mopt = cfg_.morse;
        s->gs_tol = cfg_.groundstate_tol;
        s->theta0 = name == "primary" ? cfg_.theta_start : std::vector<double>(static_cast<std::size_t>(spec.N), 0.0);
        const bool is_n1_p3 = spec.N == 1 && spec.p == 3.0 && spec.A == 1.0 && spec.case_tag == CaseTag::L1Case &&
                              spec.a_coeff.family == CoefficientFamily::GaussianBump && spec.a_coeff.derived_integral &&
                              std::abs(std::abs(*spec.a_coeff.derived_integral) - 1.0) < 1e-12;
        s->canonical = is_n1_p3;
        scenarios_.push_back(std::move(s));
    }

    RunConfig cfg_;
    VerifyLevel level_;
    std::vector<std::unique_ptr<Scenario>> scenarios_;
    std::vector<std::string> keys_;
};

// Collects per-scenario outcomes of one criterion.
class Grader {
public:
    Grader(int id, std::string name) {
        res_.id = id;
        res_.name = std::move(name);
        res_.data = json::object();
        t0_ = std::chrono::steady_clock::now();
    }
    void record(const std::string& scenario, bool ok, json values, const std::string& line) {
        values["pass"] = ok;
        res_.data[scenario] = std::move(values);
        any_ = true;
        all_ = all_ && ok;
        (ok ? passed_ : failed_).push_back(scenario + ": " + line);
    }
    void error(const std::string& scenario, const std::string& what) {
        record(scenario, false, json{{"error", what}}, "error " + what);
    }
    // The summary lists the failing scenarios when there are any, else all.
    CriterionResult finish() {
        res_.verdict = !any_ ? Verdict::Skipped : (all_ ? Verdict::Pass : Verdict::Fail);
        const auto& lines = failed_.empty() ? passed_ : failed_;
        if (!any_) res_.summary = "no applicable scenario at this level";
        for (std::size_t k = 0; k < lines.size(); ++k) res_.summary += (k ? "; " : "") + lines[k];
        res_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        return res_;
    }

private:
    CriterionResult res_;
    bool any_ = false, all_ = true;
    std::vector<std::string> passed_, failed_;
    std::chrono::steady_clock::time_point t0_;
};

std::string fmt(double x, int prec = 3) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    return buf;
}

std::vector<BranchPoint*> accepted(std::vector<BranchPoint>& b) {
    std::vector<BranchPoint*> out;
    for (auto& p : b)
        if (p.ok) out.push_back(&p);
    return out;
}

bool branch_usable(Context& ctx, Scenario& s, Grader& g) {
    auto& br = ctx.branch(s);
    if (!s.branch_error.empty()) {
        g.error(s.name, s.branch_error);
        return false;
    }
    if (accepted(br).size() < 5) {
        g.error(s.name, "fewer than five accepted branch points");
        return false;
    }
    return true;
}

// ------------------------------------------------------------ criteria

CriterionResult ground_state_fidelity(Context& ctx) {
    Grader g(1, "ground-state fidelity");
    for (double p : {2.0, 3.0, 4.0})
        for (double A : {1.0, 2.0}) {
            const std::string name = "N1_p" + fmt(p) + "_A" + fmt(A);
            try {
                const GroundState shoot = solve_ground_state(1, p, A, 1e-12);
                const GroundState exact = closed_form_1d(p, A);
                double sup = 0.0;
                const std::size_t n = std::min(shoot.profile().size(), exact.profile().size());
                for (std::size_t i = 0; i < n; ++i) sup = std::max(sup, std::abs(shoot.profile()[i] - exact.profile()[i]));
                const double res = residual_norm(shoot);
                const bool ok = sup < acc::kGroundStateSup && res < acc::kGroundStateResidual;
                g.record(name, ok, {{"sup_error", sup}, {"residual", res}},
                         "sup " + fmt(sup) + ", residual " + fmt(res));
            } catch (const Error& e) {
                g.error(name, e.code());
            }
        }
    try {
        const GroundState shoot = solve_ground_state(3, 3.0, 1.0, 1e-12);
        const CollocationProfile coll = collocation_ground_state(3, 3.0, 1.0);
        double sup = 0.0;
        for (std::size_t j = 0; j < coll.r.size(); ++j) sup = std::max(sup, std::abs(coll.z[j] - shoot.eval(coll.r[j])));
        const double res = residual_norm(shoot);
        const bool ok = sup < acc::kCollocationAgreement && res < acc::kGroundStateResidual;
        g.record("N3_p3_A1", ok,
                 {{"collocation_sup_error", sup}, {"peak_shooting", shoot.peak()}, {"peak_collocation", coll.peak},
                  {"residual", res}},
                 "collocation sup " + fmt(sup) + ", residual " + fmt(res));
    } catch (const Error& e) {
        g.error("N3_p3_A1", e.code());
    }
    for (Scenario* s : ctx.all()) {
        try {
            const double res = residual_norm(ctx.ground(*s));
            g.record(s->name, res < acc::kGroundStateResidual, {{"residual", res}}, "residual " + fmt(res));
        } catch (const Error& e) {
            g.error(s->name, e.code());
        }
    }
    return g.finish();
}

CriterionResult gamma_limit(Context& ctx, int id, CaseTag tag) {
    Grader g(id, tag == CaseTag::L1Case ? "Gamma-limit, integrable perturbation" : "Gamma-limit, algebraic decay");
    for (Scenario* s : ctx.where([&](const Scenario& s) { return s.spec.case_tag == tag; })) {
        try {
            const LimitProbe lp = gamma_limit_probe(ctx.functional(*s), ctx.ground(*s), s->theta0, s->eps);
            const double thr = s->spec.N == 1 ? acc::kLimitN1 : acc::kLimitN2;
            const bool ok = lp.terminal_relative_error < thr && lp.error_decreasing;
            g.record(s->name, ok,
                     {{"eps", lp.eps_values},
                      {"ratios", lp.ratios},
                      {"relative_errors", lp.relative_errors},
                      {"gamma_ref", lp.gamma_ref},
                      {"terminal_relative_error", lp.terminal_relative_error},
                      {"threshold", thr},
                      {"error_decreasing", lp.error_decreasing}},
                     "terminal error " + fmt(lp.terminal_relative_error) + " (< " + fmt(thr) + ")" +
                         (lp.error_decreasing ? "" : ", not decreasing"));
        } catch (const Error& e) {
            g.error(s->name, e.code());
        }
    }
    return g.finish();
}

CriterionResult gamma_decay(Context& ctx) {
    Grader g(4, "Gamma decay at |theta| = 8");
    for (Scenario* s : ctx.where([](const Scenario& s) { return s.spec.case_tag == CaseTag::AlgebraicCase; })) {
        try {
            std::vector<double> far(static_cast<std::size_t>(s->spec.N), 0.0), zero = far;
            far[0] = acc::kDecayRadius;
            const double g0 = gamma_value(s->spec, ctx.ground(*s), s->grid, zero);
            const double g8 = gamma_value(s->spec, ctx.ground(*s), s->grid, far);
            const double ratio = std::abs(g8) / std::abs(g0);
            g.record(s->name, ratio < acc::kDecayRatio, {{"gamma_0", g0}, {"gamma_8", g8}, {"ratio", ratio}},
                     "|Gamma(8)|/|Gamma(0)| " + fmt(ratio) + " (< " + fmt(acc::kDecayRatio) + ")");
        } catch (const Error& e) {
            g.error(s->name, e.code());
        }
    }
    return g.finish();
}

CriterionResult gprime_rates(Context& ctx) {
    Grader g(5, "G' dual-norm rates");
    for (Scenario* s : ctx.all()) {
        try {
            const GprimeProbe gp = gprime_rate_probe(ctx.functional(*s), ctx.ground(*s), s->theta0, s->eps);
            const double slope = gp.fit.fitted_slope;
            const bool band_ok = gp.threshold_case || std::abs(slope - gp.predicted_exponent) <= acc::kSlopeBand;
            const bool gate_ok = slope > gp.gate_exponent + acc::kGateMargin;
            g.record(s->name, band_ok && gate_ok,
                     {{"fit", rate_fit_to_json(gp.fit)},
                      {"predicted_exponent", gp.predicted_exponent},
                      {"gate_exponent", gp.gate_exponent},
                      {"threshold_case", gp.threshold_case}},
                     "slope " + fmt(slope) + " vs " + fmt(gp.predicted_exponent) + " +- " + fmt(acc::kSlopeBand) +
                         (gate_ok ? "" : ", below the alpha/2 gate"));
        } catch (const Error& e) {
            g.error(s->name, e.code());
        }
    }
    return g.finish();
}

CriterionResult reduction_rates(Context& ctx) {
    Grader g(6, "reduction: orthogonality and w rate");
    for (Scenario* s : ctx.all()) {
        if (!branch_usable(ctx, *s, g)) continue;
        double orth = 0.0;
        for (const BranchPoint* b : accepted(s->branch)) orth = std::max(orth, b->orthogonality);
        const AsymptoticReport* ar = ctx.asymptotics(*s);
        if (!ar) {
            g.error(s->name, s->asym_error);
            continue;
        }
        const double alpha = ar->alpha, slope = ar->w.fitted_slope;
        const bool strong = s->spec.N == 1 && s->spec.p >= 2.0;
        bool ok = orth < acc::kOrthogonality && slope > alpha / 2.0 + acc::kGateMargin;
        if (strong) ok = ok && slope >= alpha - acc::kStrongWSlopeSlack;
        g.record(s->name, ok,
                 {{"max_orthogonality", orth}, {"w_fit", rate_fit_to_json(ar->w)}, {"alpha", alpha},
                  {"strong_rate_checked", strong}},
                 "orthogonality " + fmt(orth) + ", w slope " + fmt(slope) + " (> " +
                     fmt(strong ? std::max(alpha / 2 + acc::kGateMargin, alpha - acc::kStrongWSlopeSlack)
                                : alpha / 2 + acc::kGateMargin) +
                     ")");
    }
    return g.finish();
}

CriterionResult localization(Context& ctx) {
    Grader g(7, "localization of theta_eps");
    for (Scenario* s : ctx.all()) {
        if (!branch_usable(ctx, *s, g)) continue;
        try {
            const GammaProfile& lat = ctx.lattice(*s);
            const BranchPoint* last = accepted(s->branch).back();
            double d = 0.0;
            for (std::size_t i = 0; i < last->theta.size(); ++i)
                d += std::pow(last->theta[i] - lat.extremum_theta[i], 2);
            d = std::sqrt(d);
            g.record(s->name, d < acc::kLocalization,
                     {{"theta_eps", last->theta}, {"gamma_extremum", lat.extremum_theta}, {"distance", d},
                      {"eps", last->eps}},
                     "|theta_eps - theta*| " + fmt(d) + " at eps " + fmt(last->eps));
        } catch (const Error& e) {
            g.error(s->name, e.code());
        }
    }
    return g.finish();
}

CriterionResult energy_expansion(Context& ctx) {
    Grader g(8, "energy expansion");
    for (Scenario* s : ctx.where([](const Scenario& s) { return s.spec.N == 1 && s.spec.case_tag == CaseTag::L1Case; })) {
        if (!s->canonical && s->name != "primary") continue;
        if (!branch_usable(ctx, *s, g)) continue;
        const AsymptoticReport* ar = ctx.asymptotics(*s);
        if (!ar) {
            g.error(s->name, s->asym_error);
            continue;
        }
        const BranchPoint* last = accepted(s->branch).back();
        // closed-form constants for the canonical data: c = 4/3, Γ(0) = −S
        const double c = s->canonical ? 4.0 / 3.0 : last->energy0;
        const double gam = s->canonical ? -*s->spec.a_coeff.derived_integral : last->gamma_at_theta;
        const double ratio = (last->energy - c) / (std::pow(last->eps, ar->alpha) * gam);
        const double slope = ar->energy_remainder.fitted_slope;
        const bool ok = std::abs(ratio - 1.0) < acc::kEnergyRatio && slope > ar->alpha + acc::kGateMargin;
        g.record(s->name, ok,
                 {{"ratio", ratio}, {"c", c}, {"gamma", gam}, {"energy", last->energy}, {"eps", last->eps},
                  {"energy0_discrete", last->energy0}, {"remainder_fit", rate_fit_to_json(ar->energy_remainder)}},
                 "ratio " + fmt(ratio, 5) + ", remainder slope " + fmt(slope) + " (> " +
                     fmt(ar->alpha + acc::kGateMargin) + ")");
    }
    return g.finish();
}

CriterionResult morse_index(Context& ctx) {
    Grader g(9, "Morse index");
    for (Scenario* s : ctx.where([](const Scenario& s) { return s.spec.N == 1 && s.spec.case_tag == CaseTag::L1Case; })) {
        if (!s->canonical && s->name != "primary") continue;
        if (!branch_usable(ctx, *s, g)) continue;
        try {
            const Functional& fn = ctx.functional(*s);
            const GroundState& gs = ctx.ground(*s);
            const int N = s->spec.N;
            const MorseReport un = unperturbed_spectrum(fn, gs, N + 3, s->mopt);
            // alignment of the eigenvectors whose eigenvalue lies below the near-kernel threshold
            double min_align = 1.0;
            int small = 0;
            for (std::size_t j = 0; j < un.eigenvalues_low.size(); ++j)
                if (std::abs(un.eigenvalues_low[j]) < s->mopt.near_kernel_threshold) {
                    min_align = std::min(min_align, un.tangent_alignment[j]);
                    ++small;
                }
            if (small == 0) min_align = 0.0;
            const GammaHessian hg = hess_gamma(s->spec, gs, s->grid, s->theta0);
            const int expected = hg.definiteness == Definiteness::PosDef ? un.m0 : un.m0 + N;
            std::vector<int> indices;
            std::vector<double> eps_list;
            bool tail_ok = true, stable = true, nondeg = true;
            auto pts = accepted(s->branch);
            json reports = json::array();
            for (std::size_t k = 0; k < pts.size(); ++k) {
                BranchPoint& bp = *pts[k];
                const bool tail = k + 3 >= pts.size();
                MorseReport r;
                try {
                    r = perturbed_index(fn, gs, bp.eps, *bp.u, bp.theta, un.m0 + N + 3, un.m0, s->mopt);
                } catch (const Error& e) {
                    if (e.kind() != "DegenerateAtScale") throw;
                    r.eps = bp.eps;
                    r.nondegenerate = false;
                    r.index_u_eps = -1;
                }
                bp.morse_index = r.index_u_eps;
                indices.push_back(r.index_u_eps);
                eps_list.push_back(bp.eps);
                reports.push_back(morse_report_to_json(r));
                if (tail) {
                    tail_ok = tail_ok && r.index_u_eps == expected;
                    stable = stable && r.index_stable;
                    nondeg = nondeg && r.nondegenerate;
                }
            }
            const bool ok = un.m0 == 1 && un.near_kernel_dim == N && min_align > acc::kTangentAlignment && tail_ok &&
                            stable && nondeg;
            g.record(s->name, ok,
                     {{"m0", un.m0},
                      {"near_kernel_dim", un.near_kernel_dim},
                      {"tangent_alignment", un.tangent_alignment},
                      {"unperturbed_eigenvalues", un.eigenvalues_low},
                      {"expected_index", expected},
                      {"eps", eps_list},
                      {"indices", indices},
                      {"reports", reports}},
                     "m0 " + std::to_string(un.m0) + ", kernel " + std::to_string(un.near_kernel_dim) + " (align " +
                         fmt(min_align, 4) + "), index " + std::to_string(indices.empty() ? -1 : indices.back()) +
                         " expected " + std::to_string(expected) + (stable ? "" : ", unstable count") +
                         (nondeg ? "" : ", eigenvalue inside the band"));
        } catch (const Error& e) {
            g.error(s->name, e.code());
        }
    }
    return g.finish();
}

CriterionResult hessian_limit(Context& ctx) {
    Grader g(10, "Hessian limit identity");
    for (Scenario* s : ctx.all()) {
        const bool applies = (s->spec.N == 1 && s->spec.case_tag == CaseTag::L1Case &&
                              (s->canonical || s->name == "primary")) ||
                             s->name == "n2_algebraic_gamma1" || s->name == "primary";
        if (!applies) continue;
        if (!branch_usable(ctx, *s, g)) continue;
        try {
            const TangentBlockLimit lim = tangent_block_limit(ctx.functional(*s), ctx.ground(*s), s->branch);
            bool ok = lim.terminal_relative_error < acc::kHessianLimit && lim.sign_consistent;
            json scaled = json::array();
            for (const auto& m : lim.scaled_blocks) {
                json rows = json::array();
                for (Eigen::Index i = 0; i < m.rows(); ++i) {
                    std::vector<double> row;
                    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
                    rows.push_back(row);
                }
                scaled.push_back(rows);
            }
            std::string extra;
            if (s->canonical) {
                // Γ″(0) = −S·∂²(z₀⁴)(0)/4 = 4S for the canonical data
                const double target = 4.0 * *s->spec.a_coeff.derived_integral;
                const double dev = std::abs(lim.reference(0, 0) - target);
                ok = ok && dev < 1e-6;
                extra = ", reference " + fmt(lim.reference(0, 0), 8) + " vs " + fmt(target);
            }
            g.record(s->name, ok,
                     {{"eps", lim.eps_values},
                      {"scaled_blocks", scaled},
                      {"relative_errors", lim.relative_errors},
                      {"terminal_relative_error", lim.terminal_relative_error},
                      {"sign_consistent", lim.sign_consistent}},
                     "terminal error " + fmt(lim.terminal_relative_error) + " (< " + fmt(acc::kHessianLimit) + ")" +
                         (lim.sign_consistent ? "" : ", sign mismatch") + extra);
        } catch (const Error& e) {
            g.error(s->name, e.code());
        }
    }
    return g.finish();
}

CriterionResult scaling_trichotomy(Context& ctx) {
    Grader g(11, "scaling trichotomy");
    for (Scenario* s : ctx.where([](const Scenario& s) { return s.spec.N == 1; })) {
        if (s->name == "canonical_negative_S") continue;
        if (!branch_usable(ctx, *s, g)) continue;
        const AsymptoticReport* ar = ctx.asymptotics(*s);
        if (!ar) {
            g.error(s->name, s->asym_error);
            continue;
        }
        const int N = s->spec.N;
        const double p = s->spec.p;
        const double l2_sq_slope = 2.0 * ar->psi_l2.fitted_slope;
        const double pred = 4.0 / (p - 1.0) - N;
        const double linf_slope = ar->psi_linf.fitted_slope, linf_pred = 2.0 / (p - 1.0);
        const BranchBehavior measured = l2_sq_slope > acc::kScalingBand
                                            ? BranchBehavior::Origin
                                            : (l2_sq_slope < -acc::kScalingBand ? BranchBehavior::Infinity
                                                                                : BranchBehavior::Bounded);
        const BranchBehavior predicted = classify_branch(N, p);
        const bool ok = std::abs(l2_sq_slope - pred) <= acc::kScalingBand &&
                        std::abs(linf_slope - linf_pred) <= acc::kScalingBand && measured == predicted;
        g.record(s->name, ok,
                 {{"p", p},
                  {"psi_l2_sq_slope", l2_sq_slope},
                  {"predicted", pred},
                  {"psi_linf_slope", linf_slope},
                  {"psi_linf_predicted", linf_pred},
                  {"measured_class", to_string(measured)},
                  {"predicted_class", to_string(predicted)}},
                 "p " + fmt(p) + ": L2^2 slope " + fmt(l2_sq_slope) + " vs " + fmt(pred) + ", Linf slope " +
                     fmt(linf_slope) + " vs " + fmt(linf_pred) + ", " + to_string(measured));
    }
    return g.finish();
}

CriterionResult pde_residual(Context& ctx) {
    Grader g(12, "PDE residual and rescaling consistency");
    for (Scenario* s : ctx.all()) {
        auto& br = ctx.branch(*s);
        if (!s->branch_error.empty()) {
            g.error(s->name, s->branch_error);
            continue;
        }
        auto pts = accepted(br);
        if (pts.empty()) {
            g.error(s->name, "no accepted branch point");
            continue;
        }
        try {
            double res = 0.0, cons = 0.0;
            for (const BranchPoint* b : pts) {
                res = std::max(res, b->pde_residual);
                cons = std::max(cons, psi_residual_consistency(ctx.functional(*s), b->eps, *b->u));
            }
            const bool ok = res < acc::kPdeResidual && cons < acc::kRescaleConsistency;
            g.record(s->name, ok,
                     {{"max_pde_residual", res},
                      {"max_rescale_consistency", cons},
                      {"accepted", pts.size()},
                      {"failed", br.size() - pts.size()}},
                     "residual " + fmt(res) + ", rescaling " + fmt(cons) + ", " + std::to_string(pts.size()) + "/" +
                         std::to_string(br.size()) + " accepted");
        } catch (const Error& e) {
            g.error(s->name, e.code());
        }
    }
    return g.finish();
}

// Smooth random field: a scaled ground state plus three Gaussian bumps.
Field random_field(const Grid& g, const GroundState& gs, std::mt19937& rng) {
    std::uniform_real_distribution<double> amp(-1.0, 1.0), ctr(-3.0, 3.0), wid(0.5, 2.0);
    const Field z = embed_state(gs, g, std::vector<double>(static_cast<std::size_t>(g.N), 0.0));
    Vec v = (1.0 + 0.3 * amp(rng)) * z.values();
    for (int b = 0; b < 3; ++b) {
        const double a = amp(rng), w = wid(rng);
        std::array<double, 3> c{ctr(rng), ctr(rng), ctr(rng)};
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto mi = g.multi_index(i);
            double r2 = 0.0;
            for (int d = 0; d < g.N; ++d) r2 += std::pow(g.coord(mi[static_cast<std::size_t>(d)]) - c[static_cast<std::size_t>(d)], 2);
            v[static_cast<Eigen::Index>(i)] += a * std::exp(-r2 / (w * w));
        }
    }
    return Field(g, v);
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

CriterionResult calculus_consistency(Context& ctx) {
    Grader g(13, "calculus consistency");
    for (Scenario* s : ctx.all()) {
        if (s->name != "primary" && s->name != "n2_algebraic_gamma1") continue;
        try {
            const Functional& fn = ctx.functional(*s);
            const GroundState& gs = ctx.ground(*s);
            const double eps = s->eps[s->eps.size() / 2];
            std::mt19937 rng(20240601);
            const double t = acc::kFdStep;
            struct Parts {
                const char* name;
                std::function<double(const Field&)> value;
                std::function<Field(const Field&)> grad;
                std::function<Field(const Field&, const Field&)> hess;
            };
            const std::vector<Parts> parts{
                {"F", [&](const Field& u) { return fn.F_eval(u); }, [&](const Field& u) { return fn.F_grad(u); },
                 [&](const Field& u, const Field& v) { return fn.F_hess_apply(u, v); }},
                {"G", [&](const Field& u) { return fn.G_eval(eps, u); },
                 [&](const Field& u) { return fn.G_grad(eps, u); },
                 [&](const Field& u, const Field& v) { return fn.G_hess_apply(eps, u, v); }},
                {"f", [&](const Field& u) { return fn.f_eval(eps, u); },
                 [&](const Field& u) { return fn.f_grad(eps, u); },
                 [&](const Field& u, const Field& v) { return fn.f_hess_apply(eps, u, v); }}};
            json per = json::object();
            bool ok = true;
            std::string worst;
            for (const Parts& P : parts) {
                double eg = 0.0, eh = 0.0, es = 0.0;
                for (int k = 0; k < acc::kRandomFields; ++k) {
                    const Field u = random_field(s->grid, gs, rng);
                    const Field v = random_field(s->grid, gs, rng);
                    const Field w = random_field(s->grid, gs, rng);
                    const double fd = (P.value(u + v * t) - P.value(u - v * t)) / (2.0 * t);
                    const Field gu = P.grad(u);
                    eg = std::max(eg, rel(fd, h1_inner(gu, v)));
                    const Field Hv = P.hess(u, v), Hw = P.hess(u, w);
                    const double fdh = (h1_inner(P.grad(u + v * t), w) - h1_inner(P.grad(u - v * t), w)) / (2.0 * t);
                    eh = std::max(eh, rel(fdh, h1_inner(Hv, w)));
                    es = std::max(es, rel(h1_inner(Hv, w), h1_inner(v, Hw)));
                }
                per[P.name] = {{"gradient_fd", eg}, {"hessian_fd", eh}, {"hessian_symmetry", es}};
                const bool pok = eg < acc::kGradientFd && eh < acc::kHessianFd && es < acc::kHessianSymmetry;
                ok = ok && pok;
                worst += std::string(worst.empty() ? "" : ", ") + P.name + " " + fmt(eg, 2) + "/" + fmt(eh, 2) + "/" +
                         fmt(es, 2);
            }
            per["eps"] = eps;
            per["fields"] = acc::kRandomFields;
            g.record(s->name, ok, per, "grad/hess/sym " + worst);
        } catch (const Error& e) {
            g.error(s->name, e.code());
        }
    }
    return g.finish();
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        case Verdict::Skipped: return "SKIP";
    }
    return "SKIP";
}

bool VerifyReport::passed() const {
    if (!admissible || !error.empty()) return false;
    for (const auto& c : criteria)
        if (c.verdict == Verdict::Fail) return false;
    return true;
}

nlohmann::json VerifyReport::to_json() const {
    json crit = json::array();
    for (const auto& c : criteria)
        crit.push_back({{"id", c.id},
                        {"name", c.name},
                        {"verdict", bifurc::to_string(c.verdict)},
                        {"summary", c.summary},
                        {"seconds", c.seconds},
                        {"data", c.data}});
    json j{{"admissible", admissible}, {"violations", violations}, {"passed", passed()}, {"criteria", crit}};
    if (!error.empty()) j["error"] = error;
    return j;
}

std::string format_result(const CriterionResult& r) {
    char head[32];
    std::snprintf(head, sizeof head, "%s %2d ", to_string(r.verdict).c_str(), r.id);
    return std::string(head) + r.name + ": " + r.summary;
}

VerifyReport run_verify(const RunConfig& config, VerifyLevel level,
                        const std::function<void(const CriterionResult&)>& on_result) {
    VerifyReport rep;
    const AdmissibilityReport adm = validate(config.problem);
    rep.admissible = adm.ok;
    rep.violations = adm.violations;
    if (!adm.ok) {
        rep.error = "problem.Inadmissible";
        return rep;
    }
    try {
        config.check();
        Context ctx(config, level);
        const std::vector<std::function<CriterionResult()>> steps{
            [&] { return ground_state_fidelity(ctx); },
            [&] { return gamma_limit(ctx, 2, CaseTag::L1Case); },
            [&] { return gamma_limit(ctx, 3, CaseTag::AlgebraicCase); },
            [&] { return gamma_decay(ctx); },
            [&] { return gprime_rates(ctx); },
            [&] { return reduction_rates(ctx); },
            [&] { return localization(ctx); },
            [&] { return energy_expansion(ctx); },
            [&] { return morse_index(ctx); },
            [&] { return hessian_limit(ctx); },
            [&] { return scaling_trichotomy(ctx); },
            [&] { return pde_residual(ctx); },
            [&] { return calculus_consistency(ctx); }};
        for (const auto& step : steps) {
            rep.criteria.push_back(step());
            if (on_result) on_result(rep.criteria.back());
        }
    } catch (const Error& e) {
        rep.error = e.code() + ": " + e.what();
    }
    return rep;
}

}  // namespace bifurc

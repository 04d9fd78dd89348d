#include "bifurc/functional.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <Eigen/Eigenvalues>

#include "bifurc/errors.hpp"
#include "bifurc/groundstate.hpp"

namespace bifurc {

namespace {

double signed_pow(double x, double e) { return x < 0.0 ? -std::pow(-x, e) : std::pow(x, e); }

double alpha_of(const ProblemSpec& spec) {
    return spec.case_tag == CaseTag::L1Case ? static_cast<double>(spec.N) : spec.a_coeff.gamma;
}

double norm_of(std::span<const double> t) {
    double s = 0.0;
    for (double x : t) s += x * x;
    return std::sqrt(s);
}

}  // namespace

Functional::Functional(const ProblemSpec& spec, const Grid& grid)
    : spec_(spec), grid_(grid), solver_(std::make_unique<HelmholtzSolver>(grid)) {
    if (spec.N != grid.N) throw Error("functional", "GridMismatch", "problem and grid dimensions differ");
}

namespace {

std::int64_t storage_position(const SparseMat& m, int row, int col) {
    const auto* outer = m.outerIndexPtr();
    const auto* inner = m.innerIndexPtr();
    const auto* first = inner + outer[col];
    const auto* last = inner + outer[col + 1];
    const auto* it = std::lower_bound(first, last, row);
    if (it == last || *it != row) throw Error("functional", "PatternMismatch", "Hessian entry outside pattern");
    return static_cast<std::int64_t>(it - inner);
}

}  // namespace

const Functional::Plans& Functional::plans(double eps) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(eps);
    if (it != cache_.end()) return *it->second;
    auto p = std::make_unique<Plans>();
    const double sa = eps > 0.0 ? eps : 0.0;
    p->a = std::make_unique<CoefficientQuadrature>(grid_, spec_.a_coeff, sa);
    p->b = std::make_unique<CoefficientQuadrature>(grid_, spec_.b_coeff, sa);

    const SparseMat& L = solver_->matrix();
    const Vec ones = Vec::Ones(static_cast<Eigen::Index>(grid_.size()));
    std::vector<Eigen::Triplet<double>> ta, tb, all;
    p->a->hessian(ones, 3.0, 0.0, ta);
    p->b->hessian(ones, 3.0, 0.0, tb);
    for (int k = 0; k < L.outerSize(); ++k)
        for (SparseMat::InnerIterator i(L, k); i; ++i) all.emplace_back(static_cast<int>(i.row()), static_cast<int>(i.col()), 0.0);
    all.insert(all.end(), ta.begin(), ta.end());
    all.insert(all.end(), tb.begin(), tb.end());
    p->pattern.resize(L.rows(), L.cols());
    p->pattern.setFromTriplets(all.begin(), all.end());
    p->pattern.makeCompressed();
    for (int k = 0; k < L.outerSize(); ++k)
        for (SparseMat::InnerIterator i(L, k); i; ++i)
            p->pos_L.push_back(storage_position(p->pattern, static_cast<int>(i.row()), static_cast<int>(i.col())));
    for (Eigen::Index i = 0; i < L.rows(); ++i)
        p->pos_diag.push_back(storage_position(p->pattern, static_cast<int>(i), static_cast<int>(i)));
    for (const auto& t : ta) p->pos_a.push_back(storage_position(p->pattern, t.row(), t.col()));
    for (const auto& t : tb) p->pos_b.push_back(storage_position(p->pattern, t.row(), t.col()));

    const Plans& ref = *p;
    cache_.emplace(eps, std::move(p));
    return ref;
}

double Functional::F_eval(const Vec& u) const {
    const double e = spec_.p + 1.0;
    return spec_.A / e * grid_.cell_volume() * u.array().abs().pow(e).sum();
}

Vec Functional::F_dual(const Vec& u) const {
    Vec d(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) d[i] = signed_pow(u[i], spec_.p);
    return spec_.A * grid_.cell_volume() * d;
}

double Functional::G_eval(double eps, const Vec& u) const {
    if (eps == 0.0) return 0.0;
    const Plans& pl = plans(eps);
    const double p1 = spec_.p + 1.0, q1 = spec_.q + 1.0;
    return -pl.a->value(u, p1) / p1 - std::pow(eps, spec_.b_scaling_exponent()) * pl.b->value(u, q1) / q1;
}

Vec Functional::G_dual(double eps, const Vec& u) const {
    if (eps == 0.0) return Vec::Zero(u.size());
    const Plans& pl = plans(eps);
    const double p1 = spec_.p + 1.0, q1 = spec_.q + 1.0;
    return -pl.a->gradient(u, p1) / p1 - std::pow(eps, spec_.b_scaling_exponent()) * pl.b->gradient(u, q1) / q1;
}

Vec Functional::G_hess_dual_apply(double eps, const Vec& u, const Vec& v) const {
    if (eps == 0.0) return Vec::Zero(u.size());
    const Plans& pl = plans(eps);
    const double p1 = spec_.p + 1.0, q1 = spec_.q + 1.0;
    return -pl.a->hessian_apply(u, v, p1) / p1 -
           std::pow(eps, spec_.b_scaling_exponent()) * pl.b->hessian_apply(u, v, q1) / q1;
}

double Functional::f_eval(double eps, const Vec& u) const {
    return 0.5 * h1_inner(grid_, u, u) - F_eval(u) + G_eval(eps, u);
}

Vec Functional::f_dual(double eps, const Vec& u) const {
    return grid_.cell_volume() * apply_operator(grid_, u) - F_dual(u) + G_dual(eps, u);
}

Vec Functional::f_hess_dual_apply(double eps, const Vec& u, const Vec& v) const {
    Vec Fh(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) Fh[i] = std::pow(std::abs(u[i]), spec_.p - 1.0) * v[i];
    return grid_.cell_volume() * (apply_operator(grid_, v) - spec_.p * spec_.A * Fh) +
           G_hess_dual_apply(eps, u, v);
}

SparseMat Functional::f_hessian(double eps, const Vec& u) const {
    const Plans& pl = plans(eps);
    SparseMat H = pl.pattern;
    double* values = H.valuePtr();
    std::fill(values, values + H.nonZeros(), 0.0);
    const double hN = grid_.cell_volume();
    const SparseMat& L = solver_->matrix();
    std::size_t k = 0;
    for (int c = 0; c < L.outerSize(); ++c)
        for (SparseMat::InnerIterator i(L, c); i; ++i) values[pl.pos_L[k++]] += hN * i.value();
    for (Eigen::Index i = 0; i < u.size(); ++i)
        values[pl.pos_diag[static_cast<std::size_t>(i)]] -= hN * spec_.p * spec_.A * std::pow(std::abs(u[i]), spec_.p - 1.0);
    if (eps != 0.0) {
        pl.a->hessian_accumulate(u, spec_.p + 1.0, -1.0 / (spec_.p + 1.0), pl.pos_a, values);
        pl.b->hessian_accumulate(u, spec_.q + 1.0, -std::pow(eps, spec_.b_scaling_exponent()) / (spec_.q + 1.0),
                                 pl.pos_b, values);
    }
    return H;
}

Field Functional::F_grad(const Field& u) const {
    require_same_grid(grid_, u.grid());
    return Field(grid_, solver_->riesz(F_dual(u.values())));
}

Field Functional::F_hess_apply(const Field& u, const Field& v) const {
    require_same_grid(grid_, u.grid());
    Vec d(u.values().size());
    for (Eigen::Index i = 0; i < d.size(); ++i)
        d[i] = spec_.p * spec_.A * grid_.cell_volume() * std::pow(std::abs(u.values()[i]), spec_.p - 1.0) * v.values()[i];
    return Field(grid_, solver_->riesz(d));
}

Field Functional::G_grad(double eps, const Field& u) const {
    require_same_grid(grid_, u.grid());
    return Field(grid_, solver_->riesz(G_dual(eps, u.values())));
}

Field Functional::G_hess_apply(double eps, const Field& u, const Field& v) const {
    require_same_grid(grid_, u.grid());
    return Field(grid_, solver_->riesz(G_hess_dual_apply(eps, u.values(), v.values())));
}

Field Functional::f_grad(double eps, const Field& u) const {
    require_same_grid(grid_, u.grid());
    return Field(grid_, solver_->riesz(f_dual(eps, u.values())));
}

Field Functional::f_hess_apply(double eps, const Field& u, const Field& v) const {
    require_same_grid(grid_, u.grid());
    return Field(grid_, solver_->riesz(f_hess_dual_apply(eps, u.values(), v.values())));
}

double Functional::dual_norm(const Vec& dual) const {
    return std::sqrt(std::max(0.0, dual.dot(solver_->riesz(dual))));
}

// ---------------------------------------------------------------- Γ

std::string to_string(Definiteness d) {
    switch (d) {
        case Definiteness::PosDef: return "PosDef";
        case Definiteness::NegDef: return "NegDef";
        case Definiteness::Indefinite: return "Indefinite";
        case Definiteness::Degenerate: return "Degenerate";
    }
    return "?";
}

namespace {

double l1_mass(const ProblemSpec& spec) {
    if (spec.a_coeff.derived_integral) return *spec.a_coeff.derived_integral;
    const auto s = coefficient_integral(spec.a_coeff, spec.N);
    if (!s) throw Error("functional", "WrongCase", "a − A is not integrable");
    return *s;
}

Definiteness classify(const Eigen::MatrixXd& H, bool* degenerate) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const auto ev = es.eigenvalues();
    const double largest = ev.cwiseAbs().maxCoeff();
    const double smallest = ev.cwiseAbs().minCoeff();
    *degenerate = !(largest > 0.0) || smallest < 1e-8 * largest;
    if (*degenerate) return Definiteness::Degenerate;
    if (ev.minCoeff() > 0.0) return Definiteness::PosDef;
    if (ev.maxCoeff() < 0.0) return Definiteness::NegDef;
    return Definiteness::Indefinite;
}

}  // namespace

double gamma_L1(const ProblemSpec& spec, const GroundState& gs, std::span<const double> theta) {
    if (spec.case_tag != CaseTag::L1Case) throw Error("functional", "WrongCase", "gamma_L1 needs the L1 case");
    const double S = l1_mass(spec);
    return -S / (spec.p + 1.0) * std::pow(gs.eval(norm_of(theta)), spec.p + 1.0);
}

double gamma_algebraic(const ProblemSpec& spec, const GroundState& gs, const Grid& grid,
                       std::span<const double> theta) {
    if (spec.case_tag != CaseTag::AlgebraicCase)
        throw Error("functional", "WrongCase", "gamma_algebraic needs the algebraic case");
    const double gamma = spec.a_coeff.gamma;
    if (!(gamma > 0.0) || !(gamma < spec.N)) throw Error("grid", "GammaOutOfRange", "need 0 < γ < N");
    const double t = norm_of(theta);
    Grid g = grid;
    if (2.0 * t > grid.R) {
        const double R = std::ceil(2.0 * t / grid.h - 1e-9) * grid.h;
        g = Grid::make(grid.N, R, grid.h, 1e9);
    }
    const Field z = embed_state(gs, g, theta);
    Vec zp = z.values().array().abs().pow(spec.p + 1.0).matrix();
    const double I = singular_quadrature(Field(g, std::move(zp)), gamma);
    return -spec.a_coeff.amplitude / (spec.p + 1.0) * I;
}

double gamma_value(const ProblemSpec& spec, const GroundState& gs, const Grid& grid,
                   std::span<const double> theta) {
    return spec.case_tag == CaseTag::L1Case ? gamma_L1(spec, gs, theta) : gamma_algebraic(spec, gs, grid, theta);
}

GammaHessian hess_gamma(const ProblemSpec& spec, const GroundState& gs, const Grid& grid,
                        std::span<const double> theta) {
    const int N = spec.N;
    const auto n = static_cast<std::size_t>(N);
    GammaHessian out;
    out.matrix = Eigen::MatrixXd::Zero(N, N);
    if (spec.case_tag == CaseTag::L1Case) {
        const double S = l1_mass(spec);
        const double r = norm_of(theta);
        const double z = gs.eval(r), dz = gs.eval_deriv(r), d2z = gs.eval_second(r);
        const double p = spec.p;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double ni = r > 1e-12 ? theta[i] / r : 0.0;
                const double nj = r > 1e-12 ? theta[j] / r : 0.0;
                const double delta = i == j ? 1.0 : 0.0;
                const double dij = r > 1e-12 ? d2z * ni * nj + dz / r * (delta - ni * nj) : d2z * delta;
                const double di = dz * ni, dj = dz * nj;
                out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    -S * (std::pow(z, p) * dij + p * std::pow(z, p - 1.0) * di * dj);
            }
    } else {
        const double step = 1e-3;
        std::vector<double> th(theta.begin(), theta.end());
        auto G = [&](const std::vector<double>& x) { return gamma_algebraic(spec, gs, grid, x); };
        const double g0 = G(th);
        for (std::size_t i = 0; i < n; ++i) {
            auto tp = th, tm = th;
            tp[i] += step;
            tm[i] -= step;
            out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = (G(tp) - 2.0 * g0 + G(tm)) / (step * step);
            for (std::size_t j = i + 1; j < n; ++j) {
                auto pp = th, pm = th, mp = th, mm = th;
                pp[i] += step; pp[j] += step;
                pm[i] += step; pm[j] -= step;
                mp[i] -= step; mp[j] += step;
                mm[i] -= step; mm[j] -= step;
                const double v = (G(pp) - G(pm) - G(mp) + G(mm)) / (4.0 * step * step);
                out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
                out.matrix(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
            }
        }
    }
    bool degenerate = false;
    out.definiteness = classify(out.matrix, &degenerate);
    if (degenerate) throw Error("functional", "DegenerateHessian", "D²Γ is numerically singular");
    return out;
}

GammaProfile gamma_profile(const ProblemSpec& spec, const GroundState& gs, const Grid& grid,
                           const std::vector<std::vector<double>>& thetas) {
    GammaProfile prof;
    prof.case_tag = spec.case_tag;
    prof.alpha = alpha_of(spec);
    std::size_t best = 0;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        prof.theta_samples.push_back(thetas[k]);
        prof.gamma_samples.push_back(gamma_value(spec, gs, grid, thetas[k]));
        if (std::abs(prof.gamma_samples.back()) > std::abs(prof.gamma_samples[best])) best = k;
    }
    if (thetas.empty()) return prof;
    prof.extremum_theta = thetas[best];
    try {
        const GammaHessian H = hess_gamma(spec, gs, grid, prof.extremum_theta);
        prof.hessian_at_extremum = H.matrix;
        prof.definiteness = H.definiteness;
    } catch (const Error&) {
        prof.hessian_at_extremum = Eigen::MatrixXd::Zero(spec.N, spec.N);
        prof.definiteness = Definiteness::Degenerate;
    }
    return prof;
}

// ---------------------------------------------------------------- probes

int thread_cap() {
    if (const char* env = std::getenv("BIFURC_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Runs body(k) for k in [0, count) on at most thread_cap() threads.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(thread_cap()));
    if (workers <= 1) {
        for (std::size_t k = 0; k < count; ++k) body(k);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t k = w; k < count; k += workers) body(k);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

LimitProbe gamma_limit_probe(const Functional& fn, const GroundState& gs, std::span<const double> theta,
                             const std::vector<double>& eps_grid) {
    const ProblemSpec& spec = fn.spec();
    LimitProbe probe;
    probe.alpha = alpha_of(spec);
    probe.gamma_ref = gamma_value(spec, gs, fn.grid(), theta);
    const Field z = embed_state(gs, fn.grid(), theta);
    probe.eps_values = eps_grid;
    probe.ratios.assign(eps_grid.size(), 0.0);
    parallel_for(eps_grid.size(), [&](std::size_t k) {
        probe.ratios[k] = fn.G_eval(eps_grid[k], z) / std::pow(eps_grid[k], probe.alpha);
    });
    for (double r : probe.ratios) probe.relative_errors.push_back(std::abs(r - probe.gamma_ref) / std::abs(probe.gamma_ref));
    if (!probe.relative_errors.empty()) probe.terminal_relative_error = probe.relative_errors.back();
    const std::size_t m = probe.relative_errors.size();
    probe.error_decreasing = m >= 3 && probe.relative_errors[m - 1] < probe.relative_errors[m - 2] &&
                             probe.relative_errors[m - 2] < probe.relative_errors[m - 3];
    if (m >= 2) probe.error_fit = fit_rate(eps_grid, probe.relative_errors);
    return probe;
}

double predicted_gprime_exponent(const ProblemSpec& spec, bool* threshold_case) {
    const double half = spec.N / 2.0 + 1.0;
    if (threshold_case) *threshold_case = false;
    if (spec.case_tag == CaseTag::L1Case) return half;
    const double g = spec.a_coeff.gamma;
    if (std::abs(g - half) < 1e-12) {
        if (threshold_case) *threshold_case = true;
        return g / 2.0;
    }
    return g < half ? g : half;
}

GprimeProbe gprime_rate_probe(const Functional& fn, const GroundState& gs, std::span<const double> theta,
                              const std::vector<double>& eps_grid) {
    GprimeProbe probe;
    probe.predicted_exponent = predicted_gprime_exponent(fn.spec(), &probe.threshold_case);
    probe.gate_exponent = alpha_of(fn.spec()) / 2.0;
    const Field z = embed_state(gs, fn.grid(), theta);
    std::vector<double> norms(eps_grid.size(), 0.0);
    const double hN = fn.grid().cell_volume();
    parallel_for(eps_grid.size(), [&](std::size_t k) {
        const Vec dual = fn.G_dual(eps_grid[k], z.values());
        norms[k] = riesz_dual_norm(Field(fn.grid(), dual / hN)).second;
    });
    probe.fit = fit_rate(eps_grid, norms);
    return probe;
}

}  // namespace bifurc

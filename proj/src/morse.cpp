#include "bifurc/morse.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bifurc/errors.hpp"
#include "bifurc/groundstate.hpp"
#include "bifurc/krylov.hpp"
#include "tangent_projector.hpp"

namespace bifurc {

namespace {

double alpha_of(const ProblemSpec& spec) {
    return spec.case_tag == CaseTag::L1Case ? static_cast<double>(spec.N) : spec.a_coeff.gamma;
}

Vec start_vector(const Grid& g) {
    std::mt19937 rng(20240601u);
    std::normal_distribution<double> nd;
    Vec v(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto mi = g.multi_index(i);
        double r2 = 0.0;
        for (int k = 0; k < g.N; ++k) r2 += g.coord(mi[static_cast<std::size_t>(k)]) * g.coord(mi[static_cast<std::size_t>(k)]);
        v[static_cast<Eigen::Index>(i)] = nd(rng) * std::exp(-r2 / 32.0);
    }
    return v;
}

EigenPairs lowest(const Functional& fn, const SparseMat& H, int k, const MorseOptions& opt,
                  const LinearOp& deflate = {}) {
    const Grid& g = fn.grid();
    const LinearOp A = [&](const Vec& v) { return fn.solver().riesz(H * v); };
    const InnerProduct dot = [&g](const Vec& a, const Vec& b) { return h1_inner(g, a, b); };
    const int max_iter = std::min<int>(opt.lanczos_max_iter, static_cast<int>(g.size()));
    EigenPairs ep = lanczos_smallest(A, dot, start_vector(g), k, opt.lanczos_tol, max_iter, deflate);
    if (!ep.converged) throw Error("morse", "EigensolverNonConvergence", "Lanczos did not converge");
    return ep;
}

int count_negative(const std::vector<double>& v) {
    return static_cast<int>(std::count_if(v.begin(), v.end(), [](double x) { return x < 0.0; }));
}

}  // namespace

MorseReport unperturbed_spectrum(const Functional& fn, const GroundState& gs, int k, const MorseOptions& opt) {
    const Grid& g = fn.grid();
    const std::vector<double> theta(static_cast<std::size_t>(g.N), 0.0);
    const Field z = embed_state(gs, g, theta);
    std::vector<Vec> frame;
    for (const Field& f : tangent_frame(gs, g, theta)) frame.push_back(f.values());
    const TangentProjector P(g, frame);
    const SparseMat H = fn.f_hessian(0.0, z.values());

    MorseReport rep;
    rep.eps = 0.0;
    const EigenPairs full = lowest(fn, H, k, opt);
    rep.eigenvalues_low = full.values;
    for (std::size_t j = 0; j < full.values.size(); ++j) {
        const Vec& y = full.vectors[j];
        const Vec c = P.coefficients(y);
        Vec ty = Vec::Zero(y.size());
        for (std::size_t i = 0; i < P.t.size(); ++i) ty += c[static_cast<Eigen::Index>(i)] * P.t[i];
        const double align = std::sqrt(std::max(0.0, h1_inner(g, ty, ty) / h1_inner(g, y, y)));
        rep.tangent_alignment.push_back(align);
        if (std::abs(full.values[j]) < opt.near_kernel_threshold && align > opt.alignment_threshold)
            ++rep.near_kernel_dim;
    }
    rep.index_u_eps = count_negative(full.values);

    const LinearOp proj = [&P](const Vec& v) { return P.apply(v); };
    const EigenPairs red = lowest(fn, H, k, opt, proj);
    rep.eigenvalues_projected = red.values;
    rep.m0 = count_negative(red.values);
    rep.tangent_block = tangent_block(fn, gs, 0.0, z, theta);
    return rep;
}

Eigen::MatrixXd tangent_block(const Functional& fn, const GroundState& gs, double eps, const Field& u,
                              std::span<const double> theta) {
    const auto frame = tangent_frame(gs, fn.grid(), theta);
    const auto n = static_cast<Eigen::Index>(frame.size());
    Eigen::MatrixXd B(n, n);
    std::vector<Vec> Ht;
    for (const Field& t : frame) Ht.push_back(fn.f_hess_dual_apply(eps, u.values(), t.values()));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            B(i, j) = frame[static_cast<std::size_t>(i)].values().dot(Ht[static_cast<std::size_t>(j)]);
    return 0.5 * (B + B.transpose());
}

MorseReport perturbed_index(const Functional& fn, const GroundState& gs, double eps, const Field& u,
                            std::span<const double> theta, int k, int m0, const MorseOptions& opt) {
    const ProblemSpec& spec = fn.spec();
    const SparseMat H = fn.f_hessian(eps, u.values());
    MorseReport rep;
    rep.eps = eps;
    rep.m0 = m0;
    const EigenPairs ep = lowest(fn, H, k, opt);
    const EigenPairs ep2 = lowest(fn, H, k + 2, opt);
    rep.eigenvalues_low = ep.values;
    rep.index_u_eps = count_negative(ep.values);
    rep.index_stable = count_negative(ep2.values) == rep.index_u_eps;
    const double alpha = alpha_of(spec);
    rep.band = 1e-2 * std::pow(eps, alpha);
    for (double mu : ep2.values)
        if (std::abs(mu) < rep.band) rep.nondegenerate = false;
    rep.tangent_block = tangent_block(fn, gs, eps, u, theta);
    rep.tangent_block_scaled = eps > 0.0 ? Eigen::MatrixXd(rep.tangent_block / std::pow(eps, alpha)) : rep.tangent_block;
    try {
        rep.gamma_hessian_ref = hess_gamma(spec, gs, fn.grid(), theta).matrix;
    } catch (const Error&) {
        rep.gamma_hessian_ref = Eigen::MatrixXd::Zero(spec.N, spec.N);
    }
    if (!rep.nondegenerate)
        throw Error("morse", "DegenerateAtScale", "an eigenvalue lies inside the 1e-2·ε^α band");
    return rep;
}

TangentBlockLimit tangent_block_limit(const Functional& fn, const GroundState& gs,
                                      const std::vector<BranchPoint>& branch) {
    const ProblemSpec& spec = fn.spec();
    const double alpha = alpha_of(spec);
    TangentBlockLimit lim;
    const BranchPoint* last = nullptr;
    for (const BranchPoint& bp : branch) {
        if (!bp.ok || !bp.u) continue;
        lim.eps_values.push_back(bp.eps);
        lim.scaled_blocks.push_back(tangent_block(fn, gs, bp.eps, *bp.u, bp.theta) / std::pow(bp.eps, alpha));
        last = &bp;
    }
    if (lim.eps_values.size() < 4) throw Error("morse", "InsufficientPoints", "need at least four solved points");
    lim.reference = hess_gamma(spec, gs, fn.grid(), last->theta).matrix;
    const double ref_scale = lim.reference.cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(lim.reference);
    const double ref_sign = er.eigenvalues().minCoeff() > 0.0 ? 1.0 : (er.eigenvalues().maxCoeff() < 0.0 ? -1.0 : 0.0);
    for (std::size_t k = 0; k < lim.scaled_blocks.size(); ++k) {
        lim.relative_errors.push_back((lim.scaled_blocks[k] - lim.reference).cwiseAbs().maxCoeff() / ref_scale);
        if (k + 3 >= lim.scaled_blocks.size()) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(lim.scaled_blocks[k]);
            const double s = eb.eigenvalues().minCoeff() > 0.0 ? 1.0 : (eb.eigenvalues().maxCoeff() < 0.0 ? -1.0 : 0.0);
            if (s != ref_sign || s == 0.0) lim.sign_consistent = false;
        }
    }
    lim.terminal_relative_error = lim.relative_errors.back();
    lim.error_fit = fit_rate(lim.eps_values, lim.relative_errors);
    return lim;
}

HypothesisHReport check_hypothesis_H(const std::vector<Field>& tangent,
                                     const std::vector<std::vector<Field>>& curvature, double tol) {
    HypothesisHReport rep;
    rep.tolerance = tol;
    const std::size_t N = tangent.size();
    std::vector<double> norms;
    for (const Field& t : tangent) norms.push_back(h1_norm(t));
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j)
            rep.orthogonality = std::max(rep.orthogonality, std::abs(h1_inner(tangent[i], tangent[j])) / (norms[i] * norms[j]));
    for (std::size_t i = 1; i < N; ++i) rep.norm_spread = std::max(rep.norm_spread, std::abs(norms[i] - norms[0]) / norms[0]);
    for (std::size_t i = 0; i < curvature.size(); ++i)
        for (std::size_t j = 0; j < curvature[i].size(); ++j) {
            const double cn = h1_norm(curvature[i][j]);
            if (cn == 0.0) continue;
            for (std::size_t l = 0; l < N; ++l)
                rep.curvature = std::max(rep.curvature, std::abs(h1_inner(curvature[i][j], tangent[l])) / (cn * norms[l]));
        }
    rep.orthogonality_ok = rep.orthogonality < tol;
    rep.norms_ok = rep.norm_spread < tol;
    rep.curvature_ok = rep.curvature < tol;
    rep.ok = rep.orthogonality_ok && rep.norms_ok && rep.curvature_ok;
    return rep;
}

HypothesisHReport check_hypothesis_H(const GroundState& gs, const Grid& grid, std::span<const double> theta,
                                     double tol) {
    return check_hypothesis_H(tangent_frame(gs, grid, theta), curvature_frame(gs, grid, theta), tol);
}

}  // namespace bifurc

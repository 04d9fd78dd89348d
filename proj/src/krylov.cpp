#include "bifurc/krylov.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "bifurc/quadrature_rules.hpp"

namespace bifurc {

GaussRule gauss_legendre(int n) {
    // Golub–Welsch: nodes are eigenvalues of the Jacobi matrix of the Legendre
    // recurrence, weights 2·(first eigenvector component)².
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = b;
        J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rule.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[static_cast<std::size_t>(i)] = 2.0 * v0 * v0;
    }
    return rule;
}

KrylovResult conjugate_gradient(const LinearOp& A, const Vec& b, double rtol, int max_iter,
                                const LinearOp& preconditioner) {
    KrylovResult res;
    res.x = Vec::Zero(b.size());
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    Vec r = b;
    Vec z = preconditioner ? preconditioner(r) : r;
    Vec p = z;
    double rz = r.dot(z);
    for (int it = 1; it <= max_iter; ++it) {
        const Vec Ap = A(p);
        const double pAp = p.dot(Ap);
        if (!(pAp > 0.0)) break;
        const double alpha = rz / pAp;
        res.x += alpha * p;
        r -= alpha * Ap;
        res.iterations = it;
        res.relative_residual = r.norm() / bnorm;
        if (res.relative_residual <= rtol) {
            res.converged = true;
            return res;
        }
        z = preconditioner ? preconditioner(r) : r;
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    return res;
}

KrylovResult minres(const LinearOp& A, const InnerProduct& dot, const Vec& b, double rtol,
                    int max_iter) {
    KrylovResult res;
    res.x = Vec::Zero(b.size());
    const double beta1 = std::sqrt(std::max(0.0, dot(b, b)));
    if (beta1 == 0.0) {
        res.converged = true;
        return res;
    }
    // Paige–Saunders recurrences; Lanczos vectors orthonormal in `dot`.
    Vec r1 = b, r2 = b, y = b;
    Vec w = Vec::Zero(b.size()), w1 = w, w2 = w;
    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0;
    double phibar = beta1, cs = -1.0, sn = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        const Vec v = y / beta;
        y = A(v);
        if (it >= 2) y -= (beta / oldb) * r1;
        const double alfa = dot(v, y);
        y -= (alfa / beta) * r2;
        r1 = r2;
        r2 = y;
        oldb = beta;
        beta = std::sqrt(std::max(0.0, dot(y, y)));

        const double oldeps = epsln;
        const double delta = cs * dbar + sn * alfa;
        const double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        const double gamma = std::max(std::hypot(gbar, beta), 1e-300);
        cs = gbar / gamma;
        sn = beta / gamma;
        const double phi = cs * phibar;
        phibar = sn * phibar;

        w1 = w2;
        w2 = w;
        w = (v - oldeps * w1 - delta * w2) / gamma;
        res.x += phi * w;

        res.iterations = it;
        res.relative_residual = phibar / beta1;
        if (res.relative_residual <= rtol) {
            res.converged = true;
            return res;
        }
        if (beta == 0.0) break;
    }
    return res;
}

EigenPairs lanczos_smallest(const LinearOp& A, const InnerProduct& dot, const Vec& start, int k,
                            double tol, int max_iter, const LinearOp& deflate) {
    EigenPairs out;
    auto project = [&](Vec v) { return deflate ? deflate(v) : v; };
    std::vector<Vec> V;
    std::vector<double> alpha, beta;
    Vec q = project(start);
    double nq = std::sqrt(std::max(0.0, dot(q, q)));
    if (nq == 0.0) return out;
    q /= nq;
    V.push_back(q);

    auto orthogonalize = [&](Vec& r) {
        // two passes of classical Gram–Schmidt
        for (int pass = 0; pass < 2; ++pass)
            for (const Vec& u : V) r -= dot(u, r) * u;
    };

    for (int m = 1; m <= max_iter; ++m) {
        Vec r = project(A(V.back()));
        alpha.push_back(dot(V.back(), r));
        orthogonalize(r);
        if (deflate) {
            // rounding-level components outside the invariant subspace would
            // otherwise be amplified by the normalization below
            r = project(r);
            orthogonalize(r);
        }
        const double b = std::sqrt(std::max(0.0, dot(r, r)));

        const int sz = static_cast<int>(alpha.size());
        const bool check = sz >= k && (sz % 5 == 0 || b < 1e-14 || m == max_iter);
        if (check) {
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(sz, sz);
            for (int i = 0; i < sz; ++i) {
                T(i, i) = alpha[static_cast<std::size_t>(i)];
                if (i + 1 < sz) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            bool all = true;
            std::vector<double> resid(static_cast<std::size_t>(k));
            for (int j = 0; j < k; ++j) {
                resid[static_cast<std::size_t>(j)] = std::abs(b * es.eigenvectors()(sz - 1, j));
                if (resid[static_cast<std::size_t>(j)] > tol) all = false;
            }
            if (all || b < 1e-14 || m == max_iter) {
                out.iterations = m;
                out.converged = all || b < 1e-14;
                for (int j = 0; j < k; ++j) {
                    Vec y = Vec::Zero(start.size());
                    for (int i = 0; i < sz; ++i) y += es.eigenvectors()(i, j) * V[static_cast<std::size_t>(i)];
                    out.values.push_back(es.eigenvalues()(j));
                    out.vectors.push_back(std::move(y));
                    out.residuals.push_back(resid[static_cast<std::size_t>(j)]);
                }
                return out;
            }
        }
        if (b < 1e-14) break;
        beta.push_back(b);
        V.push_back(r / b);
    }
    out.iterations = max_iter;
    return out;
}

}  // namespace bifurc

#include "bifurc/collocation.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "bifurc/errors.hpp"

namespace bifurc {

namespace {

// Chebyshev–Lobatto points x_j = cos(πj/n) and the differentiation matrix
Eigen::MatrixXd cheb_matrix(int n, Eigen::VectorXd& x) {
    x.resize(n + 1);
    for (int j = 0; j <= n; ++j) x[j] = std::cos(M_PI * j / n);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n + 1, n + 1);
    auto c = [&](int j) { return (j == 0 || j == n ? 2.0 : 1.0) * (j % 2 ? -1.0 : 1.0); };
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            if (i != j) D(i, j) = c(i) / c(j) / (x[i] - x[j]);
    for (int i = 0; i <= n; ++i) D(i, i) = -D.row(i).sum();
    return D;
}

}  // namespace

CollocationProfile collocation_ground_state(int N, double p, double A, int nodes, double L) {
    if (N < 1 || N > 3 || !(p > 1.0) || !(A > 0.0) || nodes < 8)
        throw Error("groundstate", "InvalidInput", "collocation needs N in 1..3, p > 1, A > 0");
    const int n = nodes;
    Eigen::VectorXd x;
    const Eigen::MatrixXd D = cheb_matrix(n, x);
    // r = (1 − x)L/2 runs from 0 (j = 0) to L (j = n)
    const Eigen::VectorXd r = (1.0 - x.array()) * (L / 2.0);
    const Eigen::MatrixXd D1 = -(2.0 / L) * D;
    const Eigen::MatrixXd D2 = D1 * D1;

    // unknowns z_0..z_{n−1}; z_n = 0
    const int m = n;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n + 1);
    const double amp = std::pow((p + 1.0) / (2.0 * A), 1.0 / (p - 1.0));
    for (int j = 0; j < n; ++j) z[j] = amp * std::pow(1.0 / std::cosh((p - 1.0) * r[j] / 2.0), 2.0 / (p - 1.0));

    CollocationProfile out;
    const int stages = 8 * (N - 1);
    for (int stage = 0; stage <= stages; ++stage) {
        const double k = stages == 0 ? 0.0 : (N - 1.0) * stage / stages;
        auto residual = [&](const Eigen::VectorXd& v) {
            Eigen::VectorXd F(m);
            const Eigen::VectorXd d1 = D1 * v, d2 = D2 * v;
            F[0] = d1[0];
            for (int j = 1; j < m; ++j)
                F[j] = d2[j] + k / r[j] * d1[j] - v[j] + A * std::pow(std::abs(v[j]), p - 1.0) * v[j];
            return F;
        };
        bool converged = false;
        for (int it = 0; it < 50 && !converged; ++it) {
            const Eigen::VectorXd F = residual(z);
            Eigen::MatrixXd J(m, m);
            J.row(0) = D1.row(0).head(m);
            for (int j = 1; j < m; ++j) {
                J.row(j) = D2.row(j).head(m) + (k / r[j]) * D1.row(j).head(m);
                J(j, j) += -1.0 + A * p * std::pow(std::abs(z[j]), p - 1.0);
            }
            const Eigen::VectorXd dz = J.partialPivLu().solve(-F);
            // the strong-form residual floors at rounding times ‖D2‖ ~ n⁴, so
            // convergence is judged on the Newton step
            double t = 1.0;
            const double f0 = F.cwiseAbs().maxCoeff();
            Eigen::VectorXd trial = z;
            for (int ls = 0; ls < 20; ++ls) {
                trial = z;
                trial.head(m) += t * dz;
                if (residual(trial).cwiseAbs().maxCoeff() < f0) break;
                t *= 0.5;
            }
            z = trial;
            ++out.newton_iters;
            converged = dz.cwiseAbs().maxCoeff() < 1e-11 * z.cwiseAbs().maxCoeff();
        }
        if (!converged) throw Error("groundstate", "NonConvergence", "collocation Newton stalled");
    }
    if (!(z[0] > 1e-3)) throw Error("groundstate", "NonConvergence", "collocation converged to the trivial solution");

    out.peak = z[0];
    for (int j = 0; j <= n; ++j) {
        out.r.push_back(r[j]);
        out.z.push_back(z[j]);
    }
    return out;
}

}  // namespace bifurc

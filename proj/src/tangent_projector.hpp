#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <vector>

#include "bifurc/errors.hpp"
#include "bifurc/grid.hpp"

namespace bifurc {

// H¹-orthogonal projection onto the complement of span{t_i}.
struct TangentProjector {
    std::vector<Vec> t;
    std::vector<Vec> Mt;  // M t_i, so (t_i | v) = (M t_i)·v
    Eigen::LDLT<Eigen::MatrixXd> gram;

    TangentProjector(const Grid& g, std::vector<Vec> frame) : t(std::move(frame)) {
        const auto n = static_cast<Eigen::Index>(t.size());
        for (const Vec& ti : t) Mt.push_back(g.cell_volume() * apply_operator(g, ti));
        Eigen::MatrixXd G(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) G(i, j) = Mt[static_cast<std::size_t>(i)].dot(t[static_cast<std::size_t>(j)]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        if (!(es.eigenvalues().minCoeff() > 1e-10 * es.eigenvalues().maxCoeff()))
            throw Error("reduction", "BorderSingular", "tangent frame is numerically dependent");
        gram.compute(G);
    }

    // Coefficients c with Σ c_i t_i the tangent part of v, from (t_i | v).
    Vec coefficients_from_products(const Vec& products) const { return gram.solve(products); }

    Vec coefficients(const Vec& v) const {
        Vec prod(static_cast<Eigen::Index>(t.size()));
        for (std::size_t i = 0; i < t.size(); ++i) prod[static_cast<Eigen::Index>(i)] = Mt[i].dot(v);
        return coefficients_from_products(prod);
    }

    Vec apply(const Vec& v) const {
        const Vec c = coefficients(v);
        Vec out = v;
        for (std::size_t i = 0; i < t.size(); ++i) out -= c[static_cast<Eigen::Index>(i)] * t[i];
        return out;
    }
};

}  // namespace bifurc

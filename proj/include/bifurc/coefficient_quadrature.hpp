#pragma once

#include <cstdint>
#include <vector>

#include "bifurc/grid.hpp"
#include "bifurc/problem.hpp"

namespace bifurc {

/// Quadrature of  ∫ c(x/s) |Iu(x)|^e dx  where Iu is the piecewise
/// (multi)linear interpolant of nodal values on the grid and c a coefficient.
///
/// Cells are split into sub-cells fine enough to resolve c(x/s) (its
/// variation length in x is s·ℓ(r/s)) and each sub-cell carries a tensor
/// 3-point Gauss rule. Cells where c(x/s) vanishes are skipped. The plan
/// stores, per quadrature point, the corner basis values and the weight
/// times the coefficient, so value, gradient and Hessian are exact
/// derivatives of one another.
class CoefficientQuadrature {
public:
    CoefficientQuadrature(const Grid& g, const CoefficientSpec& c, double scale);

    const Grid& grid() const { return grid_; }
    std::size_t point_count() const { return weight_.size(); }

    /// Σ w |Iu|^e.
    double value(const Vec& u, double e) const;
    /// ∂/∂u_j of value: Σ w e |Iu|^{e−1} sign(Iu) φ_j.
    Vec gradient(const Vec& u, double e) const;
    /// Second derivatives Σ w e(e−1) |Iu|^{e−2} φ_i φ_j, accumulated into
    /// `triplets` scaled by `factor`.
    void hessian(const Vec& u, double e, double factor,
                 std::vector<Eigen::Triplet<double>>& triplets) const;
    /// Same Hessian added into `values` at precomputed storage positions,
    /// one per triplet in the order `hessian` emits them.
    void hessian_accumulate(const Vec& u, double e, double factor, const std::vector<std::int64_t>& positions,
                            double* values) const;
    /// Action of the same Hessian on v.
    Vec hessian_apply(const Vec& u, const Vec& v, double e) const;

private:
    double interp(const Vec& u, std::size_t cell, std::size_t pt) const;

    Grid grid_;
    int corners_ = 2;
    std::vector<std::size_t> corner_offset_;
    std::vector<std::size_t> cell_base_;   // lowest-corner node index per active cell
    std::vector<std::size_t> cell_begin_;  // first point of each cell, plus sentinel
    std::vector<double> phi_;              // corners_ values per point
    std::vector<double> weight_;
};

}  // namespace bifurc

#include "bifurc/coefficient_quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "bifurc/quadrature_rules.hpp"

namespace bifurc {

namespace {

int sub_cell_cap(int N) { return N == 1 ? 128 : (N == 2 ? 24 : 8); }

// |x|^e with a multiplication chain for small integer exponents
double abs_pow(double x, double e) {
    const double a = std::abs(x);
    if (e == 1.0) return a;
    if (e == 2.0) return a * a;
    if (e == 3.0) return a * a * a;
    if (e == 4.0) return (a * a) * (a * a);
    if (e == 5.0) return (a * a) * (a * a) * a;
    if (e == 6.0) return (a * a * a) * (a * a * a);
    if (e == 0.0) return 1.0;
    return std::pow(a, e);
}

double signed_pow(double x, double e) { return x < 0.0 ? -abs_pow(x, e) : abs_pow(x, e); }

}  // namespace

CoefficientQuadrature::CoefficientQuadrature(const Grid& g, const CoefficientSpec& c, double scale)
    : grid_(g), corners_(1 << g.N) {
    const int N = g.N;
    for (int cn = 0; cn < corners_; ++cn) {
        std::size_t off = 0;
        for (int k = 0; k < N; ++k)
            if (cn & (1 << k)) off += g.stride(k);
        corner_offset_.push_back(off);
    }
    cell_begin_.push_back(0);
    if (c.amplitude == 0.0 || !(scale > 0.0)) return;

    const GaussRule gr = gauss_legendre(3);
    const double support = coefficient_support_radius(c);
    const int ncell = g.n - 1;
    std::size_t total_cells = 1;
    for (int k = 0; k < N; ++k) total_cells *= static_cast<std::size_t>(ncell);

    std::array<int, 3> ci{0, 0, 0};
    std::vector<double> t1, w1;
    for (std::size_t cell = 0; cell < total_cells; ++cell) {
        std::size_t rem = cell;
        for (int k = N - 1; k >= 0; --k) {
            ci[static_cast<std::size_t>(k)] = static_cast<int>(rem % static_cast<std::size_t>(ncell));
            rem /= static_cast<std::size_t>(ncell);
        }
        // distance from the origin to the closed cell
        double dmin2 = 0.0;
        std::array<double, 3> lo{0, 0, 0};
        for (int k = 0; k < N; ++k) {
            const double a = g.coord(ci[static_cast<std::size_t>(k)]);
            lo[static_cast<std::size_t>(k)] = a;
            const double b = a + g.h;
            const double d = (a > 0.0) ? a : (b < 0.0 ? -b : 0.0);
            dmin2 += d * d;
        }
        const double rmin = std::sqrt(dmin2) / scale;
        if (rmin >= support) continue;

        const double ell = coefficient_variation_length(c, rmin);
        const double ratio = g.h / (scale * ell);
        const int nsub = std::clamp(static_cast<int>(std::ceil(ratio - 1e-9)), 1, sub_cell_cap(N));

        // 1D sub-cell Gauss points on [0, 1]
        t1.clear();
        w1.clear();
        for (int s = 0; s < nsub; ++s)
            for (std::size_t q = 0; q < gr.nodes.size(); ++q) {
                t1.push_back((s + 0.5 * (gr.nodes[q] + 1.0)) / nsub);
                w1.push_back(0.5 * gr.weights[q] / nsub);
            }
        const std::size_t m = t1.size();
        std::size_t npts = 1;
        for (int k = 0; k < N; ++k) npts *= m;

        const std::size_t before = weight_.size();
        std::array<double, 3> y{0, 0, 0};
        for (std::size_t pt = 0; pt < npts; ++pt) {
            std::size_t r = pt;
            std::array<std::size_t, 3> qi{0, 0, 0};
            for (int k = N - 1; k >= 0; --k) {
                qi[static_cast<std::size_t>(k)] = r % m;
                r /= m;
            }
            double w = g.cell_volume();
            for (int k = 0; k < N; ++k) {
                const auto kk = static_cast<std::size_t>(k);
                w *= w1[qi[kk]];
                y[kk] = (lo[kk] + g.h * t1[qi[kk]]) / scale;
            }
            const double cv = eval_coefficient(c, std::span<const double>(y.data(), static_cast<std::size_t>(N)));
            if (cv == 0.0) continue;
            weight_.push_back(w * cv);
            for (int cn = 0; cn < corners_; ++cn) {
                double ph = 1.0;
                for (int k = 0; k < N; ++k) {
                    const double t = t1[qi[static_cast<std::size_t>(k)]];
                    ph *= (cn & (1 << k)) ? t : 1.0 - t;
                }
                phi_.push_back(ph);
            }
        }
        if (weight_.size() == before) continue;
        std::array<int, 3> base = ci;
        cell_base_.push_back(g.index(base));
        cell_begin_.push_back(weight_.size());
    }
}

double CoefficientQuadrature::interp(const Vec& u, std::size_t cell, std::size_t pt) const {
    const double* ph = &phi_[pt * static_cast<std::size_t>(corners_)];
    const std::size_t base = cell_base_[cell];
    double s = 0.0;
    for (int cn = 0; cn < corners_; ++cn)
        s += ph[cn] * u[static_cast<Eigen::Index>(base + corner_offset_[static_cast<std::size_t>(cn)])];
    return s;
}

double CoefficientQuadrature::value(const Vec& u, double e) const {
    double s = 0.0;
    for (std::size_t cell = 0; cell < cell_base_.size(); ++cell)
        for (std::size_t pt = cell_begin_[cell]; pt < cell_begin_[cell + 1]; ++pt)
            s += weight_[pt] * abs_pow(interp(u, cell, pt), e);
    return s;
}

Vec CoefficientQuadrature::gradient(const Vec& u, double e) const {
    Vec out = Vec::Zero(u.size());
    for (std::size_t cell = 0; cell < cell_base_.size(); ++cell) {
        const std::size_t base = cell_base_[cell];
        for (std::size_t pt = cell_begin_[cell]; pt < cell_begin_[cell + 1]; ++pt) {
            const double d = weight_[pt] * e * signed_pow(interp(u, cell, pt), e - 1.0);
            const double* ph = &phi_[pt * static_cast<std::size_t>(corners_)];
            for (int cn = 0; cn < corners_; ++cn)
                out[static_cast<Eigen::Index>(base + corner_offset_[static_cast<std::size_t>(cn)])] += d * ph[cn];
        }
    }
    return out;
}

void CoefficientQuadrature::hessian(const Vec& u, double e, double factor,
                                    std::vector<Eigen::Triplet<double>>& triplets) const {
    const auto nc = static_cast<std::size_t>(corners_);
    std::vector<double> block(nc * nc);
    for (std::size_t cell = 0; cell < cell_base_.size(); ++cell) {
        std::fill(block.begin(), block.end(), 0.0);
        for (std::size_t pt = cell_begin_[cell]; pt < cell_begin_[cell + 1]; ++pt) {
            const double d = weight_[pt] * e * (e - 1.0) * abs_pow(interp(u, cell, pt), e - 2.0);
            const double* ph = &phi_[pt * nc];
            for (std::size_t i = 0; i < nc; ++i)
                for (std::size_t j = 0; j < nc; ++j) block[i * nc + j] += d * ph[i] * ph[j];
        }
        const std::size_t base = cell_base_[cell];
        for (std::size_t i = 0; i < nc; ++i)
            for (std::size_t j = 0; j < nc; ++j)
                triplets.emplace_back(static_cast<int>(base + corner_offset_[i]),
                                      static_cast<int>(base + corner_offset_[j]), factor * block[i * nc + j]);
    }
}

void CoefficientQuadrature::hessian_accumulate(const Vec& u, double e, double factor,
                                               const std::vector<std::int64_t>& positions, double* values) const {
    const auto nc = static_cast<std::size_t>(corners_);
    std::vector<double> block(nc * nc);
    std::size_t k = 0;
    for (std::size_t cell = 0; cell < cell_base_.size(); ++cell) {
        std::fill(block.begin(), block.end(), 0.0);
        for (std::size_t pt = cell_begin_[cell]; pt < cell_begin_[cell + 1]; ++pt) {
            const double d = weight_[pt] * e * (e - 1.0) * abs_pow(interp(u, cell, pt), e - 2.0);
            const double* ph = &phi_[pt * nc];
            for (std::size_t i = 0; i < nc; ++i)
                for (std::size_t j = 0; j < nc; ++j) block[i * nc + j] += d * ph[i] * ph[j];
        }
        for (std::size_t i = 0; i < nc * nc; ++i) values[positions[k++]] += factor * block[i];
    }
}

Vec CoefficientQuadrature::hessian_apply(const Vec& u, const Vec& v, double e) const {
    Vec out = Vec::Zero(u.size());
    for (std::size_t cell = 0; cell < cell_base_.size(); ++cell) {
        const std::size_t base = cell_base_[cell];
        for (std::size_t pt = cell_begin_[cell]; pt < cell_begin_[cell + 1]; ++pt) {
            const double d = weight_[pt] * e * (e - 1.0) * abs_pow(interp(u, cell, pt), e - 2.0);
            const double dv = d * interp(v, cell, pt);
            const double* ph = &phi_[pt * static_cast<std::size_t>(corners_)];
            for (int cn = 0; cn < corners_; ++cn)
                out[static_cast<Eigen::Index>(base + corner_offset_[static_cast<std::size_t>(cn)])] += dv * ph[cn];
        }
    }
    return out;
}

}  // namespace bifurc

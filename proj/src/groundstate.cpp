#include "bifurc/groundstate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "bifurc/errors.hpp"

namespace bifurc {

namespace {

using real = long double;
using State = std::array<real, 2>;  // (z, z')

struct RadialOde {
    int N;
    real p;
    real A;

    State operator()(real r, const State& y) const {
        const real z = y[0];
        const real dz = y[1];
        const real nl = z > 0 ? A * std::pow(z, p) : -A * std::pow(-z, p);
        if (r == 0) return {dz, (z - nl) / N};
        return {dz, -(N - 1) * dz / r + z - nl};
    }
};

// Dormand–Prince 5(4) with step-size control; `advance` integrates to an
// exact target so mesh nodes are hit without interpolation.
class DormandPrince {
public:
    DormandPrince(RadialOde f, real rtol, real atol) : f_(f), rtol_(rtol), atol_(atol) {}

    State advance(real r0, State y, real r1) {
        const real dir = r1 > r0 ? 1 : -1;
        real r = r0;
        if (h_ <= 0) h_ = std::abs(r1 - r0);
        while ((r1 - r) * dir > 0) {
            const real remaining = std::abs(r1 - r);
            real h = std::min(h_, remaining);
            bool clipped = h < h_;
            for (int attempt = 0;; ++attempt) {
                State y5, err;
                step(r, y, dir * h, y5, err);
                real e = 0;
                for (int k = 0; k < 2; ++k) {
                    const real sc = atol_ + rtol_ * std::max(std::abs(y[k]), std::abs(y5[k]));
                    e = std::max(e, std::abs(err[k]) / sc);
                }
                if (e <= 1 || attempt > 60) {
                    r = h >= remaining ? r1 : r + dir * h;
                    y = y5;
                    if (!clipped) {
                        const real grow = e == 0 ? 5 : 0.9L * std::pow(e, -0.2L);
                        h_ = h * std::clamp<real>(grow, 0.2L, 5.0L);
                    }
                    break;
                }
                h *= std::max<real>(0.1L, 0.9L * std::pow(e, -0.25L));
                h_ = h;
                clipped = false;
            }
        }
        return y;
    }

private:
    void step(real r, const State& y, real h, State& y5, State& err) const {
        static constexpr real c2 = 1.0L / 5, c3 = 3.0L / 10, c4 = 4.0L / 5, c5 = 8.0L / 9;
        static constexpr real a21 = 1.0L / 5;
        static constexpr real a31 = 3.0L / 40, a32 = 9.0L / 40;
        static constexpr real a41 = 44.0L / 45, a42 = -56.0L / 15, a43 = 32.0L / 9;
        static constexpr real a51 = 19372.0L / 6561, a52 = -25360.0L / 2187, a53 = 64448.0L / 6561,
                              a54 = -212.0L / 729;
        static constexpr real a61 = 9017.0L / 3168, a62 = -355.0L / 33, a63 = 46732.0L / 5247,
                              a64 = 49.0L / 176, a65 = -5103.0L / 18656;
        static constexpr real b1 = 35.0L / 384, b3 = 500.0L / 1113, b4 = 125.0L / 192,
                              b5 = -2187.0L / 6784, b6 = 11.0L / 84;
        static constexpr real e1 = b1 - 5179.0L / 57600, e3 = b3 - 7571.0L / 16695,
                              e4 = b4 - 393.0L / 640, e5 = b5 + 92097.0L / 339200,
                              e6 = b6 - 187.0L / 2100, e7 = -1.0L / 40;
        auto axpy = [](const State& base, std::initializer_list<std::pair<real, const State*>> terms,
                       real hh) {
            State out = base;
            for (auto [c, k] : terms)
                for (int i = 0; i < 2; ++i) out[i] += hh * c * (*k)[i];
            return out;
        };
        const State k1 = f_(r, y);
        const State k2 = f_(r + c2 * h, axpy(y, {{a21, &k1}}, h));
        const State k3 = f_(r + c3 * h, axpy(y, {{a31, &k1}, {a32, &k2}}, h));
        const State k4 = f_(r + c4 * h, axpy(y, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, h));
        const State k5 =
            f_(r + c5 * h, axpy(y, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h));
        const State k6 =
            f_(r + h, axpy(y, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h));
        y5 = axpy(y, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, h);
        const State k7 = f_(r + h, y5);
        err = axpy(State{0, 0}, {{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5}, {e6, &k6}, {e7, &k7}},
                   h);
    }

    RadialOde f_;
    real rtol_;
    real atol_;
    real h_ = 0;
};

constexpr real kRtol = 1e-17L;
constexpr real kAtol = 1e-30L;

// +1: trajectory crosses zero (peak too high); −1: turns upward while
// positive (peak too low); 0: undecided up to r_end.
int classify_shot(const RadialOde& ode, real s, real r_end) {
    DormandPrince dp(ode, kRtol, kAtol);
    State y{s, 0};
    const real step = 0.01L;
    for (real r = 0; r < r_end; r += step) {
        y = dp.advance(r, y, r + step);
        if (y[0] < 0) return +1;
        if (y[1] > 0) return -1;
    }
    return 0;
}

// Decaying solution of u″ + (N−1)/r u′ − u = 0, and its derivative.
std::pair<double, double> linear_tail(int N, double r) {
    switch (N) {
        case 1: return {std::exp(-r), -std::exp(-r)};
        case 2: return {std::cyl_bessel_k(0.0, r), -std::cyl_bessel_k(1.0, r)};
        default: {
            const double e = std::exp(-r) / r;
            return {e, -e * (1.0 + 1.0 / r)};
        }
    }
}

double fit_decay_rate(int N, double dr, const std::vector<double>& z) {
    // least squares of log(r^{(N−1)/2} z) against r on [r_max/2, r_max]
    const std::size_t M = z.size() - 1;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = M / 2; i <= M; i += 10) {
        const double r = dr * static_cast<double>(i);
        if (!(z[i] > 0)) continue;
        const double y = std::log(z[i]) + 0.5 * (N - 1) * std::log(r);
        sx += r; sy += y; sxx += r * r; sxy += r * y;
        ++n;
    }
    if (n < 2) return 1.0;
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return -slope;
}

double hermite(double t, double h, double y0, double y1, double d0, double d1) {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * h * d1;
}

}  // namespace

GroundState::GroundState(int N, double p, double A, double dr, std::vector<double> profile,
                         std::vector<double> dprofile)
    : N_(N), p_(p), A_(A), dr_(dr), profile_(std::move(profile)), dprofile_(std::move(dprofile)) {
    const std::size_t M = profile_.size();
    d2profile_.resize(M);
    d3profile_.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
        const double r = dr_ * static_cast<double>(i);
        d2profile_[i] = second_from_ode(r, profile_[i], dprofile_[i]);
        d3profile_[i] = third_from_ode(r, profile_[i], dprofile_[i], d2profile_[i]);
    }
    decay_rate_ = fit_decay_rate(N_, dr_, profile_);
}

double GroundState::second_from_ode(double r, double z, double dz) const {
    const double nl = A_ * std::pow(std::max(z, 0.0), p_);
    if (r == 0.0) return (z - nl) / N_;
    return -(N_ - 1) * dz / r + z - nl;
}

double GroundState::third_from_ode(double r, double z, double dz, double d2z) const {
    if (r == 0.0) return 0.0;
    const double dnl = p_ * A_ * std::pow(std::max(z, 0.0), p_ - 1.0) * dz;
    return (N_ - 1) * dz / (r * r) - (N_ - 1) * d2z / r + dz - dnl;
}

double GroundState::tail(double r) const {
    const double rm = r_max();
    return profile_.back() * std::pow(rm / r, 0.5 * (N_ - 1)) * std::exp(-decay_rate_ * (r - rm));
}

double GroundState::eval(double r) const {
    r = std::abs(r);
    if (r >= r_max()) return tail(r);
    const double s = r / dr_;
    const std::size_t i = std::min(static_cast<std::size_t>(s), profile_.size() - 2);
    return hermite(s - static_cast<double>(i), dr_, profile_[i], profile_[i + 1], dprofile_[i],
                   dprofile_[i + 1]);
}

double GroundState::eval_deriv(double r) const {
    const double sign = r < 0 ? -1.0 : 1.0;
    r = std::abs(r);
    if (r >= r_max()) return sign * tail(r) * (-decay_rate_ - 0.5 * (N_ - 1) / r);
    const double s = r / dr_;
    const std::size_t i = std::min(static_cast<std::size_t>(s), profile_.size() - 2);
    return sign * hermite(s - static_cast<double>(i), dr_, dprofile_[i], dprofile_[i + 1],
                          d2profile_[i], d2profile_[i + 1]);
}

double GroundState::eval_second(double r) const {
    r = std::abs(r);
    if (r >= r_max()) {
        const double k = decay_rate_ + 0.5 * (N_ - 1) / r;
        return tail(r) * (k * k + 0.5 * (N_ - 1) / (r * r));
    }
    const double s = r / dr_;
    const std::size_t i = std::min(static_cast<std::size_t>(s), profile_.size() - 2);
    const double t = s - static_cast<double>(i);
    // z‴ is not differentiable-smooth enough at r = 0 for Hermite slopes; use
    // linear interpolation of z″ there.
    if (i == 0) return (1 - t) * d2profile_[0] + t * d2profile_[1];
    return hermite(t, dr_, d2profile_[i], d2profile_[i + 1], d3profile_[i], d3profile_[i + 1]);
}

namespace {

double sphere_area(int N) {
    switch (N) {
        case 1: return 2.0;
        case 2: return 2.0 * std::numbers::pi;
        default: return 4.0 * std::numbers::pi;
    }
}

// Composite Simpson of f(r) r^{N−1} on the mesh (trapezoid for a trailing odd interval).
template <class F>
double radial_integral(int N, double dr, std::size_t M, F f) {
    auto g = [&](std::size_t i) {
        const double r = dr * static_cast<double>(i);
        return f(i) * std::pow(r, N - 1);
    };
    const std::size_t even = (M - 1) - ((M - 1) % 2);
    double s = g(0) + g(even);
    for (std::size_t i = 1; i < even; ++i) s += (i % 2 ? 4.0 : 2.0) * g(i);
    s *= dr / 3.0;
    for (std::size_t i = even; i + 1 < M; ++i) s += 0.5 * dr * (g(i) + g(i + 1));
    return sphere_area(N) * s;
}

}  // namespace

double GroundState::l2_norm_sq() const {
    return radial_integral(N_, dr_, profile_.size(),
                           [&](std::size_t i) { return profile_[i] * profile_[i]; });
}

double GroundState::grad_norm_sq() const {
    return radial_integral(N_, dr_, profile_.size(),
                           [&](std::size_t i) { return dprofile_[i] * dprofile_[i]; });
}

GroundState solve_ground_state(int N, double p, double A, double tol,
                               const GroundStateOptions& opt) {
    if (N < 1 || N > 3) throw Error("groundstate", "InvalidInput", "N must be 1, 2 or 3");
    if (!(p > 1.0) || !(A > 0.0) || !(tol > 0.0))
        throw Error("groundstate", "InvalidInput", "require p > 1, A > 0, tol > 0");

    const RadialOde ode{N, static_cast<real>(p), static_cast<real>(A)};
    const real r_class = 80;
    const double equilibrium = std::pow(A, -1.0 / (p - 1.0));
    const double s1 = std::pow((p + 1.0) / (2.0 * A), 1.0 / (p - 1.0));

    real lo = N == 1 ? 0.99L * s1 : s1;
    real hi = (N + 1.0L) * s1;
    for (int k = 0; classify_shot(ode, lo, r_class) != -1; ++k) {
        lo = 0.5L * (lo + equilibrium * 1.001L);
        if (k > 40) throw Error("groundstate", "ShootingBracketFailure", "no undershoot found");
    }
    for (int k = 0; classify_shot(ode, hi, r_class) != +1; ++k) {
        hi *= 1.5L;
        if (k > 20) throw Error("groundstate", "ShootingBracketFailure", "no overshoot found");
    }

    for (int it = 0; it < 200; ++it) {
        const real mid = 0.5L * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const int c = classify_shot(ode, mid, r_class);
        if (c == 0) { lo = hi = mid; break; }
        (c > 0 ? hi : lo) = mid;
    }
    const real s = 0.5L * (lo + hi);
    if ((hi - lo) / s > tol)
        throw Error("groundstate", "NonConvergence", "bisection stalled above tolerance");

    const std::size_t M = static_cast<std::size_t>(std::llround(opt.r_max / opt.dr));
    std::vector<double> z(M + 1), dz(M + 1);

    // outward pass until the profile has dropped by 1e-4
    DormandPrince fwd(ode, kRtol, kAtol);
    State y{s, 0};
    z[0] = static_cast<double>(s);
    dz[0] = 0.0;
    std::size_t im = 0;
    const real rdr = static_cast<real>(opt.dr);
    for (std::size_t i = 0; i < M; ++i) {
        y = fwd.advance(rdr * i, y, rdr * (i + 1));
        z[i + 1] = static_cast<double>(y[0]);
        dz[i + 1] = static_cast<double>(y[1]);
        im = i + 1;
        if (y[0] < 1e-4L * s) break;
    }
    const real z_match = y[0];

    // inward pass from beyond r_max, started on the linear decaying mode
    const std::size_t far = M + static_cast<std::size_t>(std::llround(5.0 / opt.dr));
    std::vector<real> zb(far + 1), dzb(far + 1);
    auto inward = [&](real C) {
        DormandPrince bwd(ode, kRtol, kAtol);
        const auto [t0, t1] = linear_tail(N, opt.dr * static_cast<double>(far));
        State yb{C * t0, C * t1};
        zb[far] = yb[0];
        dzb[far] = yb[1];
        for (std::size_t i = far; i > im; --i) {
            yb = bwd.advance(rdr * i, yb, rdr * (i - 1));
            zb[i - 1] = yb[0];
            dzb[i - 1] = yb[1];
        }
        return zb[im];
    };
    const auto [tm, dtm] = linear_tail(N, opt.dr * static_cast<double>(im));
    (void)dtm;
    real C = z_match / tm;
    for (int it = 0; it < 8; ++it) {
        const real zm = inward(C);
        const real ratio = z_match / zm;
        C *= ratio;
        if (std::abs(ratio - 1) < 1e-18L) break;
    }
    inward(C);
    for (std::size_t i = im + 1; i <= M; ++i) {
        z[i] = static_cast<double>(zb[i]);
        dz[i] = static_cast<double>(dzb[i]);
    }

    for (std::size_t i = 1; i <= M; ++i) {
        if (!(z[i] > 0.0) || !(z[i] < z[i - 1]))
            throw Error("groundstate", "NonConvergence", "profile not positive and decreasing");
    }
    return GroundState(N, p, A, opt.dr, std::move(z), std::move(dz));
}

GroundState closed_form_1d(double p, double A, const GroundStateOptions& opt) {
    const double s1 = std::pow((p + 1.0) / (2.0 * A), 1.0 / (p - 1.0));
    const double k = 2.0 / (p - 1.0);
    const std::size_t M = static_cast<std::size_t>(std::llround(opt.r_max / opt.dr));
    std::vector<double> z(M + 1), dz(M + 1);
    for (std::size_t i = 0; i <= M; ++i) {
        const double y = 0.5 * (p - 1.0) * opt.dr * static_cast<double>(i);
        // sech(y) = 2 e^{−y} / (1 + e^{−2y}), written to avoid overflow
        const double log_sech = std::log(2.0) - y - std::log1p(std::exp(-2.0 * y));
        z[i] = s1 * std::exp(k * log_sech);
        dz[i] = -z[i] * std::tanh(y);
    }
    return GroundState(1, p, A, opt.dr, std::move(z), std::move(dz));
}

double residual_norm(const GroundState& gs) {
    const auto& z = gs.profile();
    const auto& dz = gs.dprofile();
    const std::size_t M = z.size() - 1;
    const double h = gs.dr();
    const int N = gs.N();
    auto dzx = [&](std::ptrdiff_t i) {  // odd extension of z′
        return i < 0 ? -dz[static_cast<std::size_t>(-i)] : dz[static_cast<std::size_t>(i)];
    };
    double worst = 0.0;
    for (std::size_t i = 0; i + 2 <= M; ++i) {
        const auto j = static_cast<std::ptrdiff_t>(i);
        const double d2 = (-dzx(j + 2) + 8.0 * dzx(j + 1) - 8.0 * dzx(j - 1) + dzx(j - 2)) / (12.0 * h);
        const double r = h * static_cast<double>(i);
        const double nl = gs.A() * std::pow(z[i], gs.p());
        const double res = i == 0 ? N * d2 - z[i] + nl : d2 + (N - 1) * dz[i] / r - z[i] + nl;
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

}  // namespace bifurc

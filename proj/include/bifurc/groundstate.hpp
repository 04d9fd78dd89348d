#pragma once

#include <vector>

namespace bifurc {

struct GroundStateOptions {
    double r_max = 25.0;
    double dr = 1e-3;
};

/// Positive radial solution z₀ of −Δu + u = A u^p in ℝᴺ, sampled on a uniform
/// radial mesh r_i = i·dr, i = 0..M, together with z′ and z″.
///
/// Between mesh nodes values are cubic Hermite interpolants; beyond r_max the
/// profile continues as z(r_max)·(r_max/r)^{(N−1)/2}·exp(−rate·(r − r_max)).
class GroundState {
public:
    GroundState(int N, double p, double A, double dr, std::vector<double> profile,
                std::vector<double> dprofile);

    int N() const { return N_; }
    double p() const { return p_; }
    double A() const { return A_; }
    double r_max() const { return dr_ * static_cast<double>(profile_.size() - 1); }
    double dr() const { return dr_; }
    double peak() const { return profile_.front(); }
    double decay_rate() const { return decay_rate_; }

    const std::vector<double>& profile() const { return profile_; }
    const std::vector<double>& dprofile() const { return dprofile_; }

    double eval(double r) const;
    double eval_deriv(double r) const;
    double eval_second(double r) const;

    /// ∫ z² dx and ∫ |∇z|² dx over ℝᴺ.
    double l2_norm_sq() const;
    double grad_norm_sq() const;
    double h1_norm_sq() const { return l2_norm_sq() + grad_norm_sq(); }

private:
    double tail(double r) const;
    double second_from_ode(double r, double z, double dz) const;
    double third_from_ode(double r, double z, double dz, double d2z) const;

    int N_;
    double p_;
    double A_;
    double dr_;
    std::vector<double> profile_;
    std::vector<double> dprofile_;
    std::vector<double> d2profile_;
    std::vector<double> d3profile_;
    double decay_rate_ = 1.0;
};

/// Bisection shooting on z(0) with adaptive Dormand–Prince integration in
/// extended precision. The far tail is integrated inward from the linear
/// decaying asymptote and matched in value to the outward trajectory.
///
/// Throws groundstate.ShootingBracketFailure when no overshoot/undershoot
/// bracket is found and groundstate.NonConvergence when bisection stalls with
/// a relative bracket wider than tol.
GroundState solve_ground_state(int N, double p, double A, double tol,
                               const GroundStateOptions& opt = {});

/// Exact N = 1 ground state ((p+1)/(2A))^{1/(p−1)} sech^{2/(p−1)}((p−1)x/2).
GroundState closed_form_1d(double p, double A, const GroundStateOptions& opt = {});

/// max over the mesh of |z″ + (N−1)/r z′ − z + A z^p|, with z″ taken by
/// fourth-order differences of the sampled z′ and the r = 0 term as N·z″(0).
double residual_norm(const GroundState& gs);

}  // namespace bifurc

#pragma once

#include <functional>
#include <vector>

#include "bifurc/grid.hpp"

namespace bifurc {

using LinearOp = std::function<Vec(const Vec&)>;
using InnerProduct = std::function<double(const Vec&, const Vec&)>;

struct KrylovResult {
    Vec x;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Conjugate gradients for an SPD operator in the Euclidean product.
KrylovResult conjugate_gradient(const LinearOp& A, const Vec& b, double rtol, int max_iter,
                                const LinearOp& preconditioner = {});

/// MINRES for an operator self-adjoint with respect to `dot`. Residuals are
/// measured in the norm induced by `dot`.
KrylovResult minres(const LinearOp& A, const InnerProduct& dot, const Vec& b, double rtol,
                    int max_iter);

struct EigenPairs {
    std::vector<double> values;  ///< ascending
    std::vector<Vec> vectors;    ///< dot-orthonormal
    std::vector<double> residuals;
    int iterations = 0;
    bool converged = false;
};

/// Lanczos with full reorthogonalization for the k smallest eigenvalues of an
/// operator self-adjoint in `dot`. Ritz pairs are accepted when
/// ‖A y − θ y‖ ≤ tol. An optional `deflate` projector is applied to every
/// Krylov vector to restrict the iteration to an invariant subspace.
EigenPairs lanczos_smallest(const LinearOp& A, const InnerProduct& dot, const Vec& start, int k,
                            double tol, int max_iter, const LinearOp& deflate = {});

}  // namespace bifurc

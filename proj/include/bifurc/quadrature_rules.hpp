#pragma once

#include <vector>

namespace bifurc {

/// Gauss–Legendre nodes and weights on [−1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussRule gauss_legendre(int n);

}  // namespace bifurc

#include "bifurc/rates.hpp"

#include <cmath>

#include "bifurc/errors.hpp"

namespace bifurc {

RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& quantity, int tail,
                 int min_samples) {
    if (eps.size() != quantity.size())
        throw Error("rates", "InsufficientPoints", "ε and quantity lists differ in length");
    if (static_cast<int>(eps.size()) < std::max(2, min_samples))
        throw Error("rates", "InsufficientPoints", "not enough samples for a rate fit");
    RateFit fit;
    fit.eps_values = eps;
    fit.quantity_values = quantity;
    const std::size_t n = eps.size();
    const std::size_t first = (tail > 0 && static_cast<std::size_t>(tail) < n) ? n - static_cast<std::size_t>(tail) : 0;
    std::vector<double> xs, ys;
    for (std::size_t i = first; i < n; ++i) {
        if (!(eps[i] > 0.0) || !(std::abs(quantity[i]) > 0.0) || !std::isfinite(quantity[i])) continue;
        xs.push_back(std::log(eps[i]));
        ys.push_back(std::log(std::abs(quantity[i])));
    }
    if (xs.size() < 2) throw Error("rates", "InsufficientPoints", "fewer than two usable samples");
    const double m = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    fit.fitted_slope = sxy / sxx;
    const double icpt = my - fit.fitted_slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (icpt + fit.fitted_slope * xs[i]);
        rss += r * r;
    }
    fit.fit_residual = std::sqrt(rss / m);
    fit.points_used = static_cast<int>(xs.size());
    return fit;
}

std::vector<double> geometric_grid(double start, double ratio, int count) {
    std::vector<double> g;
    double v = start;
    for (int k = 0; k < count; ++k, v *= ratio) g.push_back(v);
    return g;
}

}  // namespace bifurc

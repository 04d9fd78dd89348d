#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "bifurc/grid.hpp"
#include "bifurc/morse.hpp"
#include "bifurc/problem.hpp"
#include "bifurc/reduction.hpp"

namespace bifurc {

enum class VerifyLevel { Fast, Full };

VerifyLevel parse_verify_level(const std::string& s);
std::string to_string(VerifyLevel v);

/// One run: problem data, discretization, ε-grid, tolerances and output.
struct RunConfig {
    ProblemSpec problem;
    double grid_R = 0.0;  ///< 0 selects the per-dimension default
    double grid_h = 0.0;
    std::vector<double> eps_grid;  ///< strictly decreasing
    std::vector<double> theta_start;
    double groundstate_tol = 1e-12;
    ReductionOptions reduction;
    MorseOptions morse;
    std::string output_dir = "out";
    VerifyLevel verify_level = VerifyLevel::Fast;
    bool write_fields = false;

    Grid grid() const;
    /// Throws config.Invalid on non-positive tolerances, a non-decreasing
    /// ε-grid or a θ of the wrong dimension.
    void check() const;
};

/// Shipped defaults: N = 1, p = 3, q = 5, A = 1, Gaussian a − A with unit
/// integral and unit width, Gaussian b with unit amplitude and width.
RunConfig default_config(int N = 1);

/// Default ε-grid 0.4·2^{−k}: seven points for N = 1, five otherwise.
std::vector<double> default_eps_grid(int N);

/// Keys absent from the document keep their defaults. Coefficients are given
/// by "family" ("gaussian", "algebraic", "compact") and either "amplitude" or
/// (Gaussian only) "integral". The ε-grid is a list or
/// {"start", "ratio", "count"}. Throws config.Invalid.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& c);

/// "0.4,0.2,0.1" or "start:ratio:count".
std::vector<double> parse_eps_grid(const std::string& s);
CaseTag parse_case(const std::string& s);

nlohmann::json coefficient_to_json(const CoefficientSpec& c);
CoefficientSpec coefficient_from_json(const nlohmann::json& j, int N);

}  // namespace bifurc

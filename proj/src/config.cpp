#include "bifurc/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bifurc/errors.hpp"
#include "bifurc/rates.hpp"

namespace bifurc {

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error("config", "Invalid", msg); }

CoefficientFamily parse_family(const std::string& s) {
    if (s == "gaussian") return CoefficientFamily::GaussianBump;
    if (s == "algebraic") return CoefficientFamily::AlgebraicTail;
    if (s == "compact") return CoefficientFamily::CompactBump;
    invalid("unknown coefficient family '" + s + "'");
}

const char* family_key(CoefficientFamily f) {
    switch (f) {
        case CoefficientFamily::GaussianBump: return "gaussian";
        case CoefficientFamily::AlgebraicTail: return "algebraic";
        case CoefficientFamily::CompactBump: return "compact";
    }
    return "gaussian";
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        invalid(std::string("key '") + key + "': " + e.what());
    }
}

std::vector<double> eps_grid_from_json(const nlohmann::json& j) {
    if (j.is_array()) return j.get<std::vector<double>>();
    if (j.is_object()) {
        double start = 0.4, ratio = 0.5;
        int count = 0;
        read(j, "start", start);
        read(j, "ratio", ratio);
        read(j, "count", count);
        if (count <= 0) invalid("eps_grid.count must be positive");
        return geometric_grid(start, ratio, count);
    }
    invalid("eps_grid must be a list or {start, ratio, count}");
}

}  // namespace

VerifyLevel parse_verify_level(const std::string& s) {
    if (s == "fast") return VerifyLevel::Fast;
    if (s == "full") return VerifyLevel::Full;
    invalid("verify level must be fast or full, got '" + s + "'");
}

std::string to_string(VerifyLevel v) { return v == VerifyLevel::Fast ? "fast" : "full"; }

CaseTag parse_case(const std::string& s) {
    if (s == "l1") return CaseTag::L1Case;
    if (s == "algebraic") return CaseTag::AlgebraicCase;
    invalid("case must be l1 or algebraic, got '" + s + "'");
}

std::vector<double> parse_eps_grid(const std::string& s) {
    std::vector<double> out;
    try {
        if (s.find(':') != std::string::npos) {
            std::istringstream is(s);
            std::string a, b, c;
            std::getline(is, a, ':');
            std::getline(is, b, ':');
            std::getline(is, c, ':');
            return geometric_grid(std::stod(a), std::stod(b), std::stoi(c));
        }
        std::istringstream is(s);
        std::string tok;
        while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
    } catch (const std::logic_error&) {
        invalid("cannot parse eps grid '" + s + "'");
    }
    return out;
}

std::vector<double> default_eps_grid(int N) { return geometric_grid(0.4, 0.5, N == 1 ? 7 : 5); }

RunConfig default_config(int N) {
    RunConfig c;
    c.problem.N = N;
    c.problem.p = 3.0;
    c.problem.q = 5.0;
    c.problem.A = 1.0;
    c.problem.case_tag = CaseTag::L1Case;
    c.problem.a_coeff = CoefficientSpec::gaussian_with_integral(1.0, 1.0, N);
    c.problem.b_coeff = CoefficientSpec::gaussian(1.0, 1.0, N);
    c.eps_grid = default_eps_grid(N);
    c.theta_start.assign(static_cast<std::size_t>(N), 0.0);
    return c;
}

Grid RunConfig::grid() const {
    const Grid d = Grid::defaults(problem.N);
    return Grid::make(problem.N, grid_R > 0.0 ? grid_R : d.R, grid_h > 0.0 ? grid_h : d.h);
}

void RunConfig::check() const {
    if (problem.N < 1 || problem.N > 3) invalid("N must be 1, 2 or 3");
    if (eps_grid.empty()) invalid("eps_grid is empty");
    for (std::size_t k = 0; k < eps_grid.size(); ++k) {
        if (!(eps_grid[k] > 0.0) || !std::isfinite(eps_grid[k])) invalid("eps_grid entries must be positive");
        if (k > 0 && !(eps_grid[k] < eps_grid[k - 1])) invalid("eps_grid must be strictly decreasing");
    }
    if (theta_start.size() != static_cast<std::size_t>(problem.N)) invalid("theta_start must have N entries");
    const double tols[] = {groundstate_tol,     reduction.newton_tol,     reduction.search_tol,
                           reduction.minres_tol, reduction.terminal_step, reduction.initial_step,
                           reduction.delta,      morse.lanczos_tol,        morse.near_kernel_threshold};
    for (double t : tols)
        if (!(t > 0.0)) invalid("tolerances must be positive");
    if (grid_R < 0.0 || grid_h < 0.0) invalid("grid R and h must be positive");
}

CoefficientSpec coefficient_from_json(const nlohmann::json& j, int N) {
    if (!j.is_object()) invalid("coefficient must be an object");
    std::string family = "gaussian";
    read(j, "family", family);
    const CoefficientFamily f = parse_family(family);
    double width = 1.0, gamma = 0.0;
    read(j, "width", width);
    read(j, "gamma", gamma);
    const bool has_amp = j.contains("amplitude");
    const bool has_int = j.contains("integral");
    if (has_amp == has_int) invalid("coefficient needs exactly one of 'amplitude' or 'integral'");
    double value = 0.0;
    read(j, has_amp ? "amplitude" : "integral", value);
    switch (f) {
        case CoefficientFamily::GaussianBump:
            return has_amp ? CoefficientSpec::gaussian(value, width, N)
                           : CoefficientSpec::gaussian_with_integral(value, width, N);
        case CoefficientFamily::AlgebraicTail:
            if (has_int) invalid("algebraic tail is not integrable; give 'amplitude' (the limit L)");
            return CoefficientSpec::algebraic(value, gamma, N);
        case CoefficientFamily::CompactBump:
            if (has_int) invalid("compact bump takes 'amplitude'");
            return CoefficientSpec::compact(value, width, N);
    }
    invalid("unreachable");
}

nlohmann::json coefficient_to_json(const CoefficientSpec& c) {
    nlohmann::json j{{"family", family_key(c.family)}, {"amplitude", c.amplitude}};
    if (c.family == CoefficientFamily::AlgebraicTail) j["gamma"] = c.gamma;
    else j["width"] = c.width;
    if (c.derived_integral) j["derived_integral"] = *c.derived_integral;
    return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) invalid("configuration must be a JSON object");
    int N = 1;
    if (j.contains("problem")) read(j.at("problem"), "N", N);
    if (N < 1 || N > 3) invalid("N must be 1, 2 or 3");
    RunConfig c = default_config(N);

    if (j.contains("problem")) {
        const auto& p = j.at("problem");
        read(p, "p", c.problem.p);
        read(p, "q", c.problem.q);
        read(p, "A", c.problem.A);
        if (p.contains("case")) c.problem.case_tag = parse_case(p.at("case").get<std::string>());
        if (p.contains("a")) c.problem.a_coeff = coefficient_from_json(p.at("a"), N);
        if (p.contains("b")) c.problem.b_coeff = coefficient_from_json(p.at("b"), N);
    }
    if (j.contains("grid")) {
        read(j.at("grid"), "R", c.grid_R);
        read(j.at("grid"), "h", c.grid_h);
    }
    if (j.contains("eps_grid")) c.eps_grid = eps_grid_from_json(j.at("eps_grid"));
    read(j, "theta_start", c.theta_start);
    read(j, "delta", c.reduction.delta);
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        read(t, "groundstate", c.groundstate_tol);
        read(t, "newton", c.reduction.newton_tol);
        read(t, "search", c.reduction.search_tol);
        read(t, "minres", c.reduction.minres_tol);
        read(t, "terminal_step", c.reduction.terminal_step);
        read(t, "lanczos", c.morse.lanczos_tol);
        read(t, "near_kernel", c.morse.near_kernel_threshold);
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        if (o.is_string()) c.output_dir = o.get<std::string>();
        else {
            read(o, "dir", c.output_dir);
            read(o, "fields", c.write_fields);
        }
    }
    if (j.contains("verify")) {
        std::string level = to_string(c.verify_level);
        read(j.at("verify"), "level", level);
        c.verify_level = parse_verify_level(level);
    }
    c.check();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) invalid("cannot open configuration '" + path + "'");
    try {
        return config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        invalid("cannot parse '" + path + "': " + e.what());
    }
}

nlohmann::json config_to_json(const RunConfig& c) {
    const Grid g = c.grid();
    return nlohmann::json{
        {"problem",
         {{"N", c.problem.N},
          {"p", c.problem.p},
          {"q", c.problem.q},
          {"A", c.problem.A},
          {"case", c.problem.case_tag == CaseTag::L1Case ? "l1" : "algebraic"},
          {"a", coefficient_to_json(c.problem.a_coeff)},
          {"b", coefficient_to_json(c.problem.b_coeff)}}},
        {"grid", {{"R", g.R}, {"h", g.h}}},
        {"eps_grid", c.eps_grid},
        {"theta_start", c.theta_start},
        {"delta", c.reduction.delta},
        {"tolerances",
         {{"groundstate", c.groundstate_tol},
          {"newton", c.reduction.newton_tol},
          {"search", c.reduction.search_tol},
          {"minres", c.reduction.minres_tol},
          {"terminal_step", c.reduction.terminal_step},
          {"lanczos", c.morse.lanczos_tol},
          {"near_kernel", c.morse.near_kernel_threshold}}},
        {"output", {{"dir", c.output_dir}, {"fields", c.write_fields}}},
        {"verify", {{"level", to_string(c.verify_level)}}}};
}

}  // namespace bifurc

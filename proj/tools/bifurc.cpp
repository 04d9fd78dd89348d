#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "bifurc/config.hpp"
#include "bifurc/errors.hpp"
#include "bifurc/functional.hpp"
#include "bifurc/groundstate.hpp"
#include "bifurc/io.hpp"
#include "bifurc/morse.hpp"
#include "bifurc/reduction.hpp"
#include "bifurc/verify.hpp"

namespace fs = std::filesystem;
using namespace bifurc;

namespace {

struct CommonFlags {
    std::string spec;
    std::string eps_grid;
    double grid_h = 0.0;
    double grid_R = 0.0;
    double tol = 0.0;
    std::string case_tag;
    std::string verify_level;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--spec", f.spec, "JSON configuration file (defaults apply when omitted)");
    cmd->add_option("--eps-grid", f.eps_grid, "ε values 'a,b,c' or 'start:ratio:count'");
    cmd->add_option("--grid-h", f.grid_h, "grid spacing");
    cmd->add_option("--grid-R", f.grid_R, "grid half width");
    cmd->add_option("--tol", f.tol, "Newton tolerance of the reduction");
    cmd->add_option("--case", f.case_tag, "perturbation case")->check(CLI::IsMember({"l1", "algebraic"}));
    cmd->add_option("--verify-level", f.verify_level, "acceptance level")->check(CLI::IsMember({"fast", "full"}));
}

RunConfig resolve(const CommonFlags& f) {
    RunConfig c = f.spec.empty() ? default_config(1) : load_config(f.spec);
    if (!f.eps_grid.empty()) c.eps_grid = parse_eps_grid(f.eps_grid);
    if (f.grid_h > 0.0) c.grid_h = f.grid_h;
    if (f.grid_R > 0.0) c.grid_R = f.grid_R;
    if (f.tol > 0.0) c.reduction.newton_tol = f.tol;
    if (!f.case_tag.empty()) c.problem.case_tag = parse_case(f.case_tag);
    if (!f.verify_level.empty()) c.verify_level = parse_verify_level(f.verify_level);
    c.check();
    return c;
}

// Refuses to continue with data that violates the hypotheses.
void require_admissible(const ProblemSpec& spec) {
    const AdmissibilityReport rep = validate(spec);
    if (rep.ok) return;
    std::string v;
    for (const auto& s : rep.violations) v += (v.empty() ? "" : ", ") + s;
    throw Error("problem", "Inadmissible", "hypotheses violated: " + v);
}

std::vector<double> parse_theta_grid(const std::string& s) {
    std::vector<double> out;
    if (s.find(':') != std::string::npos) {
        double a = 0, b = 0;
        int n = 0;
        if (std::sscanf(s.c_str(), "%lf:%lf:%d", &a, &b, &n) != 3 || n < 2)
            throw Error("config", "Invalid", "theta grid must be 'start:stop:count'");
        for (int k = 0; k < n; ++k) out.push_back(a + (b - a) * k / (n - 1));
        return out;
    }
    return parse_eps_grid(s);
}

int cmd_groundstate(const CommonFlags& f, const std::string& out) {
    const RunConfig c = resolve(f);
    require_admissible(c.problem);
    const GroundState gs = solve_ground_state(c.problem.N, c.problem.p, c.problem.A, c.groundstate_tol);
    write_groundstate(out, gs);
    std::cout << groundstate_summary(gs).dump(2) << '\n';
    return 0;
}

int cmd_gamma(const CommonFlags& f, const std::string& out, const std::string& theta_grid) {
    const RunConfig c = resolve(f);
    require_admissible(c.problem);
    const Grid grid = c.grid();
    const GroundState gs = solve_ground_state(c.problem.N, c.problem.p, c.problem.A, c.groundstate_tol);
    // sections through the origin along each axis
    const std::vector<double> ts = parse_theta_grid(theta_grid);
    std::vector<std::vector<double>> pts;
    for (int axis = 0; axis < c.problem.N; ++axis)
        for (double t : ts) {
            if (axis > 0 && t == 0.0) continue;
            std::vector<double> th(static_cast<std::size_t>(c.problem.N), 0.0);
            th[static_cast<std::size_t>(axis)] = t;
            pts.push_back(th);
        }
    const GammaProfile prof = gamma_profile(c.problem, gs, grid, pts);
    const fs::path stem = fs::path(out).replace_extension("");
    write_gamma_profile(stem.string(), prof);
    const std::string dir = stem.has_parent_path() ? stem.parent_path().string() : ".";
    emit_plot_data(dir, prof);

    const Functional fn(c.problem, grid);
    const LimitProbe lp = gamma_limit_probe(fn, gs, c.theta_start, c.eps_grid);
    const GprimeProbe gp = gprime_rate_probe(fn, gs, c.theta_start, c.eps_grid);
    write_json(stem.string() + "_limit.json", {{"eps", lp.eps_values},
                                               {"ratios", lp.ratios},
                                               {"relative_errors", lp.relative_errors},
                                               {"gamma_ref", lp.gamma_ref},
                                               {"alpha", lp.alpha},
                                               {"terminal_relative_error", lp.terminal_relative_error},
                                               {"error_decreasing", lp.error_decreasing},
                                               {"error_fit", rate_fit_to_json(lp.error_fit)}});
    write_json(stem.string() + "_gprime.json", {{"fit", rate_fit_to_json(gp.fit)},
                                                {"predicted_exponent", gp.predicted_exponent},
                                                {"gate_exponent", gp.gate_exponent},
                                                {"threshold_case", gp.threshold_case}});
    std::printf("Gamma extremum at theta = %s, definiteness %s\n", nlohmann::json(prof.extremum_theta).dump().c_str(),
                to_string(prof.definiteness).c_str());
    std::printf("limit: terminal relative error %.4g; G' slope %.4g (predicted %.4g)\n",
                lp.terminal_relative_error, gp.fit.fitted_slope, gp.predicted_exponent);
    return 0;
}

int cmd_branch(const CommonFlags& f, const std::string& out, bool fields) {
    RunConfig c = resolve(f);
    c.output_dir = out;
    c.write_fields = c.write_fields || fields;
    require_admissible(c.problem);
    const Grid grid = c.grid();
    const GroundState gs = solve_ground_state(c.problem.N, c.problem.p, c.problem.A, c.groundstate_tol);
    const Functional fn(c.problem, grid);
    const Reduction red(fn, gs, c.reduction);
    const std::vector<BranchPoint> branch = red.solve_branch(c.eps_grid, c.theta_start, c.reduction.delta);

    ensure_directory(out);
    std::vector<std::string> files{"branch.csv", "points.json"};
    write_branch_csv((fs::path(out) / "branch.csv").string(), c.problem.N, branch);
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& b : branch) pts.push_back(branch_point_to_json(b));
    write_json((fs::path(out) / "points.json").string(), pts);
    try {
        const AsymptoticReport ar = asymptotic_report(c.problem, branch);
        write_json((fs::path(out) / "asymptotics.json").string(),
                   {{"alpha", ar.alpha},
                    {"w", rate_fit_to_json(ar.w)},
                    {"energy_remainder", rate_fit_to_json(ar.energy_remainder)},
                    {"psi_l2", rate_fit_to_json(ar.psi_l2)},
                    {"psi_h1", rate_fit_to_json(ar.psi_h1)},
                    {"psi_linf", rate_fit_to_json(ar.psi_linf)},
                    {"predicted_psi_l2", ar.predicted_psi_l2},
                    {"predicted_psi_linf", ar.predicted_psi_linf}});
        files.emplace_back("asymptotics.json");
    } catch (const Error& e) {
        std::cerr << "asymptotic report skipped: " << e.code() << '\n';
    }
    const auto plots = emit_plot_data(out, branch);
    files.insert(files.end(), plots.begin(), plots.end());
    if (c.write_fields) {
        int k = 0;
        for (const auto& b : branch) {
            if (b.ok && b.u) {
                const std::string name = "u_" + std::to_string(k) + ".bin";
                write_field_binary((fs::path(out) / name).string(), *b.u);
                files.push_back(name);
                if (c.problem.N == 1) {
                    const std::string csv = "u_" + std::to_string(k) + ".csv";
                    write_field_csv((fs::path(out) / csv).string(), *b.u);
                    files.push_back(csv);
                }
            }
            ++k;
        }
    }
    write_manifest(out, c, files);
    for (const auto& b : branch) {
        if (b.ok)
            std::printf("eps %-9.5g theta %-22s w %.4e energy %.10f residual %.2e\n", b.eps,
                        nlohmann::json(b.theta).dump().c_str(), b.w_norm_h1, b.energy, b.pde_residual);
        else
            std::printf("eps %-9.5g failed: %s\n", b.eps, b.error.c_str());
    }
    return 0;
}

int cmd_morse(const std::string& dir, const std::string& out) {
    const nlohmann::json manifest = read_json((fs::path(dir) / "manifest.json").string());
    RunConfig c = config_from_json(manifest.at("config"));
    require_admissible(c.problem);
    const Grid grid = c.grid();
    const int N = c.problem.N;
    const GroundState gs = solve_ground_state(N, c.problem.p, c.problem.A, c.groundstate_tol);
    const Functional fn(c.problem, grid);
    const Reduction red(fn, gs, c.reduction);

    const std::string csv_path = (fs::path(dir) / "branch.csv").string();
    CsvTable table = read_csv(csv_path);
    const int col_eps = table.column("eps"), col_m = table.column("morse_index");
    if (col_eps < 0 || col_m < 0) throw Error("io", "Malformed", "branch.csv lacks eps or morse_index");

    const MorseReport un = unperturbed_spectrum(fn, gs, N + 3, c.morse);
    nlohmann::json reports = nlohmann::json::array();
    std::optional<Field> warm;
    for (auto& row : table.rows) {
        const double eps = row[static_cast<std::size_t>(col_eps)];
        std::vector<double> theta;
        for (int i = 1; i <= N; ++i) theta.push_back(row[static_cast<std::size_t>(table.column("theta_" + std::to_string(i)))]);
        const ReducedSolution sol = red.solve_w(eps, theta, warm ? &*warm : nullptr);
        warm = sol.w;
        const Field u(grid, embed_state(gs, grid, theta).values() + sol.w.values());
        nlohmann::json rj;
        try {
            const MorseReport r = perturbed_index(fn, gs, eps, u, theta, un.m0 + N + 3, un.m0, c.morse);
            row[static_cast<std::size_t>(col_m)] = r.index_u_eps;
            rj = morse_report_to_json(r);
        } catch (const Error& e) {
            if (e.kind() != "DegenerateAtScale") throw;
            row[static_cast<std::size_t>(col_m)] = -1;
            rj = {{"eps", eps}, {"error", e.code()}};
        }
        reports.push_back(rj);
        std::printf("eps %-9.5g index %d\n", eps, static_cast<int>(row[static_cast<std::size_t>(col_m)]));
    }
    write_csv(csv_path, table.header, table.rows);
    write_json(out, {{"unperturbed", morse_report_to_json(un)}, {"points", reports}});

    std::vector<std::string> files;
    for (const auto& [name, hash] : manifest.at("outputs").items()) files.push_back(name);
    write_manifest(dir, c, files);
    std::printf("m0 %d, near-kernel dimension %d\n", un.m0, un.near_kernel_dim);
    return 0;
}

int cmd_verify(const CommonFlags& f, const std::string& out) {
    const RunConfig c = resolve(f);
    const VerifyReport rep = run_verify(c, c.verify_level, [](const CriterionResult& r) {
        std::printf("%s\n", format_result(r).c_str());
        std::fflush(stdout);
    });
    if (!rep.admissible) {
        std::string v;
        for (const auto& s : rep.violations) v += (v.empty() ? "" : ", ") + s;
        std::printf("inadmissible problem: %s\n", v.c_str());
    }
    if (!rep.error.empty()) std::printf("aborted: %s\n", rep.error.c_str());
    if (!out.empty()) write_json(out, rep.to_json());
    return rep.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bifurcation from the essential spectrum by Lyapunov-Schmidt reduction"};
    app.require_subcommand(1);

    CommonFlags gsf, gaf, brf, vef;
    std::string gs_out = "groundstate.csv", ga_out = "gamma.json", br_out = "out", mo_out, mo_branch,
                ve_out, theta_grid = "-4:4:81";
    bool fields = false;

    auto* gs_cmd = app.add_subcommand("groundstate", "solve for the radial ground state");
    add_common(gs_cmd, gsf);
    gs_cmd->add_option("--out", gs_out, "CSV path; the JSON summary is written next to it");

    auto* ga_cmd = app.add_subcommand("gamma", "sample the reduced functional and run the rate probes");
    add_common(ga_cmd, gaf);
    ga_cmd->add_option("--out", ga_out, "output stem for JSON and CSV");
    ga_cmd->add_option("--theta-grid", theta_grid, "'start:stop:count' or a list, sampled along each axis");

    auto* br_cmd = app.add_subcommand("branch", "trace the bifurcating branch");
    add_common(br_cmd, brf);
    br_cmd->add_option("--out", br_out, "output directory");
    br_cmd->add_flag("--fields", fields, "dump u at every accepted point");

    auto* mo_cmd = app.add_subcommand("morse", "Morse indices along a computed branch");
    mo_cmd->add_option("--branch", mo_branch, "directory written by 'branch'")->required();
    mo_cmd->add_option("--out", mo_out, "JSON report path")->required();

    auto* ve_cmd = app.add_subcommand("verify", "run the acceptance suite");
    add_common(ve_cmd, vef);
    ve_cmd->add_option("--out", ve_out, "JSON verdict path");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gs_cmd) return cmd_groundstate(gsf, gs_out);
        if (*ga_cmd) return cmd_gamma(gaf, ga_out, theta_grid);
        if (*br_cmd) return cmd_branch(brf, br_out, fields);
        if (*mo_cmd) return cmd_morse(mo_branch, mo_out);
        if (*ve_cmd) return cmd_verify(vef, ve_out);
    } catch (const Error& e) {
        std::fprintf(stderr, "error %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error %s\n", e.what());
        return 2;
    }
    return 0;
}

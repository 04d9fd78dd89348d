#include "bifurc/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "bifurc/errors.hpp"

namespace bifurc {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw Error("io", "WriteFailure", "cannot open '" + path + "' for writing");
    return out;
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "MissingArtifact", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index k = 0; k < m.cols(); ++k) row[static_cast<std::size_t>(k)] = m(i, k);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

void ensure_directory(const std::string& dir) { fs::create_directories(dir); }

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out = open_out(path);
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_double(row[k]);
        out << '\n';
    }
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == name) return static_cast<int>(k);
    return -1;
}

CsvTable read_csv(const std::string& path) {
    std::istringstream in(read_all(path));
    CsvTable t;
    std::string line, tok;
    if (!std::getline(in, line)) throw Error("io", "Malformed", "'" + path + "' has no header");
    {
        std::istringstream ls(line);
        while (std::getline(ls, tok, ',')) t.header.push_back(tok);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        while (std::getline(ls, tok, ',')) {
            try {
                row.push_back(std::stod(tok));
            } catch (const std::logic_error&) {
                throw Error("io", "Malformed", "non-numeric entry '" + tok + "' in '" + path + "'");
            }
        }
        if (row.size() != t.header.size()) throw Error("io", "Malformed", "ragged row in '" + path + "'");
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
    try {
        return nlohmann::json::parse(read_all(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("io", "Malformed", "cannot parse '" + path + "': " + e.what());
    }
}

void write_field_binary(const std::string& path, const Field& f) {
    std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
    const std::int32_t N = f.grid().N;
    const double R = f.grid().R, h = f.grid().h;
    out.write(reinterpret_cast<const char*>(&N), sizeof N);
    out.write(reinterpret_cast<const char*>(&R), sizeof R);
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    out.write(reinterpret_cast<const char*>(f.values().data()),
              static_cast<std::streamsize>(sizeof(double) * f.grid().size()));
}

Field read_field_binary(const std::string& path) {
    const std::string bytes = read_all(path);
    constexpr std::size_t head = sizeof(std::int32_t) + 2 * sizeof(double);
    if (bytes.size() < head) throw Error("io", "Malformed", "truncated field file '" + path + "'");
    std::int32_t N = 0;
    double R = 0.0, h = 0.0;
    std::memcpy(&N, bytes.data(), sizeof N);
    std::memcpy(&R, bytes.data() + sizeof N, sizeof R);
    std::memcpy(&h, bytes.data() + sizeof N + sizeof R, sizeof h);
    const Grid g = Grid::make(N, R, h);
    if (bytes.size() != head + sizeof(double) * g.size())
        throw Error("io", "Malformed", "field file '" + path + "' does not match its header");
    Vec v(static_cast<Eigen::Index>(g.size()));
    std::memcpy(v.data(), bytes.data() + head, sizeof(double) * g.size());
    return Field(g, std::move(v));
}

void write_field_csv(const std::string& path, const Field& f) {
    if (f.grid().N != 1) throw Error("io", "Unsupported", "field CSV is only written for N = 1");
    std::vector<std::vector<double>> rows;
    rows.reserve(f.grid().size());
    for (int i = 0; i < f.grid().n; ++i) rows.push_back({f.grid().coord(i), f[static_cast<std::size_t>(i)]});
    write_csv(path, {"x", "value"}, rows);
}

std::vector<std::string> branch_csv_header(int N) {
    std::vector<std::string> h{"eps", "lambda"};
    for (int i = 1; i <= N; ++i) h.push_back("theta_" + std::to_string(i));
    for (const char* c : {"w_h1", "energy", "energy_remainder", "gamma_theta", "psi_l2", "psi_h1", "psi_linf",
                          "pde_residual", "morse_index"})
        h.emplace_back(c);
    return h;
}

void write_branch_csv(const std::string& path, int N, const std::vector<BranchPoint>& branch) {
    std::vector<std::vector<double>> rows;
    for (const auto& b : branch) {
        if (!b.ok) continue;
        std::vector<double> row{b.eps, b.lambda};
        row.insert(row.end(), b.theta.begin(), b.theta.end());
        row.insert(row.end(), {b.w_norm_h1, b.energy, b.energy_remainder, b.gamma_at_theta, b.psi_l2, b.psi_h1,
                               b.psi_linf, b.pde_residual, static_cast<double>(b.morse_index)});
        rows.push_back(std::move(row));
    }
    write_csv(path, branch_csv_header(N), rows);
}

nlohmann::json groundstate_summary(const GroundState& gs) {
    return {{"N", gs.N()},
            {"p", gs.p()},
            {"A", gs.A()},
            {"peak", gs.peak()},
            {"decay_rate", gs.decay_rate()},
            {"residual", residual_norm(gs)},
            {"r_max", gs.r_max()},
            {"dr", gs.dr()},
            {"l2_norm_sq", gs.l2_norm_sq()},
            {"grad_norm_sq", gs.grad_norm_sq()},
            {"h1_norm_sq", gs.h1_norm_sq()}};
}

void write_groundstate(const std::string& csv_path, const GroundState& gs) {
    std::vector<std::vector<double>> rows;
    rows.reserve(gs.profile().size());
    for (std::size_t i = 0; i < gs.profile().size(); ++i)
        rows.push_back({gs.dr() * static_cast<double>(i), gs.profile()[i], gs.dprofile()[i]});
    write_csv(csv_path, {"r", "z", "dz"}, rows);
    write_json(fs::path(csv_path).replace_extension(".json").string(), groundstate_summary(gs));
}

nlohmann::json gamma_profile_to_json(const GammaProfile& g) {
    nlohmann::json samples = nlohmann::json::array();
    for (std::size_t k = 0; k < g.gamma_samples.size(); ++k)
        samples.push_back({{"theta", g.theta_samples[k]}, {"gamma", g.gamma_samples[k]}});
    return {{"case", to_string(g.case_tag)},
            {"alpha", g.alpha},
            {"samples", samples},
            {"extremum_theta", g.extremum_theta},
            {"hessian_at_extremum", matrix_to_json(g.hessian_at_extremum)},
            {"definiteness", to_string(g.definiteness)}};
}

void write_gamma_profile(const std::string& stem, const GammaProfile& g) {
    write_json(stem + ".json", gamma_profile_to_json(g));
    const int N = g.theta_samples.empty() ? 0 : static_cast<int>(g.theta_samples.front().size());
    std::vector<std::string> header;
    for (int i = 1; i <= N; ++i) header.push_back("theta_" + std::to_string(i));
    header.emplace_back("gamma");
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < g.gamma_samples.size(); ++k) {
        std::vector<double> row = g.theta_samples[k];
        row.push_back(g.gamma_samples[k]);
        rows.push_back(std::move(row));
    }
    write_csv(stem + ".csv", header, rows);
}

nlohmann::json morse_report_to_json(const MorseReport& r) {
    return {{"eps", r.eps},
            {"m0", r.m0},
            {"near_kernel_dim", r.near_kernel_dim},
            {"tangent_alignment", r.tangent_alignment},
            {"index_u_eps", r.index_u_eps},
            {"index_stable", r.index_stable},
            {"tangent_block", matrix_to_json(r.tangent_block)},
            {"tangent_block_scaled", matrix_to_json(r.tangent_block_scaled)},
            {"gamma_hessian_ref", matrix_to_json(r.gamma_hessian_ref)},
            {"eigenvalues_low", r.eigenvalues_low},
            {"eigenvalues_projected", r.eigenvalues_projected},
            {"band", r.band},
            {"nondegenerate", r.nondegenerate}};
}

nlohmann::json rate_fit_to_json(const RateFit& f) {
    return {{"eps_values", f.eps_values},
            {"quantity_values", f.quantity_values},
            {"fitted_slope", f.fitted_slope},
            {"fit_residual", f.fit_residual},
            {"points_used", f.points_used}};
}

nlohmann::json branch_point_to_json(const BranchPoint& b) {
    nlohmann::json j{{"eps", b.eps},
                     {"lambda", b.lambda},
                     {"theta", b.theta},
                     {"multipliers", b.multipliers},
                     {"u_norm_h1", b.u_norm_h1},
                     {"w_norm_h1", b.w_norm_h1},
                     {"psi_l2", b.psi_l2},
                     {"psi_h1", b.psi_h1},
                     {"psi_linf", b.psi_linf},
                     {"energy", b.energy},
                     {"energy0", b.energy0},
                     {"energy_remainder", b.energy_remainder},
                     {"gamma_at_theta", b.gamma_at_theta},
                     {"morse_index", b.morse_index},
                     {"pde_residual", b.pde_residual},
                     {"orthogonality", b.orthogonality},
                     {"jump_from_previous", b.jump_from_previous},
                     {"newton_iters", b.newton_iters},
                     {"ok", b.ok}};
    if (!b.ok) j["error"] = b.error;
    return j;
}

std::string git_blob_sha1(const std::string& content) {
    const std::string head = "blob " + std::to_string(content.size()) + std::string(1, '\0');
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw Error("io", "HashFailure", "cannot allocate digest context");
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, head.data(), head.size()) == 1 &&
                    EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, md, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw Error("io", "HashFailure", "SHA-1 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

std::string git_blob_sha1_file(const std::string& path) { return git_blob_sha1(read_all(path)); }

void write_manifest(const std::string& dir, const RunConfig& config, const std::vector<std::string>& files) {
    const nlohmann::json cfg = config_to_json(config);
    nlohmann::json outputs = nlohmann::json::object();
    for (const auto& f : files) {
        const fs::path p = fs::path(dir) / f;
        outputs[f] = git_blob_sha1_file(p.string());
    }
    const Grid g = config.grid();
    write_json((fs::path(dir) / "manifest.json").string(),
               {{"config", cfg},
                {"config_hash", git_blob_sha1(cfg.dump())},
                {"grid", {{"N", g.N}, {"R", g.R}, {"h", g.h}, {"points_per_axis", g.n}}},
                {"outputs", outputs}});
}

std::vector<std::string> emit_plot_data(const std::string& dir, const std::vector<BranchPoint>& branch) {
    std::vector<const BranchPoint*> ok;
    for (const auto& b : branch)
        if (b.ok) ok.push_back(&b);
    if (ok.empty()) throw Error("io", "MissingArtifact", "branch has no accepted points");
    const std::map<std::string, double BranchPoint::*> quantities{
        {"w", &BranchPoint::w_norm_h1},          {"energy_remainder", &BranchPoint::energy_remainder},
        {"psi_l2", &BranchPoint::psi_l2},        {"psi_h1", &BranchPoint::psi_h1},
        {"psi_linf", &BranchPoint::psi_linf},    {"pde_residual", &BranchPoint::pde_residual}};
    std::vector<std::string> files;
    for (const auto& [name, member] : quantities) {
        std::vector<std::vector<double>> rows;
        for (const BranchPoint* b : ok) rows.push_back({std::log(b->eps), std::log(std::abs(b->*member))});
        const std::string file = "loglog_" + name + ".csv";
        write_csv((fs::path(dir) / file).string(), {"log_eps", "log_value"}, rows);
        files.push_back(file);
    }
    return files;
}

std::vector<std::string> emit_plot_data(const std::string& dir, const GammaProfile& profile) {
    if (profile.gamma_samples.empty()) throw Error("io", "MissingArtifact", "gamma profile has no samples");
    const std::size_t N = profile.theta_samples.front().size();
    std::vector<std::string> files;
    for (std::size_t axis = 0; axis < N; ++axis) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t k = 0; k < profile.gamma_samples.size(); ++k) {
            bool on_axis = true;
            for (std::size_t i = 0; i < N; ++i)
                if (i != axis && profile.theta_samples[k][i] != 0.0) on_axis = false;
            if (on_axis) pts.emplace_back(profile.theta_samples[k][axis], profile.gamma_samples[k]);
        }
        std::sort(pts.begin(), pts.end());
        std::vector<std::vector<double>> rows;
        for (const auto& [t, v] : pts) rows.push_back({t, v});
        const std::string file = "gamma_section_" + std::to_string(axis + 1) + ".csv";
        write_csv((fs::path(dir) / file).string(), {"theta", "gamma"}, rows);
        files.push_back(file);
    }
    return files;
}

}  // namespace bifurc

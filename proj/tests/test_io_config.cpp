#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "bifurc/config.hpp"
#include "bifurc/io.hpp"
#include "bifurc/reduction.hpp"
#include "helpers.hpp"

using namespace bifurc;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "bifurc_tests";
    fs::create_directories(d);
    return (d / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("io_config") {

TEST_CASE("defaults") {
    const RunConfig c = default_config(1);
    CHECK(c.problem.N == 1);
    CHECK(c.problem.p == 3.0);
    CHECK(c.problem.q == 5.0);
    CHECK(*c.problem.a_coeff.derived_integral == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c.eps_grid.size() == 7);
    CHECK(c.eps_grid.front() == 0.4);
    CHECK(default_eps_grid(2).size() == 5);
    CHECK(validate(c.problem).ok);
    c.check();
}

TEST_CASE("parsing helpers") {
    CHECK(parse_eps_grid("0.4,0.2,0.1") == std::vector<double>{0.4, 0.2, 0.1});
    const std::vector<double> g = parse_eps_grid("0.4:0.5:3");
    REQUIRE(g.size() == 3);
    CHECK(g[2] == doctest::Approx(0.1));
    CHECK(parse_case("l1") == CaseTag::L1Case);
    CHECK(parse_case("algebraic") == CaseTag::AlgebraicCase);
    CHECK(parse_verify_level("full") == VerifyLevel::Full);
    CHECK(testing::error_code([] { parse_case("bogus"); }) == "config.Invalid");
    CHECK(testing::error_code([] { parse_verify_level("medium"); }) == "config.Invalid");
}

TEST_CASE("configuration round-trips through JSON") {
    RunConfig c = default_config(2);
    c.problem.case_tag = CaseTag::AlgebraicCase;
    c.problem.a_coeff = CoefficientSpec::algebraic(0.7, 1.5, 2);
    c.eps_grid = {0.3, 0.15, 0.05};
    c.grid_h = 0.1;
    c.reduction.newton_tol = 1e-9;
    const nlohmann::json j = config_to_json(c);
    const RunConfig d = config_from_json(j);
    CHECK(config_to_json(d) == j);
    CHECK(d.problem.a_coeff.gamma == 1.5);
    CHECK(d.eps_grid == c.eps_grid);
    CHECK(d.reduction.newton_tol == 1e-9);
}

TEST_CASE("configuration errors") {
    using nlohmann::json;
    CHECK(testing::error_code([] { config_from_json(json{{"eps_grid", {0.1, 0.2}}}); }) == "config.Invalid");
    CHECK(testing::error_code([] {
              config_from_json(json{{"problem", {{"a", {{"family", "gaussian"}, {"amplitude", 1}, {"integral", 1}}}}}});
          }) == "config.Invalid");
    CHECK(testing::error_code([] { config_from_json(json{{"tolerances", {{"newton", -1.0}}}}); }) == "config.Invalid");
    CHECK(testing::error_code([] { load_config(scratch("does_not_exist.json")); }).size() > 0);
}

TEST_CASE("inadmissible data is reported by validate, not by parsing") {
    using nlohmann::json;
    const RunConfig zero = config_from_json(
        json{{"problem", {{"a", {{"family", "gaussian"}, {"amplitude", 0.0}, {"width", 1.0}}}}}});
    const AdmissibilityReport r = validate(zero.problem);
    CHECK_FALSE(r.ok);
    CHECK(r.violations == std::vector<std::string>{"(a2)"});

    const RunConfig n3 = config_from_json(json{{"problem", {{"N", 3}, {"q", 6.0}}}});
    CHECK(validate(n3.problem).violations.front() == "exponent-window");
}

TEST_CASE("SHA-1 object ids") {
    CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    const std::string p = scratch("hello.txt");
    std::ofstream(p, std::ios::binary) << "hello\n";
    CHECK(git_blob_sha1_file(p) == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("CSV round-trip is exact") {
    const std::string p = scratch("t.csv");
    const std::vector<std::vector<double>> rows{{0.1, 1.0 / 3.0}, {-2.5e-300, 1e300}};
    write_csv(p, {"a", "b"}, rows);
    const CsvTable t = read_csv(p);
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    CHECK(t.rows == rows);
    CHECK(t.column("b") == 1);
    CHECK(t.column("c") == -1);
    CHECK(testing::error_code([] { read_csv(scratch("missing.csv")); }) == "io.MissingArtifact");
    std::ofstream(scratch("bad.csv")) << "a,b\n1,2\n3\n";
    CHECK(testing::error_code([] { read_csv(scratch("bad.csv")); }) == "io.Malformed");
}

TEST_CASE("field binary round-trip") {
    std::mt19937 rng(1);
    const Grid g = Grid::make(2, 2.0, 0.5);
    const Field f = testing::noise(g, rng);
    const std::string p = scratch("f.bin");
    write_field_binary(p, f);
    const Field r = read_field_binary(p);
    CHECK(r.grid() == g);
    CHECK(r.values() == f.values());
    CHECK(fs::file_size(p) == 4 + 8 + 8 + 8 * g.size());
}

TEST_CASE("plot data") {
    std::vector<BranchPoint> br(4);
    for (std::size_t i = 0; i < br.size(); ++i) {
        BranchPoint& b = br[i];
        b.eps = 0.4 * std::pow(0.5, static_cast<double>(i));
        b.ok = i != 2;
        b.w_norm_h1 = b.energy_remainder = b.psi_l2 = b.psi_h1 = b.psi_linf = b.pde_residual = b.eps;
    }
    const std::string dir = scratch("plots");
    fs::remove_all(dir);
    const std::vector<std::string> files = emit_plot_data(dir, br);
    CHECK(files.size() == 6);
    const CsvTable t = read_csv(dir + "/loglog_w.csv");
    CHECK(t.header == std::vector<std::string>{"log_eps", "log_value"});
    CHECK(t.rows.size() == 3);
    CHECK(t.rows[0][0] == doctest::Approx(std::log(0.4)));

    for (BranchPoint& b : br) b.ok = false;
    CHECK(testing::error_code([&] { emit_plot_data(dir, br); }) == "io.MissingArtifact");
    CHECK(testing::error_code([&] { emit_plot_data(dir, GammaProfile{}); }) == "io.MissingArtifact");
}

TEST_CASE("outputs are byte-identical across reruns") {
    const GroundState& gs = testing::gs_1d_p3();
    const std::string a = scratch("gs_a.csv"), b = scratch("gs_b.csv");
    write_groundstate(a, gs);
    write_groundstate(b, testing::gs_1d_p3());
    CHECK(slurp(a) == slurp(b));

    const RunConfig c = default_config(1);
    const std::string d1 = scratch("m1"), d2 = scratch("m2");
    for (const std::string& d : {d1, d2}) {
        fs::remove_all(d);
        ensure_directory(d);
        write_groundstate(d + "/gs.csv", gs);
        write_manifest(d, c, {"gs.csv"});
    }
    CHECK(slurp(d1 + "/manifest.json") == slurp(d2 + "/manifest.json"));
    const nlohmann::json m = read_json(d1 + "/manifest.json");
    CHECK(m.contains("config_hash"));
    CHECK(m["config_hash"] == git_blob_sha1(config_to_json(c).dump()));
}

TEST_CASE("branch csv header") {
    const std::vector<std::string> h = branch_csv_header(2);
    CHECK(h.front() == "eps");
    CHECK(std::find(h.begin(), h.end(), "theta_2") != h.end());
    CHECK(h.back() == "morse_index");
}

}  // TEST_SUITE

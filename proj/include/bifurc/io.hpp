#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "bifurc/config.hpp"
#include "bifurc/functional.hpp"
#include "bifurc/grid.hpp"
#include "bifurc/groundstate.hpp"
#include "bifurc/morse.hpp"
#include "bifurc/reduction.hpp"

namespace bifurc {

/// Comma-separated with a header row; numbers printed with "%.17g" so they
/// round-trip exactly.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    int column(const std::string& name) const;  ///< −1 when absent
};

/// Throws io.MissingArtifact when the file cannot be opened and io.Malformed
/// on ragged or non-numeric rows.
CsvTable read_csv(const std::string& path);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

std::string format_double(double x);

/// Binary layout: int32 N, float64 R, float64 h, then the values in
/// row-major order (last axis fastest), all little-endian as in memory.
void write_field_binary(const std::string& path, const Field& f);
Field read_field_binary(const std::string& path);
/// N = 1 only: columns x, value.
void write_field_csv(const std::string& path, const Field& f);

/// Columns eps, lambda, theta_1..theta_N, w_h1, energy, energy_remainder,
/// gamma_theta, psi_l2, psi_h1, psi_linf, pde_residual, morse_index.
/// Failed points are omitted.
void write_branch_csv(const std::string& path, int N, const std::vector<BranchPoint>& branch);
std::vector<std::string> branch_csv_header(int N);

/// Profile as r, z, dz plus a JSON summary next to it (same stem, .json).
void write_groundstate(const std::string& csv_path, const GroundState& gs);
nlohmann::json groundstate_summary(const GroundState& gs);

nlohmann::json gamma_profile_to_json(const GammaProfile& g);
void write_gamma_profile(const std::string& stem, const GammaProfile& g);

nlohmann::json morse_report_to_json(const MorseReport& r);
nlohmann::json rate_fit_to_json(const RateFit& f);
nlohmann::json branch_point_to_json(const BranchPoint& b);

/// SHA-1 of "blob <size>\0" + content, as git computes object ids.
std::string git_blob_sha1(const std::string& content);
std::string git_blob_sha1_file(const std::string& path);

/// manifest.json in `dir`: configuration, grid, tolerances, the hash of the
/// canonical configuration text and the hash of every listed output file.
void write_manifest(const std::string& dir, const RunConfig& config, const std::vector<std::string>& files);

/// loglog_<quantity>.csv (columns log_eps, log_value) for the accepted
/// branch points, one row per point. Returns the files written. Throws
/// io.MissingArtifact when no point was accepted.
std::vector<std::string> emit_plot_data(const std::string& dir, const std::vector<BranchPoint>& branch);
/// gamma_section_<axis>.csv (columns theta, gamma) along each coordinate axis
/// through the samples. Throws io.MissingArtifact on an empty profile.
std::vector<std::string> emit_plot_data(const std::string& dir, const GammaProfile& profile);

void ensure_directory(const std::string& dir);

}  // namespace bifurc

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bifurc/config.hpp"

namespace bifurc {

/// Tolerances of the acceptance suite.
namespace acceptance {
inline constexpr double kGroundStateSup = 1e-6;        ///< shooting vs closed form, N = 1
inline constexpr double kGroundStateResidual = 1e-8;
inline constexpr double kCollocationAgreement = 1e-5;  ///< shooting vs collocation, N = 3
inline constexpr double kLimitN1 = 0.05;               ///< Γ-limit relative error, N = 1
inline constexpr double kLimitN2 = 0.10;               ///< Γ-limit relative error, N ≥ 2
inline constexpr double kDecayRatio = 0.01;            ///< |Γ(θ)|/|Γ(0)| at |θ| = 8
inline constexpr double kDecayRadius = 8.0;
inline constexpr double kSlopeBand = 0.2;              ///< G′ slope against its prediction
inline constexpr double kGateMargin = 0.1;             ///< slopes must beat α/2 (or α) by this
inline constexpr double kOrthogonality = 1e-8;
inline constexpr double kStrongWSlopeSlack = 0.2;      ///< ‖w‖ slope ≥ α − 0.2 for N = 1, p ≥ 2
inline constexpr double kLocalization = 0.05;
inline constexpr double kEnergyRatio = 0.1;
inline constexpr double kTangentAlignment = 0.99;
inline constexpr double kHessianLimit = 0.15;
inline constexpr double kScalingBand = 0.05;
inline constexpr double kPdeResidual = 1e-6;
inline constexpr double kRescaleConsistency = 1e-10;
inline constexpr double kGradientFd = 1e-5;
inline constexpr double kHessianFd = 1e-5;
inline constexpr double kHessianSymmetry = 1e-10;
inline constexpr double kFdStep = 1e-5;
inline constexpr int kRandomFields = 20;
}  // namespace acceptance

enum class Verdict { Pass, Fail, Skipped };
std::string to_string(Verdict v);

struct CriterionResult {
    int id = 0;
    std::string name;
    Verdict verdict = Verdict::Skipped;
    std::string summary;  ///< one line with the decisive numbers
    nlohmann::json data;  ///< every measured quantity, per scenario
    double seconds = 0.0;
};

struct VerifyReport {
    bool admissible = true;
    std::vector<std::string> violations;
    std::string error;  ///< module-qualified code when a stage aborted the run
    std::vector<CriterionResult> criteria;

    bool passed() const;
    nlohmann::json to_json() const;
};

/// Runs validate, ground states, Γ probes, branches, Morse analysis and the
/// asymptotic fits for the configured problem and for fixed companion
/// problems (the same data with S < 0, with p ∈ {5, 6}, and at the full
/// level the N = 2 runs), then grades the thirteen acceptance criteria.
/// `on_result` is called as each criterion is graded.
VerifyReport run_verify(const RunConfig& config, VerifyLevel level,
                        const std::function<void(const CriterionResult&)>& on_result = {});

/// Printable one-line form "PASS  3 name: summary".
std::string format_result(const CriterionResult& r);

}  // namespace bifurc

#include <cstdio>
#include <exception>

#include "bifurc/config.hpp"
#include "bifurc/verify.hpp"

// Grades the acceptance criteria on the shipped defaults with every companion
// scenario and prints one line per criterion. Exit status 1 when any fails.
int main() {
    try {
        const bifurc::VerifyReport rep =
            bifurc::run_verify(bifurc::default_config(1), bifurc::VerifyLevel::Full, [](const bifurc::CriterionResult& r) {
                std::printf("%s\n", bifurc::format_result(r).c_str());
                std::fflush(stdout);
            });
        if (!rep.admissible) std::printf("inadmissible defaults\n");
        if (!rep.error.empty()) std::printf("aborted: %s\n", rep.error.c_str());
        int passed = 0;
        for (const auto& c : rep.criteria) passed += c.verdict == bifurc::Verdict::Pass;
        std::printf("%d/%zu criteria passed\n", passed, rep.criteria.size());
        return rep.passed() ? 0 : 1;
    } catch (const std::exception& e) {
        std::printf("error: %s\n", e.what());
        return 2;
    }
}

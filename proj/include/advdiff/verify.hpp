#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace advdiff {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyOptions {
    bool quick = false;  // reduced probe counts, keeps runtime under ~10 s
    // Deliberately corrupts the analytic gradient fed to the
    // finite-difference check; the suite must then fail. Negative control.
    bool inject_gradient_bug = false;
    uint64_t seed = 2024;
};

// Finite-difference gradient checks, maximizer brute force, attack
// consistency, combination-matrix invariants, and the two risk-structure
// suites. Each entry carries a pass flag plus a one-line detail.
std::vector<CheckResult> run_verify_suite(const VerifyOptions& opt);

}  // namespace advdiff

#pragma once

// Named PASS/FAIL checks over a solved state, the feasibility corpus and the
// regularity surrogates. Diagnostic checks are reported but never fail a suite.

#include <string>
#include <vector>

#include "flatvp/regularity.hpp"
#include "flatvp/rearrange.hpp"

namespace flatvp {

struct CheckResult {
    std::string name;
    bool passed = false;
    bool diagnostic = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
    nlohmann::json toJson() const;
};

struct CheckOptions {
    double massTol = 1e-6;
    double residualTol = 1e-6;
    double complementaryTol = 1e-8;
    double identityTol = 1e-5;
    double slopeTol = 1e-5;           // |xi'(0)| <= slopeTol |E_C^r|
    ProbeOptions probe;
    std::size_t corpusSize = 50;
    std::uint64_t corpusSeed = 2024;
    double hlsConstant = kHlsConstant;
    double reductionTol = 1e-6;
};

/// 2 pi int_0^sqrt(2 lambda) (Phi')^-1(lambda - v^2/2) v dv, without the conjugate.
double velocityIntegral(const MicroProfile& micro, double lambda);

/// (Psi')^-1 against the velocity integral at 20 log-spaced lambda in [1e-2, 1e2].
CheckResult reductionIdentityCheck(const ReducedProfile& profile, double tol = 1e-6);

/// Residual, complementary condition, mass, sign of E0, shape, energy identity,
/// minimality probe and the coercivity bound of a solved state.
std::vector<CheckResult> stateChecks(const SteadyState& state, const CheckOptions& options = {});

/// Rearrangement norms, Riesz gain, interpolation inequality (n in {1.1, 1.5, 1.9}),
/// HLS and the coercivity floor over the seeded corpus on a fixed geometric grid.
std::vector<CheckResult> corpusChecks(const ReducedProfile& profile, const CheckOptions& options = {});

/// Regularity surrogates: solves the state at refinements 1, 2, 4 of its grid.
std::vector<CheckResult> regularityChecks(const SteadyState& state, const SolverOptions& solver = {});

/// True when every non-diagnostic check passed.
bool allPassed(const std::vector<CheckResult>& results);

}  // namespace flatvp

#pragma once

// Reduced Casimir-energy functional on radial densities, the Euler-Lagrange
// solver for its minimizer and a posteriori minimality and coercivity checks.
//
// The discrete functional is
//   E(rho) = sum_i w_i Psi(rho_i) - D(rho,rho) + sum_i w_i rho_i U_ext(r_i),
// with D the symmetric Coulomb form of the grid. Its gradient divided by the
// weights is Psi'(rho_i) + (Ks rho)_i + U_ext(r_i), so the solver iterates the
// Euler-Lagrange map of exactly this functional.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "flatvp/profiles.hpp"
#include "flatvp/radial_field.hpp"

namespace flatvp {

struct EnergyReport {
    double kinetic = 0.0;            // E_kin of the optimal velocity profile
    double casimir = 0.0;            // C(f)
    double psiIntegral = 0.0;        // int Psi(rho)
    double selfPotential = 0.0;      // E_pot^1 = -D(rho,rho)
    double externalPotential = 0.0;  // E_pot^e = -2 D(rho,rho_ext)
    double total = 0.0;              // E_kin + C + E_pot^1 + E_pot^e
    double reduced = 0.0;            // psiIntegral + selfPotential + externalPotential

    nlohmann::json toJson() const;
};

/// Node-wise energy densities (per unit area) of the ansatz.
struct EnergyDensities {
    std::vector<double> kinetic, casimir, psi;
};

EnergyDensities energyDensities(const RadialDensity& rho, const ReducedProfile& profile);
EnergyReport energyReport(const RadialDensity& rho, const ReducedProfile& profile, const ExternalDensity& external);

/// E_C^r only (no velocity integrals). The external potential is sampled at the nodes.
double reducedEnergy(const RadialDensity& rho, const ReducedProfile& profile, std::span<const double> externalPotential);
double reducedEnergy(const RadialDensity& rho, const ReducedProfile& profile, const ExternalDensity& external);

class InvalidMass : public DomainError {
public:
    using DomainError::DomainError;
};

/// The mass map does not reach M on the E0 bracket: the grid does not hold the state.
class BracketFailure : public ConvergenceError {
public:
    using ConvergenceError::ConvergenceError;
};

struct SolverDiagnostics {
    int iterations = 0;
    bool converged = false;
    std::vector<double> residuals;  // residual of the iterate entering each sweep
    std::vector<double> dampings;
    /// Positive density in the outermost cell (support not resolved by the grid).
    bool supportAtBoundary = false;
    /// Cells with positive density; a handful means the grid does not resolve the state.
    std::size_t supportCells = 0;

    /// First sweep whose residual fell below tol (-1 if never).
    int sweepsToReach(double tol) const;
};

enum class SolverMethod {
    /// Damped Newton correction of the fixed-point residual (default).
    newton,
    /// Plain damped fixed-point step rho <- (1-w) rho + w T(rho).
    picard,
};

struct SolverOptions {
    SolverMethod method = SolverMethod::newton;
    double damping = 0.5;
    double minDamping = 1.0 / 1024.0;
    double tol = 1e-10;
    int maxIter = 500;
    double massTol = 1e-10;
    /// Starting density; bestUniformDisk when empty.
    std::optional<RadialDensity> initial;
    /// Called once per sweep with (sweep, residual, damping, E0, current density).
    std::function<void(int, double, double, double, std::span<const double>)> onSweep;
};

struct SteadyState {
    ReducedProfile profile;
    double mass;
    RadialDensity rho;
    RadialPotential selfPotential;           // (Ks rho) and its derivative
    std::vector<double> externalPotential;   // U_ext at the nodes
    ExternalDensity external;
    double E0;
    double supportRadius;
    EnergyReport energies;
    SolverDiagnostics diagnostics;

    std::vector<double> totalPotential() const;
};

class NoConvergence : public ConvergenceError {
public:
    NoConvergence(const std::string& what, SolverDiagnostics diagnostics)
        : ConvergenceError(what), diagnostics_(std::move(diagnostics)) {}
    const SolverDiagnostics& diagnostics() const { return diagnostics_; }

private:
    SolverDiagnostics diagnostics_;
};

/// Fixed point of rho = T(rho) = (Psi')^-1((E0 - U)_+), U = Ks rho + U_ext, with E0
/// re-solved each sweep by bisection on (min U - |min U|, 0) so that T(rho) has
/// mass M. A sweep moves rho by w times a step: T(rho) - rho for the plain
/// iteration, or the Newton correction of rho - T(rho) = 0 under the mass
/// constraint (the plain iteration is unstable for self-gravitating states).
/// The damping is halved whenever the residual grows; Newton sweeps double it
/// again, up to 1, while the residual falls.
SteadyState solveSteadyState(const ReducedProfile& profile, double mass, const ExternalDensity& external,
                             GridPtr grid, const SolverOptions& options = {});

/// Uniform disk of mass M whose radius minimizes E_C^r among such disks on the grid
/// (Brent search in log radius between 4 r_min and 0.9 r_max).
RadialDensity bestUniformDisk(const ReducedProfile& profile, double mass, std::span<const double> externalPotential,
                              GridPtr grid);

/// Density (Psi')^-1((E0 - U)_+) at the nodes.
std::vector<double> eulerLagrangeDensity(const ReducedProfile& profile, std::span<const double> totalPotential, double E0);

/// Multiplier E0 with mass of the Euler-Lagrange density equal to M. Throws BracketFailure.
double solveMultiplier(const ReducedProfile& profile, const RadialGrid& grid, std::span<const double> totalPotential,
                       double mass, double massTol = 1e-10);

struct ResidualReport {
    double residual = 0.0;  // max_i |rho_i - (Psi')^-1((E0-U_i)_+)| / (1 + rho_0)
    /// Largest E0 - U_i over nodes with rho_i = 0 (complementary condition E0 <= U there).
    double complementaryExcess = 0.0;
    bool complementaryHolds(double tol) const { return complementaryExcess <= tol; }
};

ResidualReport elResidualReport(const RadialDensity& rho, const ReducedProfile& profile,
                                std::span<const double> totalPotential, double E0);
ResidualReport elResidualReport(const SteadyState& state);
double elResidual(const SteadyState& state);

/// f0(x,v) = (Phi')^-1((E0 - U - |v|^2/2)_+) integrated over v at each node.
std::vector<double> reconstructedDensity(const SteadyState& state);

struct ProbeOptions {
    int trials = 100;
    double lambdaMax = 0.5;
    std::uint64_t seed = 1;
    double relTol = 1e-7;  // violations are gains below -relTol |E_C^r|
    double supportFraction = 0.9;
};

struct ProbeViolation {
    int trial;
    double lambda;
    double gain;
    std::vector<double> bump;
};

struct ProbeReport {
    double reducedEnergy = 0.0;
    int trials = 0;
    std::vector<double> gains;      // E(rho0 + lambda phi) - E(rho0) per trial
    std::vector<double> lambdas;
    std::vector<double> slopes;     // xi'(0) per trial
    std::vector<double> curvatures; // xi''(0) per trial
    std::vector<ProbeViolation> violations;

    double minGain() const;
    double maxAbsSlope() const;
};

/// Random mass-free smooth bumps phi inside supportFraction * R0, scaled so that
/// max |phi| = rho0(0). For each trial a step lambda in (0, lambdaMax] keeping
/// rho0 + lambda phi >= 0 is drawn and the energy gain recorded; xi'(0) and xi''(0)
/// come from a fourth-order central difference with a small step.
ProbeReport minimalityProbe(const SteadyState& state, const ProbeOptions& options = {});

struct CoercivityReport {
    double n = 0.0;
    double constant = 0.0;     // C
    double selfPart = 0.0;     // A
    double externalPart = 0.0; // B
    double psiIntegral = 0.0;  // x
    double reducedEnergy = 0.0;
    double bound = 0.0;        // x - C x^(n/2) - C
    double margin = 0.0;       // reducedEnergy - bound
    double globalLowerBound = 0.0;  // min over x >= 0 of the bound (-inf when n >= 2)

    bool holds(double tol = 0.0) const { return margin >= -tol; }
};

/// Constants of the lower bound E_C^r >= x - C x^(n/2) - C. With
/// Psi(rho) >= c rho^(1+1/n) (c estimated over the values of rho), HLS and the
/// interpolation inequality give D(rho,rho) <= A x^(n/2) and
/// 2 D(rho,rho_ext) <= B x^(n/4) <= B (1 + x^(n/2)), hence C = A + B.
CoercivityReport coercivityCheck(const RadialDensity& rho, const ReducedProfile& profile,
                                 const ExternalDensity& external, double n,
                                 std::optional<double> constant = std::nullopt);

/// Seeded mixtures of Gaussians, disks and annuli with masses in [0.1, 10].
std::vector<RadialDensity> feasibilityCorpus(GridPtr grid, std::size_t count = 50, std::uint64_t seed = 2024);

/// JSON document {profile, M, E0, R0, grid, external, energies, residual, ...}
/// plus a CSV `r,rho,U_self,U_ext,U_total`. The CSV path is stored in the JSON
/// relative to it. A non-empty config hash goes into the JSON as "config_hash" and
/// into the CSV as a leading "# config_hash: ..." line.
void saveSteadyState(const SteadyState& state, const std::filesystem::path& jsonPath,
                     const std::filesystem::path& csvPath, const std::string& configHash = {});
SteadyState loadSteadyState(const std::filesystem::path& jsonPath);

nlohmann::json profileToJson(const MicroProfile& micro);
MicroProfile profileFromJson(const nlohmann::json& j);

}  // namespace flatvp

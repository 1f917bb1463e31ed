#pragma once

// Particle (characteristics) evolution of the flat Vlasov-Poisson system and the
// stability experiment around a solved minimizer.
//
// Each particle is a phase-space cell: position, velocity, the value of f it
// carries (constant along the characteristic) and its phase-space volume w.
// Its mass is w f. Self-gravity is either the softened direct sum or the
// gradient of the binned (cloud-in-cell on the radial grid) potential energy.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "flatvp/variational.hpp"

namespace flatvp {

enum class FieldMode { nbody, radialBinned };
std::string fieldModeName(FieldMode mode);
FieldMode fieldModeFromString(const std::string& name);

struct Ensemble {
    std::vector<double> x1, x2, v1, v2;
    std::vector<double> f;  // carried phase density
    std::vector<double> w;  // phase-space volume
    double softening = 0.0;
    FieldMode mode = FieldMode::radialBinned;

    std::size_t size() const { return f.size(); }
    double mass() const;
    double particleMass(std::size_t i) const { return w[i] * f[i]; }
    double radius(std::size_t i) const { return std::hypot(x1[i], x2[i]); }
    /// Sum of w |v|^2/2 f.
    double kineticEnergy() const;
    /// Sum of w Phi(f).
    double casimir(const MicroProfile& micro) const;

    void writeCsv(const std::filesystem::path& path, const std::string& configHash = {}) const;
    static Ensemble readCsv(const std::filesystem::path& path);
};

/// Raised in strict mode when a particle moves farther than maxStepFactor softening lengths in one step.
class StepRejected : public ConvergenceError {
public:
    using ConvergenceError::ConvergenceError;
};

/// A position or velocity became non-finite.
class BlowUp : public ConvergenceError {
public:
    BlowUp(const std::string& what, double time) : ConvergenceError(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

/// Frozen steady-state energy E(x,v) = |v|^2/2 + U0(|x|) + U_ext(|x|) and the ansatz f0.
class AnsatzField {
public:
    explicit AnsatzField(const SteadyState& state);
    /// U0 + U_ext, linear between nodes.
    double potential(double r) const;
    double energy(double r, double speed2) const { return 0.5 * speed2 + potential(r); }
    double f0(double r, double speed2) const;
    /// E0 - U(r), positive inside the support.
    double depth(double r) const { return E0_ - potential(r); }
    const ReducedProfile& profile() const { return profile_; }
    double E0() const { return E0_; }
    /// Radius where U crosses E0 (outer edge of the spatial support).
    double supportRadius() const { return support_; }
    /// Steady density (cell averages on the state grid) and its Coulomb energy E_pot^1(rho0).
    const GridPtr& grid() const { return grid_; }
    std::span<const double> rho0() const { return rho0_; }
    double selfEnergy0() const { return selfEnergy0_; }

private:
    ReducedProfile profile_;
    GridPtr grid_;
    std::vector<double> rho0_;
    double selfEnergy0_;
    std::vector<double> nodes_, u_;
    double E0_, support_;
};

/// Stratified sample of f0 over {E < E0}: strata equal in mass in r, equal in area in
/// s = |v|/v_max(r), and 4 x 4 angular cells. Weights are the exact phase volumes of the
/// strata; each particle sits at a random point of its stratum and carries f0 there.
Ensemble sampleAnsatz(const SteadyState& state, std::size_t count, std::uint64_t seed);

/// Default softening: twice the mean interparticle spacing sqrt(pi R0^2 / N).
double defaultSoftening(double supportRadius, std::size_t count);

struct DynamicsContext {
    GridPtr grid;  // binning grid for the radial mode and for density differences
    ExternalDensity external = ExternalDensity::none();
    const MicroProfile* micro = nullptr;  // for the Casimir term of E_C
    bool selfGravity = true;
};

/// Node densities from cloud-in-cell assignment of particle masses (clamped to the node range).
std::vector<double> binnedDensity(const Ensemble& ens, const RadialGrid& grid);

struct EnsembleEnergy {
    double kinetic = 0.0, casimir = 0.0, self = 0.0, external = 0.0;
    double total() const { return kinetic + casimir + self + external; }
};
/// E_C of the ensemble with the potential energy matching the force model.
EnsembleEnergy ensembleEnergy(const Ensemble& ens, const DynamicsContext& ctx);

/// Accelerations (a1, a2) for every particle.
void accelerations(const Ensemble& ens, const DynamicsContext& ctx, std::vector<double>& a1, std::vector<double>& a2);

struct EvolveOptions {
    double dt = 1e-3;
    double tEnd = 1.0;
    int samples = 50;
    double maxStepFactor = 1.0;
    /// Throw StepRejected on the first flagged step instead of counting it.
    bool strict = false;
    /// Called at t = 0 and at `samples` evenly spaced step counts (always including the last).
    std::function<void(double, const Ensemble&)> observer;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Ensemble> snapshots;  // only when keepSnapshots
    int steps = 0;
    int flaggedSteps = 0;  // steps with a move longer than maxStepFactor softening lengths
    Ensemble final;
};

/// Kick-drift-kick leapfrog. Positions and velocities of a new generation are computed
/// from the previous one; f and w are never touched. Throws BlowUp on non-finite state.
Trajectory evolve(const Ensemble& initial, const DynamicsContext& ctx, const EvolveOptions& options,
                  bool keepSnapshots = false);

struct IdentityCheck {
    double lhs = 0.0;           // E_C(f) - E_C(f0)
    double exactRhs = 0.0;      // d + E_pot^1(drho)
    double statedRhs = 0.0;     // d - E_pot^1(drho)
    double scale = 0.0;         // max(|E_C(f0)|, d)
    double exactError() const { return scale > 0.0 ? std::fabs(lhs - exactRhs) / scale : 0.0; }
    double statedError() const { return scale > 0.0 ? std::fabs(lhs - statedRhs) / scale : 0.0; }
};

struct DistanceReport {
    double d = 0.0;           // d(f, f0)
    double epotDiff = 0.0;    // E_pot^1(rho_f - rho0) = -D(drho, drho), rho_f binned
    double combined = 0.0;    // d - E_pot^1(drho)
    double spread = 0.0;      // Monte-Carlo spread of d
    /// E_C(f) - E_C(f0) against both sign conventions of the expansion.
    IdentityCheck identity;
};

/// Reference quantities of the unperturbed sample: H_ref = sum w [Phi(f0) + E f0] and
/// E_C(f0), both over the sample. The context grid must be the state grid. With
/// drho = rho_f - rho0 the expansion identity then holds up to -E_pot^1 of the
/// reference's own binning noise.
struct DistanceReference {
    double href = 0.0;
    std::vector<double> terms;  // per-particle w [Phi(f0) + E f0]
    double normPower = 0.0;     // sum w f0^p, p = 1 + 1/k
    double energy = 0.0;
};
DistanceReference distanceReference(const Ensemble& reference, const AnsatzField& field, const DynamicsContext& ctx);

/// d(f,f0) = sum_p w_p [Phi(f_p) + E(z_p) f_p] - H_ref, which equals the ensemble sum of
/// Phi(f) - Phi(f0) + E (f - f0) plus the integral of Phi(f0) + E f0 over the part of
/// supp f0 the ensemble does not cover (evaluated on the sampling strata).
DistanceReport distance(const Ensemble& ens, const AnsatzField& field, const DistanceReference& ref,
                        const DynamicsContext& ctx);

/// Estimate of ||f - f0||_p, p = 1 + 1/k: the ensemble sum of w |f - f0(z)|^p plus the
/// uncovered part of f0^p.
double normDeviation(const Ensemble& ens, const AnsatzField& field, const DistanceReference& ref);

/// Velocity dilation v -> (1+delta) v with w -> (1+delta)^2 w and f -> f/(1+delta)^2 (mass preserving).
Ensemble dilateVelocities(const Ensemble& ens, double delta);
/// Same for positions x -> (1+delta) x.
Ensemble dilatePositions(const Ensemble& ens, double delta);

/// sqrt(R0^3 / M).
double dynamicalTime(const SteadyState& state);

struct StabilityOptions {
    double perturbation = 0.01;
    std::size_t particles = 10000;
    double dt = 1e-3;     // in dynamical times when dynamicalUnits
    double tEnd = 10.0;
    bool dynamicalUnits = true;
    int samples = 50;
    std::uint64_t seed = 1;
    FieldMode mode = FieldMode::radialBinned;
    double softening = 0.0;  // 0 selects defaultSoftening
    double maxStepFactor = 1.0;
};

struct StabilityMetrics {
    std::vector<double> t, d, epotDiff, combined, ecDrift, massDrift;
    double timeUnit = 1.0;
    double initialCombined = 0.0;
    double maxCombined = 0.0;
    double minCombined = 0.0;
    double minD = 0.0;
    double maxAbsEcDrift = 0.0;
    IdentityCheck identity;            // at t = 0
    double maxIdentityError = 0.0;     // exact form, over all samples (includes the E_C drift)
    int steps = 0, flaggedSteps = 0;
    Ensemble final;
    double maxNormDeviation = 0.0;  // max over samples of the ||f - f0||_{1+1/k} estimate
    double ratio() const { return initialCombined > 0.0 ? maxCombined / initialCombined : 0.0; }

    void writeCsv(const std::filesystem::path& path, const std::string& configHash = {}) const;
    nlohmann::json summary() const;
};

StabilityMetrics stabilityExperiment(const SteadyState& state, const StabilityOptions& options);

}  // namespace flatvp

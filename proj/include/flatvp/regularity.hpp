#pragma once

// Finite-resolution surrogates for the regularity of the potential: L^{4/n}
// integrability of the density, the one-derivative gain of the potential
// operator, Hoelder continuity of U', continuity of U and the Fourier symbol
// of the planar kernel. Every verdict is a refinement-stability test with an
// explicit threshold; the raw numbers are always reported.

#include <string>
#include <vector>

#include "json.hpp"

#include "flatvp/variational.hpp"

namespace flatvp {

enum class Verdict { pass, fail, skipped };
std::string verdictName(Verdict v);

struct L4nReport {
    double n = 0.0;
    double exponent = 0.0;   // 4/n
    double norm = 0.0;       // ||rho||_{4/n}
    double psiPrimeQuartic = 0.0;  // int Psi'(rho)^4
    /// int rho^{4/n} / int Psi'(rho)^4 (the proof bounds the former by a multiple of the latter).
    double ratio = 0.0;
    bool finite() const { return std::isfinite(norm); }
};

double l4nNorm(const RadialDensity& rho, double n);
L4nReport l4nNorm(const SteadyState& state);

/// Cells of `grid` split into `factor` sub-cells (uniform and geometric grids keep their mode).
GridPtr refineGrid(const RadialGrid& grid, int factor);
/// The same piecewise-constant function on a refined grid.
RadialDensity refineDensity(const RadialDensity& rho, int factor);

/// Nonuniform central differences of node values (one-sided at the ends).
std::vector<double> finiteDifference(const RadialGrid& grid, std::span<const double> values);

struct SmoothingReport {
    double p = 0.0;
    std::vector<std::size_t> sizes;
    std::vector<double> densityNorms;      // ||rho||_p
    std::vector<double> derivativeNorms;   // ||dU/dr||_p from finite differences of U
    std::vector<double> secondNorms;       // ||d2U/dr2||_p
    double derivativeChange = 0.0;         // relative change between the two finest grids
    double secondChange = 0.0;
    Verdict verdict = Verdict::skipped;
    nlohmann::json toJson() const;
};

/// Potential of rho at refinement factors 1, 2, 4; PASS when ||dU/dr||_p changes by
/// less than `threshold` between the two finest grids. rho = 0 passes trivially.
SmoothingReport smoothingCheck(const RadialDensity& rho, double p, double threshold = 0.05);
/// Same with the density re-sampled exactly (from its tail mass) on each refined grid,
/// so that smooth densities stay smooth instead of becoming staircases.
SmoothingReport smoothingCheck(const std::function<double(double)>& tailMass, const RadialGrid& grid, double p,
                               double threshold = 0.05);

/// sup over node pairs with r <= rLimit and minSep <= |r1 - r2| <= maxSep of
/// |g(r1) - g(r2)| / |r1 - r2|^alpha.
double holderSeminorm(std::span<const double> nodes, std::span<const double> g, double alpha, double rLimit,
                      double minSep, double maxSep);

/// dU/dr of the total potential of a state at its nodes.
std::vector<double> totalForce(const SteadyState& state);

struct HolderReport {
    double exponent = 0.0;
    std::vector<std::size_t> sizes;
    std::vector<double> seminorms;
    double growth = 0.0;  // largest ratio between successive estimates, minus 1
    Verdict verdict = Verdict::skipped;
    nlohmann::json toJson() const;
};

/// Seminorm of U' over r <= 2 R0 and separations in [R0/100, R0] for states solved on
/// the given grids (successive refinements); PASS when no estimate grows by more than
/// `threshold` over the previous one.
HolderReport holderCheck(const std::vector<SteadyState>& states, double exponent, double threshold = 0.25);

struct ContinuityReport {
    std::vector<double> spacings;  // largest cell width inside 2 R0
    std::vector<double> jumps;     // largest node-to-node change of U inside 2 R0
    std::vector<std::pair<double, double>> modulus;  // (delta, omega(delta)) on the finest state
    Verdict verdict = Verdict::skipped;
    nlohmann::json toJson() const;
};

/// Jumps must shrink at least linearly with the spacing (10% slack).
ContinuityReport continuityCheck(const std::vector<SteadyState>& states);

struct FourierReport {
    std::vector<double> frequencies;
    std::vector<double> ratios;    // F(U)/F(rho)
    std::vector<double> expected;  // -2 pi / xi
    double maxRelativeError = 0.0;
    bool illConditioned = false;
    Verdict verdict = Verdict::skipped;
    nlohmann::json toJson() const;
};

/// Order-zero Hankel transforms F(f)(xi) = 2 pi int f(r) J0(xi r) r dr of U and rho
/// on [xiMin, xiMax]. The -M/r tail of U is transformed in closed form (-2 pi M/xi).
FourierReport fourierSymbolCheck(const RadialDensity& rho, double xiMin = 0.5, double xiMax = 2.0,
                                 int samples = 16, double tol = 0.01);

struct RegularityReport {
    double n = 0.0;
    double holderTarget = 0.0;  // 1 - n/2
    L4nReport l4n;
    double maxPsiInverseDerivative = 0.0;  // over [0, E0 - min U]
    SmoothingReport smoothing;
    HolderReport holder;
    ContinuityReport continuity;
    nlohmann::json toJson() const;
};

/// Runs the state checks on states solved at refinement factors 1, 2, 4 of `grid`.
RegularityReport regularityReport(const ReducedProfile& profile, double mass, const ExternalDensity& external,
                                  const RadialGrid& grid, const SolverOptions& options = {});

}  // namespace flatvp

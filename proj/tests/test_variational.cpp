#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "flatvp/variational.hpp"

using namespace flatvp;
using doctest::Approx;

namespace {

const ReducedProfile& halfPolytrope()
{
    static const ReducedProfile p(MicroProfile::polytrope(0.5));
    return p;
}

GridPtr solverGrid()
{
    static const auto g = RadialGrid::uniform(512, 0.03);
    return g;
}

const SteadyState& isolatedState()
{
    static const auto s = solveSteadyState(halfPolytrope(), 1.0, ExternalDensity::none(), solverGrid());
    return s;
}

const SteadyState& kuzminState()
{
    static const auto s = solveSteadyState(halfPolytrope(), 1.0, ExternalDensity::kuzmin(1.0, 1.0), solverGrid());
    return s;
}

void checkSteadyStateInvariants(const SteadyState& s)
{
    CHECK(s.diagnostics.converged);
    CHECK(s.diagnostics.sweepsToReach(1e-4) >= 0);
    CHECK(s.diagnostics.sweepsToReach(1e-4) <= 200);
    CHECK(elResidual(s) < 1e-4);
    CHECK(s.E0 < 0.0);
    CHECK(std::fabs(s.rho.mass() - 1.0) <= 1e-6);
    CHECK(s.rho.symmetricDecreasing());
    CHECK_FALSE(s.diagnostics.supportAtBoundary);
    CHECK(s.diagnostics.supportCells > 100);
    CHECK(s.supportRadius < s.rho.grid().rMax());
    // support is {U < E0} up to one cell
    const auto u = s.totalPotential();
    for (std::size_t i = 0; i < s.rho.size(); ++i) {
        if (s.rho[i] > 0.0)
            CHECK(u[i] < s.E0 + 1e-9);
        if (i > 0 && s.rho[i - 1] == 0.0)
            CHECK(u[i] >= s.E0);
    }
}

}  // namespace

TEST_CASE("energy report on trivial and closed-form densities")
{
    const auto g = RadialGrid::uniform(256, 2.0);
    const auto zero = RadialDensity::zero(g);
    const auto e0 = energyReport(zero, halfPolytrope(), ExternalDensity::kuzmin(1.0, 1.0));
    CHECK(e0.kinetic == 0.0);
    CHECK(e0.casimir == 0.0);
    CHECK(e0.psiIntegral == 0.0);
    CHECK(e0.selfPotential == 0.0);
    CHECK(e0.externalPotential == 0.0);
    CHECK(e0.reduced == 0.0);

    const auto disk = RadialDensity::disk(RadialGrid::uniform(512, 2.0), 1.0 / kPi, 1.0);
    const auto e = energyReport(disk, halfPolytrope(), ExternalDensity::kuzmin(1.0, 1.0));
    CHECK(e.selfPotential == Approx(-8.0 / (3.0 * kPi)).epsilon(1e-4));
    CHECK(e.externalPotential < 0.0);
    // int rho U_ext for the unit-mass disk against -1/sqrt(r^2+1): 2 (1 - sqrt 2)
    CHECK(e.externalPotential == Approx(2.0 * (1.0 - std::sqrt(2.0))).epsilon(1e-5));
    CHECK(e.reduced == Approx(e.psiIntegral + e.selfPotential + e.externalPotential).epsilon(1e-15));
    CHECK(e.kinetic + e.casimir == Approx(e.psiIntegral).epsilon(1e-8));
}

TEST_CASE("solver rejects invalid mass and options")
{
    CHECK_THROWS_AS(solveSteadyState(halfPolytrope(), 0.0, ExternalDensity::none(), solverGrid()), InvalidMass);
    CHECK_THROWS_AS(solveSteadyState(halfPolytrope(), -1.0, ExternalDensity::none(), solverGrid()), InvalidMass);
    SolverOptions bad;
    bad.damping = 1.5;
    CHECK_THROWS_AS(solveSteadyState(halfPolytrope(), 1.0, ExternalDensity::none(), solverGrid(), bad), DomainError);
}

TEST_CASE("multiplier bracket fails when the potential is nowhere negative")
{
    const auto g = RadialGrid::uniform(16, 1.0);
    const std::vector<double> u(16, 0.5);
    CHECK_THROWS_AS(solveMultiplier(halfPolytrope(), *g, u, 1.0), BracketFailure);
    // shallow well: even E0 = 0 cannot hold the mass
    const std::vector<double> shallow(16, -1e-6);
    CHECK_THROWS_AS(solveMultiplier(halfPolytrope(), *g, shallow, 1.0), BracketFailure);
}

TEST_CASE("isolated k = 0.5 steady state")
{
    checkSteadyStateInvariants(isolatedState());
}

TEST_CASE("k = 0.5 steady state in a Kuzmin field")
{
    const auto& s = kuzminState();
    checkSteadyStateInvariants(s);
    CHECK(s.E0 < isolatedState().E0);
    // the external minimizer does at least as well as the isolated one in the external field
    const double rival = reducedEnergy(isolatedState().rho, halfPolytrope(), ExternalDensity::kuzmin(1.0, 1.0));
    CHECK(s.energies.reduced <= rival + 1e-12 * std::fabs(rival));
}

TEST_CASE("other exponents and masses converge")
{
    for (double k : {0.25, 0.75}) {
        const ReducedProfile p(MicroProfile::polytrope(k));
        const auto s = solveSteadyState(p, 1.0, ExternalDensity::none(), RadialGrid::uniform(256, k < 0.5 ? 0.08 : 4e-4));
        CAPTURE(k);
        CHECK(s.diagnostics.converged);
        CHECK(s.E0 < 0.0);
        CHECK(s.diagnostics.supportCells > 40);
        CHECK(s.rho.symmetricDecreasing());
    }
}

TEST_CASE("plain fixed-point sweeps reach the same state")
{
    SolverOptions o;
    o.method = SolverMethod::picard;
    o.minDamping = o.damping;  // constant damping
    o.tol = 1e-9;
    o.maxIter = 1000;
    const auto s = solveSteadyState(halfPolytrope(), 1.0, ExternalDensity::none(), solverGrid(), o);
    CHECK(s.E0 == Approx(isolatedState().E0).epsilon(1e-7));
    for (std::size_t i = 0; i < s.rho.size(); i += 16)
        CHECK(s.rho[i] == Approx(isolatedState().rho[i]).epsilon(1e-6).scale(isolatedState().rho[0]));
}

TEST_CASE("energy identity E_kin + C = int Psi at the minimizer")
{
    for (const auto* s : {&isolatedState(), &kuzminState()}) {
        const auto& e = s->energies;
        CHECK(std::fabs(e.kinetic + e.casimir - e.psiIntegral) <= 1e-5 * std::fabs(e.psiIntegral));
        CHECK(e.selfPotential < 0.0);
        CHECK(e.externalPotential <= 0.0);
        CHECK(e.total == Approx(e.reduced).epsilon(1e-5));
    }
}

TEST_CASE("Euler-Lagrange residual")
{
    const auto& s = isolatedState();
    // exactly consistent synthetic state
    const auto u = s.totalPotential();
    auto synthetic = s;
    synthetic.rho = RadialDensity(s.rho.gridPtr(), eulerLagrangeDensity(s.profile, u, s.E0));
    const auto exact = elResidualReport(synthetic.rho, s.profile, u, s.E0);
    CHECK(exact.residual <= 1e-12);
    CHECK(exact.complementaryHolds(1e-12));
    // corrupted state
    auto corrupted = s;
    corrupted.rho = s.rho.scaled(1.1);
    CHECK(elResidual(corrupted) > 0.01);
    CHECK(elResidualReport(s).complementaryHolds(1e-9));
}

TEST_CASE("velocity reconstruction reproduces the density")
{
    const auto& s = isolatedState();
    const auto recon = reconstructedDensity(s);
    const auto target = eulerLagrangeDensity(s.profile, s.totalPotential(), s.E0);
    for (std::size_t i = 0; i < recon.size(); ++i) {
        CHECK(recon[i] == Approx(target[i]).epsilon(1e-8));
        CHECK(std::fabs(recon[i] - s.rho[i]) <= 1e-6 * (s.rho[i] + s.rho[0] * 1e-3));
    }
}

TEST_CASE("mass map is nondecreasing in E0")
{
    const auto& s = isolatedState();
    const auto u = s.totalPotential();
    double previous = -1.0;
    for (double e = 2.0 * s.E0; e <= 0.0; e -= s.E0 / 50.0) {
        double m = 0.0;
        const auto rho = eulerLagrangeDensity(s.profile, u, e);
        for (std::size_t i = 0; i < rho.size(); ++i)
            m += s.rho.grid().weight(i) * rho[i];
        CHECK(m >= previous);
        previous = m;
    }
}

TEST_CASE("minimality probe")
{
    const auto& s = isolatedState();
    ProbeOptions o;
    o.trials = 100;
    o.seed = 17;
    const auto report = minimalityProbe(s, o);
    CHECK(report.violations.empty());
    CHECK(report.minGain() >= -1e-7 * std::fabs(report.reducedEnergy));
    CHECK(report.maxAbsSlope() <= 1e-5 * std::fabs(report.reducedEnergy));
    for (double c : report.curvatures)
        CHECK(c > 0.0);

    // zero step
    CHECK(reducedEnergy(s.rho, s.profile, s.externalPotential) == report.reducedEnergy);

    // same mass on a uniform disk: higher energy, and the probe flags it
    auto disk = s;
    disk.rho = RadialDensity::disk(s.rho.gridPtr(), 1.0 / (kPi * s.supportRadius * s.supportRadius), s.supportRadius);
    CHECK(reducedEnergy(disk.rho, s.profile, s.externalPotential) > report.reducedEnergy);
    ProbeOptions quick;
    quick.trials = 20;
    const auto bad = minimalityProbe(disk, quick);
    CHECK(bad.maxAbsSlope() > 1e-3 * std::fabs(bad.reducedEnergy));
    CHECK_FALSE(bad.violations.empty());
}

TEST_CASE("probe is reproducible for a fixed seed")
{
    ProbeOptions o;
    o.trials = 10;
    o.seed = 99;
    const auto a = minimalityProbe(isolatedState(), o);
    const auto b = minimalityProbe(isolatedState(), o);
    CHECK(a.gains == b.gains);
    CHECK(a.slopes == b.slopes);
}

TEST_CASE("coercivity bound")
{
    const auto& s = kuzminState();
    const auto ext = ExternalDensity::kuzmin(1.0, 1.0);
    const double n = s.profile.n();
    const auto at = coercivityCheck(s.rho, s.profile, ext, n);
    CHECK(at.constant == Approx(at.selfPart + at.externalPart));
    CHECK(at.externalPart > 0.0);
    CHECK(at.holds());
    CHECK(at.reducedEnergy >= at.globalLowerBound);

    // mass-preserving dilations rho_l(r) = l^2 rho(l r)
    const auto g = RadialGrid::geometric(400, 50.0, 1e-4);
    for (int j = 0; j < 10; ++j) {
        const double l = std::pow(10.0, -1.0 + 0.35 * j);
        const auto rho = RadialDensity::fromTailMass(g, [l](double r) { return std::exp(-l * l * r * r); });
        const auto rep = coercivityCheck(rho, s.profile, ext, n);
        CAPTURE(l);
        CHECK(rep.holds());
        CHECK(rep.reducedEnergy >= rep.globalLowerBound);
    }

    // vanishing mass: both sides tend to -C and 0
    const auto tiny = RadialDensity::fromTailMass(g, [](double r) { return 1e-12 * std::exp(-r * r); });
    const auto rep = coercivityCheck(tiny, s.profile, ext, n, 0.5);
    CHECK(rep.bound == Approx(-0.5).epsilon(1e-3));
    CHECK(std::fabs(rep.reducedEnergy) < 1e-6);
    CHECK(rep.holds());
}

TEST_CASE("feasibility corpus and the inequality chain")
{
    const auto g = RadialGrid::geometric(384, 20.0, 1e-3);
    const auto corpus = feasibilityCorpus(g, 50, 2024);
    REQUIRE(corpus.size() == 50);
    const auto again = feasibilityCorpus(g, 50, 2024);
    for (std::size_t c = 0; c < corpus.size(); ++c) {
        const auto& rho = corpus[c];
        CHECK(rho.mass() >= 0.1 * (1.0 - 1e-12));
        CHECK(rho.mass() <= 10.0 * (1.0 + 1e-12));
        CHECK(std::equal(rho.values().begin(), rho.values().end(), again[c].values().begin()));
        const double n43 = lpNorm(rho, 4.0 / 3.0);
        CHECK(2.0 * coulombEnergy(rho, rho) <= kHlsConstant * n43 * n43);
        for (double n : {1.1, 1.5, 1.9}) {
            const double rhs = std::pow(lpNorm(rho, 1.0), (3.0 - n) / 4.0) * std::pow(lpNorm(rho, 1.0 + 1.0 / n), (n + 1.0) / 4.0);
            CHECK(n43 <= rhs * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("steady state JSON and CSV round trip")
{
    const auto& s = kuzminState();
    const auto dir = std::filesystem::temp_directory_path() / "flatvp_state_test";
    std::filesystem::create_directories(dir);
    saveSteadyState(s, dir / "state.json", dir / "state.csv", "abc123");
    const auto back = loadSteadyState(dir / "state.json");
    CHECK(back.E0 == s.E0);
    CHECK(back.mass == s.mass);
    CHECK(back.external.kind() == ExternalDensity::Kind::kuzmin);
    REQUIRE(back.rho.size() == s.rho.size());
    for (std::size_t i = 0; i < s.rho.size(); ++i)
        CHECK(back.rho[i] == s.rho[i]);
    CHECK(back.energies.reduced == s.energies.reduced);
    CHECK(elResidual(back) == elResidual(s));
    std::ifstream csv(dir / "state.csv");
    std::string first;
    std::getline(csv, first);
    CHECK(first == "# config_hash: abc123");
    std::filesystem::remove_all(dir);
}

// Acceptance harness: one PASS/FAIL line per criterion, exit status 0 iff all pass.
// Runtime budgets are part of each criterion.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "flatvp/checks.hpp"
#include "flatvp/csv.hpp"
#include "flatvp/dynamics.hpp"
#include "oracles.hpp"

using namespace flatvp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budgetSeconds, const std::function<Outcome()>& body)
{
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    while (o.detail.size() >= 2 && o.detail.ends_with("; "))
        o.detail.resize(o.detail.size() - 2);
    const bool inBudget = seconds <= budgetSeconds;
    const bool ok = o.passed && inBudget;
    failures += !ok;
    std::printf("%s criterion %2d %-28s %s; %.1f s (budget %.0f s)%s\n", ok ? "PASS" : "FAIL", id, name,
                o.detail.c_str(), seconds, budgetSeconds, inBudget ? "" : " OVER BUDGET");
    std::fflush(stdout);
}

SteadyState solveHalf(const ExternalDensity& external)
{
    return solveSteadyState(ReducedProfile(MicroProfile::polytrope(0.5)), 1.0, external, RadialGrid::uniform(512, 0.03));
}

const SteadyState& isolated()
{
    static const auto s = solveHalf(ExternalDensity::none());
    return s;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<fs::path> csvFiles(const fs::path& dir)
{
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.path().extension() == ".csv")
            out.push_back(fs::relative(e.path(), dir));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

int main()
{
    criterion(1, "reduction identity", 5.0, [] {
        double worst = 0.0;
        bool ok = true;
        for (double k : {0.25, 0.5, 0.75}) {
            const auto r = reductionIdentityCheck(ReducedProfile(MicroProfile::polytrope(k)), 1e-6);
            ok = ok && r.passed;
            worst = std::max(worst, r.value);
        }
        return Outcome{ok, fmt("max relative error %.2e over k in {0.25,0.5,0.75} (tol 1e-6)", worst)};
    });

    criterion(2, "kernel oracle", 10.0, [] {
        const auto g = RadialGrid::geometric(512, 1000.0, 1e-3);
        const auto kz = ExternalDensity::kuzmin(1.0, 1.0);
        const auto u = diskPotential(kz.sampled(g));
        double worst = 0.0;
        for (std::size_t i = 0; i < g->size() && g->node(i) <= 10.0; ++i)
            worst = std::max(worst, std::fabs(u.values[i] / kz.potential(g->node(i)) - 1.0));
        const double sigma = 1.0, radius = 1.0;
        const auto disk = RadialDensity::disk(RadialGrid::uniform(512, 2.0), sigma, radius);
        const double centre = std::fabs(potentialAt(disk, 0.0) / (-kTwoPi * sigma * radius) - 1.0);
        return Outcome{worst <= 1e-4 && centre <= 1e-5,
                       fmt("Kuzmin sup rel error %.2e (tol 1e-4), disk centre rel error %.2e (tol 1e-5)", worst, centre)};
    });

    criterion(3, "Coulomb self-energy", 30.0, [] {
        const double mass = 1.0, radius = 1.0, sigma = mass / (kPi * radius * radius);
        const double exact = 8.0 / (3.0 * kPi) * mass * mass / radius;
        const auto disk = RadialDensity::disk(RadialGrid::uniform(512, 2.0), sigma, radius);
        const double quad = coulombEnergy(disk, disk);
        const auto mc = oracle::diskSelfEnergy(sigma, radius, 1000000, 17);
        const double sigmas = std::fabs(mc.mean - exact) / mc.stderr_;
        const double rel = std::fabs(quad / exact - 1.0);
        return Outcome{sigmas <= 3.0 && rel <= 1e-3,
                       fmt("Monte-Carlo %.6f +- %.1e is %.2f sigma from 8/(3pi); quadrature rel error %.2e (tol 1e-3)",
                           mc.mean, mc.stderr_, sigmas, rel)};
    });

    criterion(4, "Euler-Lagrange convergence", 240.0, [] {
        std::string detail;
        bool ok = true;
        for (const auto& ext : {ExternalDensity::none(), ExternalDensity::kuzmin(1.0, 1.0)}) {
            const auto start = std::chrono::steady_clock::now();
            const auto s = solveHalf(ext);
            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            const int sweeps = s.diagnostics.sweepsToReach(1e-4);
            const double massErr = std::fabs(s.rho.mass() / s.mass - 1.0);
            const bool compact = !s.diagnostics.supportAtBoundary && s.supportRadius < s.rho.grid().rMax();
            ok = ok && sweeps >= 0 && sweeps <= 200 && s.E0 < 0.0 && massErr <= 1e-6 && s.rho.symmetricDecreasing() &&
                 compact && seconds < 120.0;
            detail += fmt("%s: residual < 1e-4 after %d sweeps, E0 %.4f, mass err %.1e, decreasing %d, R0 %.4f; ",
                          ext.name().c_str(), sweeps, s.E0, massErr, int(s.rho.symmetricDecreasing()), s.supportRadius);
        }
        return Outcome{ok, detail};
    });

    criterion(5, "minimality probing", 120.0, [] {
        const auto& s = isolated();
        const auto probe = minimalityProbe(s);
        const double scale = std::fabs(probe.reducedEnergy);
        const double slope = probe.maxAbsSlope() / scale;
        const bool ok = probe.trials == 100 && probe.violations.empty() && slope <= 1e-5;
        return Outcome{ok, fmt("%d trials, %zu violations, min gain %.3e, max |xi'(0)|/|E| %.2e (tol 1e-5)", probe.trials,
                               probe.violations.size(), probe.minGain(), slope)};
    });

    criterion(6, "rearrangement suite", 60.0, [] {
        const auto results = corpusChecks(isolated().profile);
        bool ok = true;
        std::string detail;
        for (const auto& r : results) {
            if (r.name != "rearrangement_norms" && r.name != "riesz_gain" && r.name != "interpolation")
                continue;
            ok = ok && r.passed;
            detail += r.name + " " + (r.passed ? "ok" : "FAILED") + " (" + r.detail + "); ";
        }
        return Outcome{ok, detail};
    });

    criterion(7, "energy identity", 30.0, [] {
        const auto& e = isolated().energies;
        const double rel = std::fabs(e.kinetic + e.casimir - e.psiIntegral) / std::fabs(e.psiIntegral);
        return Outcome{rel <= 1e-5, fmt("|E_kin + C - int Psi| / int Psi = %.2e (tol 1e-5)", rel)};
    });

    criterion(8, "regularity surrogates", 120.0, [] {
        const auto disk = RadialDensity::disk(RadialGrid::uniform(128, 2.0), 1.0, 1.0);
        const auto smooth = smoothingCheck(disk, 4.0 / 1.5);
        const auto rep = regularityReport(ReducedProfile(MicroProfile::polytrope(0.5)), 1.0, ExternalDensity::none(),
                                          *RadialGrid::uniform(256, 0.03));
        const auto gauss = RadialDensity::fromTailMass(RadialGrid::geometric(512, 20.0, 1e-3),
                                                       [](double r) { return std::exp(-0.5 * r * r); });
        const auto fourier = fourierSymbolCheck(gauss);
        const bool ok = smooth.verdict == Verdict::pass && smooth.derivativeChange < 0.05 &&
                        rep.holder.verdict == Verdict::pass && rep.holder.exponent == 0.25 &&
                        rep.holder.growth < 0.25 && fourier.verdict == Verdict::pass &&
                        fourier.maxRelativeError < 0.01;
        return Outcome{ok, fmt("disk ||U'|| change %.2e (< 0.05), Hoelder(0.25) growth %.3f (< 0.25), "
                               "Fourier ratio error %.2e (< 0.01)",
                               smooth.derivativeChange, rep.holder.growth, fourier.maxRelativeError)};
    });

    criterion(9, "dynamics and stability", 600.0, [] {
        // free streaming
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Ensemble e;
        for (int i = 0; i < 100; ++i) {
            e.x1.push_back(u(rng));
            e.x2.push_back(u(rng));
            e.v1.push_back(u(rng));
            e.v2.push_back(u(rng));
            e.f.push_back(1.0);
            e.w.push_back(0.01);
        }
        DynamicsContext free;
        free.selfGravity = false;
        EvolveOptions fo;
        fo.dt = 0.01;
        fo.tEnd = 2.0;
        const auto streamed = evolve(e, free, fo);
        double streamErr = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i)
            streamErr = std::max({streamErr, std::fabs(streamed.final.x1[i] - (e.x1[i] + 2.0 * e.v1[i])),
                                  std::fabs(streamed.final.x2[i] - (e.x2[i] + 2.0 * e.v2[i]))});

        // circular orbit at r = a in a Kuzmin field: v_c = 2^(-3/4)
        Ensemble orbit;
        orbit.x1 = {1.0};
        orbit.x2 = {0.0};
        orbit.v1 = {0.0};
        orbit.v2 = {std::pow(2.0, -0.75)};
        orbit.f = {1.0};
        orbit.w = {1e-12};
        DynamicsContext field = free;
        field.external = ExternalDensity::kuzmin(1.0, 1.0);
        EvolveOptions oo;
        oo.dt = 1e-3;
        oo.tEnd = 10.0 * kTwoPi / std::pow(2.0, -0.75);
        oo.samples = 5000;
        double drift = 0.0;
        oo.observer = [&](double, const Ensemble& s) { drift = std::max(drift, std::fabs(s.radius(0) - 1.0)); };
        evolve(orbit, field, oo);

        // perturbed ensembles
        StabilityOptions so;
        so.perturbation = 0.01;
        so.particles = 10000;
        const auto base = stabilityExperiment(isolated(), so);
        so.particles = 40000;
        const auto fine = stabilityExperiment(isolated(), so);
        const bool positive = base.minCombined > 0.0 && fine.minCombined > 0.0;
        const bool ok = streamErr <= 1e-12 && drift <= 1e-3 && base.maxAbsEcDrift < 0.01 &&
                        fine.maxAbsEcDrift < 0.005 && positive && base.ratio() <= 10.0 && fine.ratio() <= 10.0;
        return Outcome{ok, fmt("streaming err %.1e, orbit drift %.1e (<= 1e-3), E_C drift %.2e at N=1e4 (< 1e-2) "
                               "and %.2e at N=4e4 (< 5e-3), min combined %.3e / %.3e (> 0), max/initial %.2f / %.2f (<= 10)",
                               streamErr, drift, base.maxAbsEcDrift, fine.maxAbsEcDrift, base.minCombined,
                               fine.minCombined, base.ratio(), fine.ratio())};
    });

    criterion(10, "determinism", 120.0, [] {
        const auto root = fs::temp_directory_path() / "flatvp_acceptance_determinism";
        fs::remove_all(root);
        fs::create_directories(root);
        {
            std::ofstream cfg(root / "config.json");
            cfg << R"({"grid": {"n": 256, "r_max": "auto"},
                       "dynamics": {"N": 4000, "t_end": 2, "dt": 0.01, "delta_pert": 0.01},
                       "seed": 42})";
        }
        const std::string exe = FLATVP_CLI;
        for (const char* run : {"a", "b"}) {
            const auto out = (root / run).string();
            for (const std::string command : {"evolve", "sweep --param M --values 0.5,2"}) {
                const std::string line = exe + " --config " + (root / "config.json").string() + " --out " + out +
                                         (command == "evolve" ? "" : "/sweep") + " " + command + " > /dev/null 2>&1";
                if (std::system(line.c_str()) != 0)
                    return Outcome{false, "command failed: " + line};
            }
        }
        const auto files = csvFiles(root / "a");
        if (files != csvFiles(root / "b") || files.empty())
            return Outcome{false, "different CSV file sets"};
        for (const auto& f : files)
            if (slurp(root / "a" / f) != slurp(root / "b" / f))
                return Outcome{false, "differs: " + f.string()};
        return Outcome{true, fmt("%zu CSVs bit-identical across two CLI runs (evolve, sweep)", files.size())};
    });

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

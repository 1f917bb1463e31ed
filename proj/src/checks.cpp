#include "flatvp/checks.hpp"

#include <algorithm>
#include <sstream>

namespace flatvp {

namespace {

constexpr double kRieszTol = 1e-6;

CheckResult make(std::string name, bool passed, double value, double threshold, std::string detail = {},
                 bool diagnostic = false)
{
    CheckResult r;
    r.name = std::move(name);
    r.passed = passed;
    r.value = value;
    r.threshold = threshold;
    r.detail = std::move(detail);
    r.diagnostic = diagnostic;
    return r;
}

CheckResult fromVerdict(std::string name, Verdict v, double value, double threshold, std::string detail = {})
{
    if (v == Verdict::skipped)
        detail += (detail.empty() ? "" : "; ") + std::string("skipped");
    return make(std::move(name), v == Verdict::pass, value, threshold, std::move(detail));
}

std::string countOf(int good, int total)
{
    return std::to_string(good) + "/" + std::to_string(total);
}

}  // namespace

nlohmann::json CheckResult::toJson() const
{
    return {{"name", name},
            {"status", passed ? "PASS" : "FAIL"},
            {"diagnostic", diagnostic},
            {"value", value},
            {"threshold", threshold},
            {"detail", detail}};
}

bool allPassed(const std::vector<CheckResult>& results)
{
    return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed || r.diagnostic; });
}

double velocityIntegral(const MicroProfile& micro, double lambda)
{
    if (!(lambda > 0.0))
        return 0.0;
    const double vmax = std::sqrt(2.0 * lambda);
    return kTwoPi * math::integrateEndpointSingular(
        [&](double v) { return micro.phiPrimeInverse(std::max(lambda - 0.5 * v * v, 0.0)) * v; }, 0.0, vmax, 1e-14);
}

CheckResult reductionIdentityCheck(const ReducedProfile& profile, double tol)
{
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double lambda = std::pow(10.0, -2.0 + 4.0 * i / 19.0);
        const double direct = velocityIntegral(profile.micro(), lambda);
        worst = std::max(worst, std::fabs(profile.psiPrimeInverse(lambda) - direct) / std::fabs(direct));
    }
    return make("reduction_identity", worst <= tol, worst, tol, "max relative error over 20 lambda");
}

std::vector<CheckResult> stateChecks(const SteadyState& state, const CheckOptions& options)
{
    std::vector<CheckResult> out;
    const double massErr = std::fabs(state.rho.mass() - state.mass) / state.mass;
    out.push_back(make("mass", massErr <= options.massTol, massErr, options.massTol, "relative mass error"));
    out.push_back(make("e0_negative", state.E0 < 0.0, state.E0, 0.0, "E0"));
    const bool inside = state.rho.supportRadius() < state.rho.grid().rMax();
    out.push_back(make("decreasing_compact", state.rho.symmetricDecreasing() && inside, state.rho.supportRadius(),
                       state.rho.grid().rMax(), "support radius against r_max"));

    const auto el = elResidualReport(state);
    out.push_back(make("el_residual", el.residual <= options.residualTol, el.residual, options.residualTol,
                       "max |rho - (Psi')^-1((E0 - U)_+)| / (1 + rho(0))"));
    out.push_back(make("complementary", el.complementaryHolds(options.complementaryTol), el.complementaryExcess,
                       options.complementaryTol, "max E0 - U outside the support"));

    const auto& e = state.energies;
    const double idErr = std::fabs(e.kinetic + e.casimir - e.psiIntegral) / std::fabs(e.psiIntegral);
    out.push_back(make("energy_identity", idErr <= options.identityTol, idErr, options.identityTol,
                       "|E_kin + C - int Psi(rho0)| / int Psi(rho0)"));

    const auto probe = minimalityProbe(state, options.probe);
    const double slopeLimit = options.slopeTol * std::fabs(probe.reducedEnergy);
    const bool probeOk = probe.violations.empty() && probe.maxAbsSlope() <= slopeLimit;
    std::ostringstream pd;
    pd << probe.violations.size() << " violations in " << probe.trials << " trials, max |xi'(0)| "
       << probe.maxAbsSlope() << ", min gain " << probe.minGain();
    out.push_back(make("minimality_probe", probeOk, probe.maxAbsSlope(), slopeLimit, pd.str()));

    const auto coercive = coercivityCheck(state.rho, state.profile, state.external, state.profile.n());
    out.push_back(make("coercivity", coercive.holds(), coercive.margin, 0.0,
                       "E_C^r - (x - C x^(n/2) - C), C = " + std::to_string(coercive.constant), true));
    return out;
}

std::vector<CheckResult> corpusChecks(const ReducedProfile& profile, const CheckOptions& options)
{
    const auto grid = RadialGrid::geometric(384, 20.0, 1e-3);
    const auto corpus = feasibilityCorpus(grid, options.corpusSize, options.corpusSeed);
    const int total = int(corpus.size());
    const double n = profile.n();

    double normErr = 0.0, hlsRatio = 0.0, minMargin = std::numeric_limits<double>::infinity();
    int riesz = 0, interpolation = 0, coercive = 0;
    double worstMargin = std::numeric_limits<double>::infinity();
    for (const auto& rho : corpus) {
        const auto cells = CellProfile::fromDensity(rho);
        const auto sorted = rearrangeCells(cells);
        for (double p : {1.0, 4.0 / 3.0, 2.0, 1.0 + 1.0 / n})
            normErr = std::max(normErr, std::fabs(sorted.lpNorm(p) - cells.lpNorm(p)) / cells.lpNorm(p));
        try {
            const auto g = rieszGain(cells, kRieszTol);
            minMargin = std::min(minMargin, g.gain() + std::max(kRieszTol, g.quadratureError));
            ++riesz;
        } catch (const PropertyViolation&) {
        }
        const double n43 = lpNorm(rho, 4.0 / 3.0);
        bool ok = true;
        for (double m : {1.1, 1.5, 1.9}) {
            const double rhs = std::pow(lpNorm(rho, 1.0), (3.0 - m) / 4.0) *
                               std::pow(lpNorm(rho, 1.0 + 1.0 / m), (m + 1.0) / 4.0);
            ok = ok && n43 <= rhs * (1.0 + 1e-12);
        }
        interpolation += ok;
        hlsRatio = std::max(hlsRatio, 2.0 * coulombEnergy(rho, rho) / (n43 * n43));
        const auto c = coercivityCheck(rho, profile, ExternalDensity::none(), n);
        const double floorGap = c.reducedEnergy - c.globalLowerBound;
        worstMargin = std::min(worstMargin, floorGap);
        coercive += floorGap >= 0.0;
    }
    std::vector<CheckResult> out;
    out.push_back(make("rearrangement_norms", normErr <= 1e-12, normErr, 1e-12,
                       "max relative change of L^p norms under cell rearrangement"));
    out.push_back(make("riesz_gain", riesz == total, minMargin, 0.0,
                       countOf(riesz, total) + " with D(rho*,rho*) - D(rho,rho) >= -quadrature tolerance"));
    out.push_back(make("interpolation", interpolation == total, double(interpolation), double(total),
                       countOf(interpolation, total) + " for n in {1.1, 1.5, 1.9}"));
    out.push_back(make("hls", hlsRatio <= options.hlsConstant, hlsRatio, options.hlsConstant,
                       "max 2 D(rho,rho) / ||rho||_{4/3}^2", true));
    out.push_back(make("coercivity_floor", coercive == total, worstMargin, 0.0,
                       countOf(coercive, total) + " with E_C^r above min_x (x - C x^(n/2) - C)", true));
    return out;
}

std::vector<CheckResult> regularityChecks(const SteadyState& state, const SolverOptions& solver)
{
    const auto rep = regularityReport(state.profile, state.mass, state.external, state.rho.grid(), solver);
    std::vector<CheckResult> out;
    out.push_back(make("l4n_finite", rep.l4n.finite(), rep.l4n.norm, 0.0, "||rho0||_{4/n}"));
    out.push_back(fromVerdict("smoothing_state", rep.smoothing.verdict, rep.smoothing.derivativeChange, 0.05,
                              "change of ||U'||_p between the two finest grids"));

    const auto disk = RadialDensity::disk(RadialGrid::uniform(128, 2.0), 1.0, 1.0);
    const auto sm = smoothingCheck(disk, rep.l4n.exponent);
    out.push_back(fromVerdict("smoothing_disk", sm.verdict, sm.derivativeChange, 0.05, "disk indicator"));

    out.push_back(fromVerdict("holder", rep.holder.verdict, rep.holder.growth, 0.25,
                              "growth of the Hoelder seminorm of U' at exponent " + std::to_string(rep.holder.exponent)));
    out.push_back(fromVerdict("continuity", rep.continuity.verdict,
                              rep.continuity.jumps.empty() ? 0.0 : rep.continuity.jumps.back(), 0.0,
                              "largest node-to-node change of U inside 2 R0 on the finest grid"));

    const auto g = RadialGrid::geometric(512, 20.0, 1e-3);
    const auto gauss = RadialDensity::fromTailMass(g, [](double r) { return std::exp(-0.5 * r * r); });
    const auto fourier = fourierSymbolCheck(gauss);
    out.push_back(fromVerdict("fourier_symbol", fourier.verdict, fourier.maxRelativeError, 0.01,
                              "Gaussian, xi in [0.5, 2]"));
    out.push_back(make("psi_inverse_derivative", std::isfinite(rep.maxPsiInverseDerivative),
                       rep.maxPsiInverseDerivative, 0.0, "max d/dlambda (Psi')^-1 over the state's range", true));
    return out;
}

}  // namespace flatvp

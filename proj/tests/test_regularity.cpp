#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "flatvp/regularity.hpp"

using namespace flatvp;
using doctest::Approx;

namespace {

const RegularityReport& halfPolytropeReport()
{
    static const auto r = regularityReport(ReducedProfile(MicroProfile::polytrope(0.5)), 1.0, ExternalDensity::none(),
                                           *RadialGrid::uniform(256, 0.03));
    return r;
}

double gaussianTail(double r) { return std::exp(-0.5 * r * r); }

}  // namespace

TEST_CASE("L^{4/n} norm")
{
    const auto g = RadialGrid::uniform(128, 2.0);
    CHECK(l4nNorm(RadialDensity::zero(g), 1.5) == 0.0);
    for (double n : {1.25, 1.5, 1.75}) {
        const auto disk = RadialDensity::disk(g, 1.0, 1.0);
        CHECK(l4nNorm(disk, n) == Approx(std::pow(kPi, n / 4.0)).epsilon(1e-12));
    }
    const auto& rep = halfPolytropeReport();
    CHECK(rep.l4n.exponent == Approx(8.0 / 3.0));
    CHECK(rep.l4n.finite());
    CHECK(rep.l4n.norm > 0.0);
    // for the power law Psi'(rho) = (rho/A)^(1/n), so the ratio is A^(4/n) with A = 2 pi Phi*(1)
    const double a = kTwoPi * MicroProfile::polytrope(0.5).conjugate(1.0);
    CHECK(rep.l4n.ratio == Approx(std::pow(a, 4.0 / 1.5)).epsilon(1e-10));
}

TEST_CASE("Hoelder target exponent")
{
    for (double k : {0.25, 0.5, 0.75, 0.999}) {
        const ReducedProfile p(MicroProfile::polytrope(k));
        const double target = 1.0 - p.n() / 2.0;
        CHECK(target > 0.0);
        CHECK(target < 0.5);
    }
    CHECK(1.0 - ReducedProfile(MicroProfile::polytrope(0.999)).n() / 2.0 < 1e-3);
}

TEST_CASE("grid refinement keeps the function")
{
    for (const auto& g : {RadialGrid::uniform(40, 3.0), RadialGrid::geometric(40, 3.0, 0.01),
                          RadialGrid::fromEdges({0.0, 0.3, 0.5, 1.2, 3.0})}) {
        const auto rho = RadialDensity::fromTailMass(g, gaussianTail);
        for (int f : {1, 2, 4}) {
            const auto fine = refineDensity(rho, f);
            CHECK(fine.size() == rho.size() * std::size_t(f));
            CHECK(fine.grid().rMax() == Approx(3.0));
            CHECK(fine.mass() == Approx(rho.mass()).epsilon(1e-12));
        }
    }
}

TEST_CASE("finite differences are exact on quadratics")
{
    const auto g = RadialGrid::geometric(30, 5.0, 0.1);
    std::vector<double> f(g->size());
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = 3.0 * g->node(i) * g->node(i) - g->node(i);
    const auto d = finiteDifference(*g, f);
    for (std::size_t i = 1; i + 1 < d.size(); ++i)
        CHECK(d[i] == Approx(6.0 * g->node(i) - 1.0).epsilon(1e-10));
}

TEST_CASE("smoothing: the potential gains one derivative")
{
    // discontinuous density: ||U'||_p settles although rho jumps
    const auto disk = RadialDensity::disk(RadialGrid::uniform(128, 2.0), 1.0, 1.0);
    for (double p : {1.0, 2.0, 8.0 / 3.0}) {
        const auto r = smoothingCheck(disk, p);
        CAPTURE(p);
        CHECK(r.verdict == Verdict::pass);
        CHECK(r.derivativeChange < 0.05);
    }
    // smooth density: the second difference settles too
    const auto gauss = smoothingCheck(gaussianTail, *RadialGrid::geometric(128, 20.0, 1e-2), 2.0);
    CHECK(gauss.verdict == Verdict::pass);
    CHECK(gauss.secondChange < 0.05);
    // zero density
    CHECK(smoothingCheck(RadialDensity::zero(RadialGrid::uniform(16, 1.0)), 2.0).verdict == Verdict::pass);
}

TEST_CASE("Hoelder seminorm of a smooth closed-form derivative")
{
    std::vector<double> estimates;
    for (std::size_t n : {200, 400, 800}) {
        const auto g = RadialGrid::uniform(n, 4.0);
        std::vector<double> du(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = g->node(i);
            du[i] = r / std::pow(1.0 + r * r, 1.5);
        }
        estimates.push_back(holderSeminorm(g->nodes(), du, 0.25, 2.0, 0.02, 2.0));
    }
    for (double e : estimates)
        CHECK(std::isfinite(e));
    CHECK(estimates[1] <= 1.25 * estimates[0]);
    CHECK(estimates[2] <= 1.25 * estimates[1]);
    CHECK_THROWS_AS(holderSeminorm({}, {}, 1.5, 1.0, 0.1, 1.0), DomainError);
}

TEST_CASE("solved state: Hoelder, continuity and smoothing verdicts")
{
    const auto& rep = halfPolytropeReport();
    CHECK(rep.holderTarget == Approx(0.25));
    CHECK(rep.holder.verdict == Verdict::pass);
    REQUIRE(rep.holder.seminorms.size() == 3);
    CHECK(rep.holder.growth < 0.25);
    CHECK(rep.continuity.verdict == Verdict::pass);
    CHECK(rep.continuity.jumps[2] < rep.continuity.jumps[0]);
    CHECK(rep.smoothing.verdict == Verdict::pass);
    CHECK(std::isfinite(rep.maxPsiInverseDerivative));
    CHECK(rep.maxPsiInverseDerivative > 0.0);
    const auto j = rep.toJson();
    CHECK(j.at("holder").at("verdict") == "PASS");
}

TEST_CASE("Fourier symbol of the planar kernel")
{
    const auto g = RadialGrid::geometric(512, 20.0, 1e-3);
    const auto rho = RadialDensity::fromTailMass(g, gaussianTail);
    const auto r = fourierSymbolCheck(rho);
    CHECK(r.verdict == Verdict::pass);
    CHECK(r.maxRelativeError < 0.01);
    const auto scaled = fourierSymbolCheck(rho.scaled(7.0));
    REQUIRE(scaled.ratios.size() == r.ratios.size());
    for (std::size_t i = 0; i < r.ratios.size(); ++i)
        CHECK(scaled.ratios[i] == Approx(r.ratios[i]).epsilon(1e-10));
    CHECK(fourierSymbolCheck(RadialDensity::zero(g)).verdict == Verdict::skipped);
    // a far band where the Gaussian transform underflows
    const auto far = fourierSymbolCheck(rho, 40.0, 60.0, 4);
    CHECK(far.illConditioned);
    CHECK(far.verdict != Verdict::pass);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "flatvp/profiles.hpp"

using namespace flatvp;
using doctest::Approx;

namespace {

// Velocity integral of (Phi')^-1((lambda - |v|^2/2)_+) over the plane, done as a
// tensor rule in (angle, speed) without using the conjugate.
double velocityIntegral(const MicroProfile& micro, double lambda)
{
    const double vmax = std::sqrt(2.0 * lambda);
    const double radial = math::integrateEndpointSingular(
        [&](double v) { return micro.phiPrimeInverse(std::max(lambda - 0.5 * v * v, 0.0)) * v; }, 0.0, vmax, 1e-14);
    const double angular = math::gaussLegendre([](double) { return 1.0; }, 0.0, kTwoPi, 8);
    return angular * radial;
}

MicroProfile squareTable()
{
    std::vector<double> f, dphi;
    for (int i = 0; i <= 400; ++i) {
        f.push_back(0.01 * i);
        dphi.push_back(0.02 * i);
    }
    return MicroProfile::tabulated(f, dphi);
}

}  // namespace

TEST_CASE("polytrope closed forms")
{
    const auto p1 = MicroProfile::polytrope(1.0);
    CHECK(p1.conjugate(2.0) == Approx(1.0).epsilon(1e-14));
    CHECK(p1.outsideTheoremRange());
    const auto p = MicroProfile::polytrope(0.5);
    CHECK(p.conjugate(1.0) == Approx(0.3849001794597505).epsilon(1e-12));
    CHECK(p.phi(0.0) == 0.0);
    CHECK(p.phiPrime(0.0) == 0.0);
    CHECK(p.phi(2.0) == Approx(8.0));
    CHECK_FALSE(p.outsideTheoremRange());
}

TEST_CASE("polytrope rejects bad exponents and negative arguments")
{
    CHECK_THROWS_AS(MicroProfile::polytrope(0.0), DomainError);
    CHECK_THROWS_AS(MicroProfile::polytrope(1.5), DomainError);
    const auto p = MicroProfile::polytrope(0.5);
    CHECK_THROWS_AS(p.phi(-1.0), DomainError);
    CHECK_THROWS_AS(p.conjugate(-1.0), DomainError);
    CHECK_THROWS_AS(p.phiPrimeInverse(-0.1), DomainError);
}

TEST_CASE("micro profile invariants: round trip, convexity, growth")
{
    for (double k : {0.25, 0.5, 0.75}) {
        const auto p = MicroProfile::polytrope(k);
        for (double e = -6; e <= 6; e += 0.5) {
            const double f = std::pow(10.0, e);
            CHECK(p.phiPrimeInverse(p.phiPrime(f)) == Approx(f).epsilon(1e-10));
        }
        for (double a = 0.0; a < 5.0; a += 0.37) {
            const double b = a + 0.9;
            CHECK(p.phi(0.5 * (a + b)) < 0.5 * (p.phi(a) + p.phi(b)));
        }
        CHECK(p.phi(100.0) >= std::pow(100.0, 1.0 + 1.0 / k) * 0.999);
    }
}

TEST_CASE("legendre transform by maximization agrees with closed forms")
{
    const auto p1 = MicroProfile::polytrope(1.0);
    CHECK(legendreTransform(p1, 0.0) == 0.0);
    CHECK(legendreTransform(p1, 4.0) == Approx(4.0).epsilon(1e-8));
    for (double k : {0.25, 0.5, 0.75})
        for (double lambda : {0.1, 1.0, 7.0}) {
            const auto p = MicroProfile::polytrope(k);
            CHECK(legendreTransform(p, lambda) == Approx(p.conjugate(lambda)).epsilon(1e-8));
        }
    CHECK(legendreTransform(squareTable(), 2.0) == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("legendre transform fails without superlinear growth")
{
    CHECK_THROWS_AS(legendreTransform([](double x) { return 0.5 * x; }, 1.0), ConvergenceError);
}

TEST_CASE("tabulated profile validation and evaluation")
{
    const auto t = squareTable();
    CHECK(t.kind() == MicroProfile::Kind::tabulated);
    CHECK(t.exponent() == Approx(1.0));
    CHECK(t.phi(1.5) == Approx(2.25).epsilon(1e-12));
    CHECK(t.phiPrimeInverse(3.0) == Approx(1.5).epsilon(1e-12));
    CHECK(t.phiSecond(1.0) == Approx(2.0));
    CHECK_THROWS_AS(MicroProfile::tabulated({0.0, 1.0, 2.0}, {0.0, 2.0, 2.0}), DomainError);
    CHECK_THROWS_AS(MicroProfile::tabulated({0.1, 1.0, 2.0}, {0.0, 2.0, 3.0}), DomainError);
}

TEST_CASE("reduction identities for k = 1")
{
    const ReducedProfile psi(MicroProfile::polytrope(1.0));
    CHECK(psi.n() == 2.0);
    CHECK(psi.psiPrimeInverse(2.0) == Approx(2.0 * kPi).epsilon(1e-14));
    CHECK(psi.psiPrimeInverse(0.0) == 0.0);
    CHECK(psi.conjugate(0.0) == 0.0);
    CHECK(psi.psi(1.0) == Approx(2.0 / 3.0 * std::sqrt(2.0 / kPi)).epsilon(1e-10));
    CHECK(velocityIntegral(psi.micro(), 2.0) == Approx(2.0 * kPi).epsilon(1e-10));
}

TEST_CASE("reduction identity matches the velocity integral at 20 log-spaced cutoffs")
{
    for (double k : {0.25, 0.5, 0.75}) {
        const ReducedProfile psi(MicroProfile::polytrope(k));
        for (int i = 0; i < 20; ++i) {
            const double lambda = std::pow(10.0, -2.0 + 4.0 * i / 19.0);
            CHECK(psi.psiPrimeInverse(lambda) == Approx(velocityIntegral(psi.micro(), lambda)).epsilon(1e-6));
        }
    }
}

TEST_CASE("reduced profile invariants")
{
    for (double k : {0.25, 0.5, 0.75}) {
        const ReducedProfile psi(MicroProfile::polytrope(k));
        CHECK(psi.psi(0.0) == 0.0);
        CHECK(psi.psiPrime(0.0) == 0.0);
        for (double e = -4; e <= 4; e += 0.5) {
            const double rho = std::pow(10.0, e);
            CHECK(psi.psiPrimeInverse(psi.psiPrime(rho)) == Approx(rho).epsilon(1e-8));
        }
        for (double a = 0.0; a < 4.0; a += 0.5)
            CHECK(psi.psi(a + 0.25) < 0.5 * (psi.psi(a) + psi.psi(a + 0.5)));

        // growth exponent 1 + 1/n from a log-log fit on [10, 1e4]
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const int m = 13;
        for (int i = 0; i < m; ++i) {
            const double x = std::log(10.0) * (1.0 + 3.0 * i / (m - 1));
            const double y = std::log(psi.psi(std::exp(x)));
            sx += x, sy += y, sxx += x * x, sxy += x * y;
        }
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        CHECK(slope == Approx(1.0 + 1.0 / psi.n()).epsilon(1e-3));
    }
}

TEST_CASE("duality round trip for the reduced profile")
{
    for (double k : {0.25, 0.5, 0.75}) {
        const ReducedProfile psi(MicroProfile::polytrope(k));
        for (double lambda : {0.05, 0.5, 2.0, 10.0})
            CHECK(legendreTransform(psi, lambda) == Approx(psi.conjugate(lambda)).epsilon(1e-5));
    }
    // numeric path for tabulated micro profiles
    const ReducedProfile tab(squareTable());
    const ReducedProfile exact(MicroProfile::polytrope(1.0));
    CHECK(tab.conjugate(1.5) == Approx(exact.conjugate(1.5)).epsilon(1e-6));
}

TEST_CASE("optimal velocity profile has the right mass and cost")
{
    const ReducedProfile psi1(MicroProfile::polytrope(1.0));
    const auto zero = optimalVelocityProfile(psi1, 0.0);
    CHECK(zero.mass() == 0.0);
    CHECK(zero.cost() == 0.0);
    CHECK(zero(0.3) == 0.0);

    const auto g = optimalVelocityProfile(psi1, 1.0);
    CHECK(g.mass() == Approx(1.0).epsilon(1e-6));
    CHECK(g.cost() == Approx(psi1.psi(1.0)).epsilon(1e-6));

    const ReducedProfile psi(MicroProfile::polytrope(0.5));
    for (double rho : {0.01, 0.3, 4.0}) {
        const auto h = optimalVelocityProfile(psi, rho);
        CHECK(h.mass() == Approx(rho).epsilon(1e-6));
        CHECK(h.cost() == Approx(psi.psi(rho)).epsilon(1e-6));
    }
}

TEST_CASE("optimal velocity profile beats randomized competitors of equal mass")
{
    const ReducedProfile psi(MicroProfile::polytrope(0.5));
    const double rho = 0.8;
    const auto opt = optimalVelocityProfile(psi, rho);
    const double best = opt.cost();
    const auto& micro = psi.micro();

    // competitors on a radial speed grid: optimum plus a random smooth perturbation, renormalized
    const int nv = 400;
    const double vmax = 2.0 * opt.maxSpeed();
    const double h = vmax / nv;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    auto cost = [&](const std::vector<double>& g) {
        double m = 0, c = 0;
        for (int i = 0; i < nv; ++i) {
            const double v = (i + 0.5) * h;
            m += kTwoPi * v * h * g[i];
            c += kTwoPi * v * h * (0.5 * v * v * g[i] + micro.phi(g[i]));
        }
        return std::pair{m, c};
    };
    std::vector<double> base(nv);
    for (int i = 0; i < nv; ++i)
        base[i] = opt((i + 0.5) * h);
    const auto [mBase, cBase] = cost(base);
    CHECK(cBase == Approx(best).epsilon(1e-3));

    for (int trial = 0; trial < 50; ++trial) {
        const double a = coef(rng), b = coef(rng), c = coef(rng);
        std::vector<double> g(nv);
        for (int i = 0; i < nv; ++i) {
            const double s = (i + 0.5) * h / vmax;
            g[i] = std::max(0.0, base[i] + 0.2 * (a + b * std::cos(kPi * s) + c * std::sin(3 * kPi * s)) * base[0]);
        }
        const auto [m, cg] = cost(g);
        if (m <= 0.0)
            continue;
        for (auto& x : g)
            x *= mBase / m;
        CHECK(cost(g).second >= cBase);
    }
}

TEST_CASE("derivative of the inverse of Psi'")
{
    CHECK(psiInverseDerivative(MicroProfile::polytrope(1.0), 1.0) == Approx(kPi).epsilon(1e-8));
    const auto p = MicroProfile::polytrope(0.5);
    const ReducedProfile psi(p);
    const double h = 1e-4;
    const double fd = (psi.psiPrimeInverse(1.0 + h) - psi.psiPrimeInverse(1.0 - h)) / (2 * h);
    CHECK(psiInverseDerivative(p, 1.0) == Approx(fd).epsilon(1e-4));
    // (Psi')^-1 = 2 pi c lambda^(k+1), so the derivative vanishes like lambda^k
    CHECK(psiInverseDerivative(p, 1e-8) == Approx(kTwoPi * 0.3849001794597505 * 1.5 * 1e-4).epsilon(1e-8));
    CHECK_THROWS_AS(psiInverseDerivative(p, 0.0), DomainError);
}

#include "flatvp/variational.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "flatvp/csv.hpp"

namespace flatvp {

namespace {

std::vector<double> sumPotentials(std::span<const double> a, std::span<const double> b)
{
    std::vector<double> out(a.begin(), a.end());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] += b[i];
    return out;
}

// D(rho, rho_ext) with rho_ext entering only through its potential at the nodes
double externalPairing(const RadialDensity& rho, std::span<const double> externalPotential)
{
    return coulombEnergy(rho, externalPotential);
}

}  // namespace

nlohmann::json EnergyReport::toJson() const
{
    return {{"E_kin", kinetic},
            {"casimir", casimir},
            {"psi_integral", psiIntegral},
            {"E_pot_self", selfPotential},
            {"E_pot_ext", externalPotential},
            {"E_C", total},
            {"E_C_reduced", reduced}};
}

EnergyDensities energyDensities(const RadialDensity& rho, const ReducedProfile& profile)
{
    const std::size_t n = rho.size();
    EnergyDensities d{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
        if (rho[i] == 0.0)
            continue;
        const VelocityProfile g(profile, rho[i]);
        d.kinetic[i] = g.kineticPart();
        d.casimir[i] = g.casimirPart();
        d.psi[i] = profile.psi(rho[i]);
    }
    return d;
}

EnergyReport energyReport(const RadialDensity& rho, const ReducedProfile& profile, const ExternalDensity& external)
{
    EnergyReport e;
    const auto d = energyDensities(rho, profile);
    const auto& g = rho.grid();
    for (std::size_t i = 0; i < rho.size(); ++i) {
        e.kinetic += g.weight(i) * d.kinetic[i];
        e.casimir += g.weight(i) * d.casimir[i];
        e.psiIntegral += g.weight(i) * d.psi[i];
    }
    e.selfPotential = -coulombEnergy(rho, rho);
    e.externalPotential = external.kind() == ExternalDensity::Kind::none
                              ? 0.0
                              : -2.0 * externalPairing(rho, external.potentialOn(g));
    e.total = e.kinetic + e.casimir + e.selfPotential + e.externalPotential;
    e.reduced = e.psiIntegral + e.selfPotential + e.externalPotential;
    return e;
}

double reducedEnergy(const RadialDensity& rho, const ReducedProfile& profile, std::span<const double> externalPotential)
{
    double psiSum = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (rho[i] > 0.0)
            psiSum += rho.grid().weight(i) * profile.psi(rho[i]);
    return psiSum - coulombEnergy(rho, rho) - 2.0 * externalPairing(rho, externalPotential);
}

double reducedEnergy(const RadialDensity& rho, const ReducedProfile& profile, const ExternalDensity& external)
{
    return reducedEnergy(rho, profile, external.potentialOn(rho.grid()));
}

// ---------------------------------------------------------------------------
// Euler-Lagrange solver

int SolverDiagnostics::sweepsToReach(double tol) const
{
    for (std::size_t i = 0; i < residuals.size(); ++i)
        if (residuals[i] < tol)
            return int(i);
    return -1;
}

std::vector<double> SteadyState::totalPotential() const
{
    return sumPotentials(selfPotential.values, externalPotential);
}

std::vector<double> eulerLagrangeDensity(const ReducedProfile& profile, std::span<const double> totalPotential, double E0)
{
    std::vector<double> rho(totalPotential.size());
    for (std::size_t i = 0; i < rho.size(); ++i)
        rho[i] = profile.psiPrimeInverse(E0 - totalPotential[i]);
    return rho;
}

double solveMultiplier(const ReducedProfile& profile, const RadialGrid& grid, std::span<const double> totalPotential,
                       double mass, double massTol)
{
    auto massAt = [&](double E0) {
        double m = 0.0;
        for (std::size_t i = 0; i < totalPotential.size(); ++i)
            m += grid.weight(i) * profile.psiPrimeInverse(E0 - totalPotential[i]);
        return m;
    };
    const double minU = *std::min_element(totalPotential.begin(), totalPotential.end());
    if (!(minU < 0.0))
        throw BracketFailure("E0 bracket is empty: the total potential is nowhere negative");
    double lo = minU - std::fabs(minU), hi = 0.0;
    const double reach = massAt(hi);
    if (reach < mass)
        throw BracketFailure("mass map reaches only " + std::to_string(reach) + " < M = " + std::to_string(mass) +
                             " at E0 = 0; the grid is too small for this state");
    // bisect down to the resolution of E0; the tolerance is a guarantee on the result
    double best = hi, bestErr = std::fabs(reach - mass);
    for (int it = 0; it < 400 && bestErr > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi))
            break;
        const double m = massAt(mid);
        const double err = std::fabs(m - mass);
        if (err < bestErr) {
            best = mid;
            bestErr = err;
        }
        if (m < mass)
            lo = mid;
        else
            hi = mid;
    }
    if (bestErr > massTol)
        throw BracketFailure("E0 bisection stalled with mass error " + std::to_string(bestErr));
    return best;
}

ResidualReport elResidualReport(const RadialDensity& rho, const ReducedProfile& profile,
                                std::span<const double> totalPotential, double E0)
{
    ResidualReport r;
    r.complementaryExcess = -std::numeric_limits<double>::infinity();
    const auto target = eulerLagrangeDensity(profile, totalPotential, E0);
    double diff = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        diff = std::max(diff, std::fabs(rho[i] - target[i]));
        if (rho[i] == 0.0)
            r.complementaryExcess = std::max(r.complementaryExcess, E0 - totalPotential[i]);
    }
    r.residual = diff / (1.0 + rho[0]);
    return r;
}

ResidualReport elResidualReport(const SteadyState& state)
{
    return elResidualReport(state.rho, state.profile, state.totalPotential(), state.E0);
}

double elResidual(const SteadyState& state)
{
    return elResidualReport(state).residual;
}

namespace {

SteadyState assembleState(const ReducedProfile& profile, double mass, const ExternalDensity& external,
                          RadialDensity rho, std::vector<double> uext, double E0, SolverDiagnostics diag)
{
    const auto& op = rho.grid().potentialOperator();
    RadialPotential self{rho.gridPtr(), op.energyGradient(rho.values()), op.force(rho.values())};
    diag.supportAtBoundary = rho[rho.size() - 1] > 0.0;
    diag.supportCells = std::size_t(std::count_if(rho.values().begin(), rho.values().end(), [](double v) { return v > 0.0; }));
    const double support = rho.supportRadius();
    auto energies = energyReport(rho, profile, external);
    return SteadyState{profile, mass, std::move(rho), std::move(self), std::move(uext), external, E0,
                       support, energies, std::move(diag)};
}

// Newton correction for rho - T(rho) = 0 together with sum_i w_i rho_i = M.
// Outside the support T has zero derivative, so those entries are fixed directly
// and only the active block is solved.
std::vector<double> newtonStep(const ReducedProfile& profile, const RadialGrid& grid, std::span<const double> rho,
                               std::span<const double> target, std::span<const double> u, double E0)
{
    const std::size_t n = rho.size();
    const auto& op = grid.potentialOperator();
    std::vector<double> step(n), slope(n, 0.0);
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n; ++i) {
        step[i] = target[i] - rho[i];
        slope[i] = profile.psiPrimeInverseDerivative(E0 - u[i]);
        if (slope[i] > 0.0)
            active.push_back(i);
    }
    const std::size_t m = active.size();
    if (m == 0)
        return step;
    std::vector<bool> isActive(n, false);
    for (auto i : active)
        isActive[i] = true;

    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(Eigen::Index(m + 1), Eigen::Index(m + 1));
    Eigen::VectorXd rhs(Eigen::Index(m + 1));
    double massRhs = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        if (!isActive[j])
            massRhs -= grid.weight(j) * step[j];
    for (std::size_t a = 0; a < m; ++a) {
        const std::size_t i = active[a];
        double known = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (!isActive[j])
                known += op.gradientEntry(i, j) * step[j];
        for (std::size_t b = 0; b < m; ++b)
            jac(Eigen::Index(a), Eigen::Index(b)) = slope[i] * op.gradientEntry(i, active[b]);
        jac(Eigen::Index(a), Eigen::Index(a)) += 1.0;
        jac(Eigen::Index(a), Eigen::Index(m)) = -slope[i];
        rhs(Eigen::Index(a)) = step[i] - slope[i] * known;
        jac(Eigen::Index(m), Eigen::Index(a)) = grid.weight(i);
    }
    rhs(Eigen::Index(m)) = massRhs;
    const Eigen::VectorXd sol = jac.partialPivLu().solve(rhs);
    for (std::size_t a = 0; a < m; ++a)
        step[active[a]] = sol(Eigen::Index(a));
    return step;
}

}  // namespace

RadialDensity bestUniformDisk(const ReducedProfile& profile, double mass, std::span<const double> externalPotential,
                              GridPtr grid)
{
    auto diskOf = [&](double radius) {
        const auto d = RadialDensity::disk(grid, 1.0, radius);
        return d.scaled(mass / d.mass());
    };
    const double lo = std::log(4.0 * grid->rMin()), hi = std::log(0.9 * grid->rMax());
    if (!(lo < hi))
        throw DomainError("grid too coarse to hold a starting disk");
    boost::uintmax_t maxIter = 200;
    const auto [logR, energy] = boost::math::tools::brent_find_minima(
        [&](double t) { return reducedEnergy(diskOf(std::exp(t)), profile, externalPotential); }, lo, hi, 30, maxIter);
    (void)energy;
    return diskOf(std::exp(logR));
}

SteadyState solveSteadyState(const ReducedProfile& profile, double mass, const ExternalDensity& external,
                             GridPtr grid, const SolverOptions& options)
{
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw InvalidMass("steady state needs a positive finite mass, got " + std::to_string(mass));
    if (!(options.damping > 0.0 && options.damping <= 1.0))
        throw DomainError("solver damping must lie in (0,1]");
    if (!(options.tol > 0.0) || options.maxIter < 1)
        throw DomainError("solver needs tol > 0 and max_iter >= 1");

    const auto& op = grid->potentialOperator();
    const auto uext = external.potentialOn(*grid);

    std::vector<double> rho;
    if (options.initial) {
        if (!options.initial->grid().sameAs(*grid) || !(options.initial->mass() > 0.0))
            throw DomainError("initial density must live on the solver grid and have positive mass");
        rho.assign(options.initial->values().begin(), options.initial->values().end());
        for (double& v : rho)
            v *= mass / options.initial->mass();
    } else {
        const auto disk = bestUniformDisk(profile, mass, uext, grid);
        rho.assign(disk.values().begin(), disk.values().end());
    }

    struct Sweep {
        std::vector<double> u, target;
        double E0, residual;
    };
    auto evaluate = [&](const std::vector<double>& r) {
        Sweep sw;
        sw.u = sumPotentials(op.energyGradient(r), uext);
        sw.E0 = solveMultiplier(profile, *grid, sw.u, mass, options.massTol);
        sw.target = eulerLagrangeDensity(profile, sw.u, sw.E0);
        double diff = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i)
            diff = std::max(diff, std::fabs(r[i] - sw.target[i]));
        sw.residual = diff / (1.0 + r[0]);
        return sw;
    };

    SolverDiagnostics diag;
    double omega = options.damping;
    double previous = std::numeric_limits<double>::infinity();
    Sweep current = evaluate(rho);
    for (int sweep = 0;; ++sweep) {
        diag.residuals.push_back(current.residual);
        diag.dampings.push_back(omega);
        diag.iterations = sweep;
        if (options.onSweep)
            options.onSweep(sweep, current.residual, omega, current.E0, rho);
        if (current.residual < options.tol) {
            diag.converged = true;
            return assembleState(profile, mass, external, RadialDensity(grid, std::move(rho)), uext, current.E0,
                                 std::move(diag));
        }
        if (sweep >= options.maxIter)
            throw NoConvergence("steady-state iteration stopped after " + std::to_string(sweep) +
                                    " sweeps with residual " + std::to_string(current.residual),
                                std::move(diag));

        if (options.method == SolverMethod::picard) {
            if (current.residual > previous)
                omega = std::max(0.5 * omega, options.minDamping);
            previous = current.residual;
            for (std::size_t i = 0; i < rho.size(); ++i)
                rho[i] = (1.0 - omega) * rho[i] + omega * current.target[i];
            current = evaluate(rho);
            continue;
        }

        // Newton: backtrack (halving w) until the residual falls, then let w grow again
        const auto step = newtonStep(profile, *grid, rho, current.target, current.u, current.E0);
        bool firstTry = true;
        for (;;) {
            std::vector<double> trial(rho.size());
            double m = 0.0;
            for (std::size_t i = 0; i < rho.size(); ++i) {
                trial[i] = std::max(0.0, rho[i] + omega * step[i]);
                m += grid->weight(i) * trial[i];
            }
            std::optional<Sweep> next;
            if (m > 0.0) {
                for (double& v : trial)
                    v *= mass / m;
                try {
                    next = evaluate(trial);
                } catch (const BracketFailure&) {
                }
            }
            const bool accept = next && next->residual < current.residual;
            if (accept || omega <= options.minDamping) {
                if (!next)
                    throw BracketFailure("Newton step left the E0 bracket at minimum damping");
                rho = std::move(trial);
                current = std::move(*next);
                if (accept && firstTry)
                    omega = std::min(1.0, 2.0 * omega);
                break;
            }
            omega = std::max(0.5 * omega, options.minDamping);
            firstTry = false;
        }
    }
}

std::vector<double> reconstructedDensity(const SteadyState& state)
{
    const auto u = state.totalPotential();
    const auto& micro = state.profile.micro();
    std::vector<double> out(u.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(u.size()); ++i) {
        const double lambda = state.E0 - u[i];
        if (!(lambda > 0.0))
            continue;
        out[i] = kTwoPi * math::integrateEndpointSingular(
                              [&](double v) { return micro.phiPrimeInverse(std::max(0.0, lambda - 0.5 * v * v)) * v; },
                              0.0, std::sqrt(2.0 * lambda), 1e-12);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Minimality probe

double ProbeReport::minGain() const
{
    return gains.empty() ? 0.0 : *std::min_element(gains.begin(), gains.end());
}

double ProbeReport::maxAbsSlope() const
{
    double m = 0.0;
    for (double s : slopes)
        m = std::max(m, std::fabs(s));
    return m;
}

ProbeReport minimalityProbe(const SteadyState& state, const ProbeOptions& options)
{
    const auto& grid = state.rho.grid();
    const auto& rho0 = state.rho;
    const double cut = options.supportFraction * state.supportRadius;
    const double e0 = reducedEnergy(rho0, state.profile, state.externalPotential);

    ProbeReport report;
    report.reducedEnergy = e0;
    report.trials = options.trials;
    report.gains.assign(options.trials, 0.0);
    report.lambdas.assign(options.trials, 0.0);
    report.slopes.assign(options.trials, 0.0);
    report.curvatures.assign(options.trials, 0.0);
    std::vector<std::optional<ProbeViolation>> found(options.trials);

    auto energyAlong = [&](const std::vector<double>& phi, double lambda) {
        std::vector<double> v(rho0.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = std::max(0.0, rho0[i] + lambda * phi[i]);
        return reducedEnergy(RadialDensity(rho0.gridPtr(), std::move(v)), state.profile, state.externalPotential);
    };

#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < options.trials; ++t) {
        std::seed_seq seq{std::uint64_t(options.seed), std::uint64_t(t)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        double a[4];
        for (double& c : a)
            c = normal(rng);

        // phi = (1 - (r/cut)^2)_+^3 (a0 + sum_m a_m cos(m pi r / cut)) with a0 fixing zero mass
        std::vector<double> envelope(grid.size(), 0.0), wave(grid.size(), 0.0);
        double we = 0.0, wq = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = grid.node(i) / cut;
            if (x >= 1.0)
                continue;
            envelope[i] = std::pow(1.0 - x * x, 3);
            for (int m = 1; m <= 3; ++m)
                wave[i] += a[m] * std::cos(m * kPi * x);
            we += grid.weight(i) * envelope[i];
            wq += grid.weight(i) * envelope[i] * wave[i];
        }
        const double a0 = -wq / we;
        std::vector<double> phi(grid.size());
        double peak = 0.0;
        for (std::size_t i = 0; i < phi.size(); ++i) {
            phi[i] = envelope[i] * (a0 + wave[i]);
            peak = std::max(peak, std::fabs(phi[i]));
        }
        for (double& p : phi)
            p *= rho0[0] / peak;

        // largest steps keeping rho0 + lambda phi (and rho0 - lambda phi) nonnegative
        double forward = std::numeric_limits<double>::infinity(), both = forward;
        for (std::size_t i = 0; i < phi.size(); ++i) {
            if (phi[i] == 0.0)
                continue;
            const double limit = rho0[i] / std::fabs(phi[i]);
            both = std::min(both, limit);
            if (phi[i] < 0.0)
                forward = std::min(forward, limit);
        }
        const double lambda = uniform(rng) * std::min(options.lambdaMax, forward);
        const double gain = energyAlong(phi, lambda) - e0;
        const double h = 1e-2 * std::min(options.lambdaMax, 0.5 * both);
        const double p1 = energyAlong(phi, h), m1 = energyAlong(phi, -h);
        const double p2 = energyAlong(phi, 2.0 * h), m2 = energyAlong(phi, -2.0 * h);

        report.lambdas[t] = lambda;
        report.gains[t] = gain;
        report.slopes[t] = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
        report.curvatures[t] = (-p2 + 16.0 * p1 - 30.0 * e0 + 16.0 * m1 - m2) / (12.0 * h * h);
        if (gain < -options.relTol * std::fabs(e0))
            found[t] = ProbeViolation{t, lambda, gain, phi};
    }
    for (auto& v : found)
        if (v)
            report.violations.push_back(std::move(*v));
    return report;
}

// ---------------------------------------------------------------------------
// Coercivity

CoercivityReport coercivityCheck(const RadialDensity& rho, const ReducedProfile& profile,
                                 const ExternalDensity& external, double n, std::optional<double> constant)
{
    if (!(n > 1.0))
        throw DomainError("coercivity check needs n > 1");
    CoercivityReport r;
    r.n = n;
    const double p = 1.0 + 1.0 / n;
    double growth = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (rho[i] > 0.0) {
            // skip values so small that Psi or the power underflows
            const double num = profile.psi(rho[i]), den = std::pow(rho[i], p);
            if (std::isnormal(num) && std::isnormal(den))
                growth = std::min(growth, num / den);
        }
    const auto uext = external.potentialOn(rho.grid());
    r.reducedEnergy = reducedEnergy(rho, profile, uext);
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (rho[i] > 0.0)
            r.psiIntegral += rho.grid().weight(i) * profile.psi(rho[i]);

    if (constant) {
        r.constant = *constant;
    } else if (std::isfinite(growth)) {
        const double m = rho.mass();
        r.selfPart = 0.5 * kHlsConstant * std::pow(m, (3.0 - n) / 2.0) * std::pow(growth, -n / 2.0);
        if (external.kind() != ExternalDensity::Kind::none) {
            const double reach = 1e4 * std::max(1.0, rho.grid().rMax());
            const double extNorm = lpNorm(external.sampled(RadialGrid::geometric(2048, reach, 1e-6 * reach)), 4.0 / 3.0);
            r.externalPart = kHlsConstant * extNorm * std::pow(m, (3.0 - n) / 4.0) * std::pow(growth, -n / 4.0);
        }
        r.constant = r.selfPart + r.externalPart;
    }
    const double c = r.constant, x = r.psiIntegral;
    r.bound = x - c * std::pow(x, n / 2.0) - c;
    r.margin = r.reducedEnergy - r.bound;
    if (n < 2.0 && c > 0.0) {
        const double xs = std::pow(0.5 * c * n, 2.0 / (2.0 - n));
        r.globalLowerBound = xs - c * std::pow(xs, n / 2.0) - c;
    } else if (c > 0.0) {
        r.globalLowerBound = -std::numeric_limits<double>::infinity();
    } else {
        r.globalLowerBound = -c;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Corpus

std::vector<RadialDensity> feasibilityCorpus(GridPtr grid, std::size_t count, std::uint64_t seed)
{
    struct Component {
        int kind;  // 0 gaussian, 1 disk, 2 annulus
        double weight, a, b;
        double tail(double r) const
        {
            switch (kind) {
            case 0: return std::exp(-0.5 * r * r / (a * a));
            case 1: return r >= a ? 0.0 : 1.0 - r * r / (a * a);
            default:
                if (r <= a)
                    return 1.0;
                return r >= b ? 0.0 : (b * b - r * r) / (b * b - a * a);
            }
        }
    };
    std::vector<RadialDensity> corpus;
    corpus.reserve(count);
    for (std::size_t c = 0; c < count; ++c) {
        std::seed_seq seq{std::uint64_t(seed), std::uint64_t(c)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double mass = 0.1 * std::pow(100.0, u(rng));
        const int parts = 1 + int(3.0 * u(rng));
        std::vector<Component> comps;
        for (int p = 0; p < parts; ++p) {
            Component comp{int(3.0 * u(rng)) % 3, 0.2 + 0.8 * u(rng), 0.0, 0.0};
            if (comp.kind == 0)
                comp.a = 0.2 + 1.3 * u(rng);
            else if (comp.kind == 1)
                comp.a = 0.3 + 2.7 * u(rng);
            else {
                comp.a = 0.2 + 1.8 * u(rng);
                comp.b = comp.a + 0.1 + 1.4 * u(rng);
            }
            comps.push_back(comp);
        }
        auto rho = RadialDensity::fromTailMass(grid, [&comps](double r) {
            double t = 0.0;
            for (const auto& comp : comps)
                t += comp.weight * comp.tail(r);
            return t;
        });
        corpus.push_back(rho.scaled(mass / rho.mass()));
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// Persistence

nlohmann::json profileToJson(const MicroProfile& micro)
{
    if (micro.kind() == MicroProfile::Kind::polytrope)
        return {{"kind", "polytrope"}, {"k", micro.exponent()}};
    const auto* t = micro.table();
    return {{"kind", "tabulated"},
            {"k", micro.exponent()},
            {"f", std::vector<double>(t->knots().begin(), t->knots().end())},
            {"phi_prime", std::vector<double>(t->values().begin(), t->values().end())}};
}

MicroProfile profileFromJson(const nlohmann::json& j)
{
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "polytrope")
        return MicroProfile::polytrope(j.at("k").get<double>());
    if (kind == "tabulated") {
        if (j.contains("path"))
            return MicroProfile::fromCsv(j.at("path").get<std::string>());
        return MicroProfile::tabulated(j.at("f").get<std::vector<double>>(), j.at("phi_prime").get<std::vector<double>>());
    }
    throw DomainError("unknown profile kind '" + kind + "'");
}

void saveSteadyState(const SteadyState& state, const std::filesystem::path& jsonPath,
                     const std::filesystem::path& csvPath, const std::string& configHash)
{
    const auto total = state.totalPotential();
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < state.rho.size(); ++i)
        rows.push_back({state.rho.grid().node(i), state.rho[i], state.selfPotential.values[i],
                        state.externalPotential[i], total[i]});
    csv::write(csvPath, {"r", "rho", "U_self", "U_ext", "U_total"}, rows,
               configHash.empty() ? std::string() : "config_hash: " + configHash);

    nlohmann::json j;
    if (!configHash.empty())
        j["config_hash"] = configHash;
    j["profile"] = profileToJson(state.profile.micro());
    j["M"] = state.mass;
    j["E0"] = state.E0;
    j["R0"] = state.supportRadius;
    j["grid"] = state.rho.grid().toJson();
    j["external"] = state.external.toJson();
    j["energies"] = state.energies.toJson();
    j["residual"] = elResidual(state);
    j["iterations"] = state.diagnostics.iterations;
    j["converged"] = state.diagnostics.converged;
    j["density_csv"] = csvPath.filename().string();
    std::ofstream out(jsonPath);
    if (!out)
        throw std::runtime_error("cannot write " + jsonPath.string());
    out << j.dump(2) << '\n';
}

SteadyState loadSteadyState(const std::filesystem::path& jsonPath)
{
    std::ifstream in(jsonPath);
    if (!in)
        throw std::runtime_error("cannot open " + jsonPath.string());
    const auto j = nlohmann::json::parse(in);
    const ReducedProfile profile(profileFromJson(j.at("profile")));
    const auto grid = RadialGrid::fromJson(j.at("grid"));
    const auto external = ExternalDensity::fromJson(j.at("external"));
    const auto csvPath = jsonPath.parent_path() / j.at("density_csv").get<std::string>();
    const auto table = csv::read(csvPath);
    auto rho = table.columnValues("rho");
    if (rho.size() != grid->size())
        throw DomainError("steady-state CSV does not match the grid in " + jsonPath.string());
    SolverDiagnostics diag;
    diag.iterations = j.value("iterations", 0);
    diag.converged = j.value("converged", false);
    return assembleState(profile, j.at("M").get<double>(), external, RadialDensity(grid, std::move(rho)),
                         external.potentialOn(*grid), j.at("E0").get<double>(), std::move(diag));
}

}  // namespace flatvp

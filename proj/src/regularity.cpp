#include "flatvp/regularity.hpp"

#include <algorithm>
#include <cmath>

namespace flatvp {

std::string verdictName(Verdict v)
{
    switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::skipped: return "SKIPPED";
    }
    return "SKIPPED";
}

// ---------------------------------------------------------------------------

double l4nNorm(const RadialDensity& rho, double n)
{
    if (!(n > 0.0))
        throw DomainError("l4n_norm needs n > 0");
    return lpNorm(rho, std::max(1.0, 4.0 / n));
}

L4nReport l4nNorm(const SteadyState& state)
{
    L4nReport r;
    r.n = state.profile.n();
    r.exponent = 4.0 / r.n;
    r.norm = l4nNorm(state.rho, r.n);
    double powered = 0.0;
    for (std::size_t i = 0; i < state.rho.size(); ++i) {
        if (state.rho[i] <= 0.0)
            continue;
        const double w = state.rho.grid().weight(i);
        powered += w * std::pow(state.rho[i], r.exponent);
        r.psiPrimeQuartic += w * std::pow(state.profile.psiPrime(state.rho[i]), 4);
    }
    r.ratio = r.psiPrimeQuartic > 0.0 ? powered / r.psiPrimeQuartic : 0.0;
    return r;
}

// ---------------------------------------------------------------------------

GridPtr refineGrid(const RadialGrid& grid, int factor)
{
    if (factor < 1)
        throw DomainError("refinement factor must be positive");
    const std::size_t n = grid.size() * std::size_t(factor);
    switch (grid.mode()) {
    case GridMode::uniform: return RadialGrid::uniform(n, grid.rMax());
    case GridMode::geometric: return RadialGrid::geometric(n, grid.rMax(), grid.rMin() / factor);
    case GridMode::custom: break;
    }
    const auto e = grid.edges();
    std::vector<double> edges{0.0};
    for (std::size_t j = 0; j + 1 < e.size(); ++j)
        for (int s = 1; s <= factor; ++s)
            edges.push_back(s == factor ? e[j + 1] : e[j] + (e[j + 1] - e[j]) * s / factor);
    return RadialGrid::fromEdges(std::move(edges));
}

RadialDensity refineDensity(const RadialDensity& rho, int factor)
{
    if (rho.grid().mode() == GridMode::geometric && factor > 1) {
        // geometric refinement does not nest; rebin conservatively
        std::vector<double> edges(rho.grid().edges().begin(), rho.grid().edges().end());
        const auto fine = refineGrid(rho.grid(), factor);
        std::vector<double> values(fine->size(), 0.0);
        const auto fe = fine->edges();
        std::size_t j = 0;
        for (std::size_t i = 0; i < fine->size(); ++i) {
            double a = fe[i];
            const double b = fe[i + 1];
            double mass = 0.0;
            while (a < b && j < rho.size()) {
                const double hi = std::min(b, edges[j + 1]);
                mass += rho[j] * kPi * (hi - a) * (hi + a);
                a = hi;
                if (a >= edges[j + 1])
                    ++j;
            }
            values[i] = mass / fine->weight(i);
        }
        return RadialDensity(fine, std::move(values));
    }
    const auto fine = refineGrid(rho.grid(), factor);
    std::vector<double> values(fine->size());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = rho[i / std::size_t(factor)];
    return RadialDensity(fine, std::move(values));
}

std::vector<double> finiteDifference(const RadialGrid& grid, std::span<const double> f)
{
    const auto x = grid.nodes();
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2)
        return d;
    d[0] = (f[1] - f[0]) / (x[1] - x[0]);
    d[n - 1] = (f[n - 1] - f[n - 2]) / (x[n - 1] - x[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h1 = x[i] - x[i - 1], h2 = x[i + 1] - x[i];
        d[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * (h1 + h2)) * f[i + 1];
    }
    return d;
}

nlohmann::json SmoothingReport::toJson() const
{
    return {{"p", p},
            {"sizes", sizes},
            {"density_norms", densityNorms},
            {"derivative_norms", derivativeNorms},
            {"second_derivative_norms", secondNorms},
            {"derivative_change", derivativeChange},
            {"second_change", secondChange},
            {"verdict", verdictName(verdict)}};
}

namespace {

SmoothingReport smoothingAcross(const std::function<RadialDensity(int)>& densityAt, double p, double threshold)
{
    if (!(p >= 1.0))
        throw DomainError("smoothing check needs p >= 1");
    SmoothingReport r;
    r.p = p;
    for (int factor : {1, 2, 4}) {
        const auto fine = densityAt(factor);
        if (fine.mass() == 0.0) {
            r.verdict = Verdict::pass;
            return r;
        }
        const auto& g = fine.grid();
        const auto u = g.potentialOperator().potential(fine.values());
        const auto du = finiteDifference(g, u);
        const auto d2u = finiteDifference(g, du);
        r.sizes.push_back(g.size());
        r.densityNorms.push_back(lpNorm(fine, p));
        r.derivativeNorms.push_back(lpNorm(du, g.weights(), p));
        r.secondNorms.push_back(lpNorm(d2u, g.weights(), p));
    }
    r.derivativeChange = std::fabs(r.derivativeNorms[2] - r.derivativeNorms[1]) / r.derivativeNorms[2];
    r.secondChange = std::fabs(r.secondNorms[2] - r.secondNorms[1]) / r.secondNorms[2];
    r.verdict = r.derivativeChange < threshold ? Verdict::pass : Verdict::fail;
    return r;
}

}  // namespace

SmoothingReport smoothingCheck(const RadialDensity& rho, double p, double threshold)
{
    return smoothingAcross([&rho](int factor) { return refineDensity(rho, factor); }, p, threshold);
}

SmoothingReport smoothingCheck(const std::function<double(double)>& tailMass, const RadialGrid& grid, double p,
                               double threshold)
{
    return smoothingAcross(
        [&](int factor) { return RadialDensity::fromTailMass(refineGrid(grid, factor), tailMass); }, p, threshold);
}

// ---------------------------------------------------------------------------

double holderSeminorm(std::span<const double> nodes, std::span<const double> g, double alpha, double rLimit,
                      double minSep, double maxSep)
{
    if (!(alpha > 0.0 && alpha < 1.0 + 1e-12))
        throw DomainError("Hoelder exponent must lie in (0,1]");
    double best = 0.0;
    const std::size_t n = nodes.size();
#pragma omp parallel for reduction(max : best) schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
        if (nodes[i] > rLimit)
            continue;
        for (std::size_t j = std::size_t(i) + 1; j < n && nodes[j] <= rLimit; ++j) {
            const double sep = nodes[j] - nodes[i];
            if (sep < minSep)
                continue;
            if (sep > maxSep)
                break;
            best = std::max(best, std::fabs(g[j] - g[i]) / std::pow(sep, alpha));
        }
    }
    return best;
}

std::vector<double> totalForce(const SteadyState& state)
{
    std::vector<double> f = state.selfPotential.derivative;
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] += state.external.force(state.rho.grid().node(i));
    return f;
}

nlohmann::json HolderReport::toJson() const
{
    return {{"exponent", exponent}, {"sizes", sizes}, {"seminorms", seminorms}, {"growth", growth},
            {"verdict", verdictName(verdict)}};
}

HolderReport holderCheck(const std::vector<SteadyState>& states, double exponent, double threshold)
{
    HolderReport r;
    r.exponent = exponent;
    if (states.empty())
        return r;
    const double r0 = states.front().supportRadius;
    for (const auto& s : states) {
        const auto f = totalForce(s);
        r.sizes.push_back(s.rho.size());
        r.seminorms.push_back(holderSeminorm(s.rho.grid().nodes(), f, exponent, 2.0 * r0, r0 / 100.0, r0));
    }
    r.growth = 0.0;
    for (std::size_t k = 1; k < r.seminorms.size(); ++k)
        r.growth = std::max(r.growth, r.seminorms[k] / r.seminorms[k - 1] - 1.0);
    const bool finite = std::all_of(r.seminorms.begin(), r.seminorms.end(), [](double s) { return std::isfinite(s); });
    r.verdict = (finite && r.growth < threshold && r.seminorms.size() >= 3) ? Verdict::pass : Verdict::fail;
    return r;
}

// ---------------------------------------------------------------------------

nlohmann::json ContinuityReport::toJson() const
{
    nlohmann::json mod = nlohmann::json::array();
    for (const auto& [d, w] : modulus)
        mod.push_back({{"delta", d}, {"omega", w}});
    return {{"spacings", spacings}, {"jumps", jumps}, {"modulus", mod}, {"verdict", verdictName(verdict)}};
}

ContinuityReport continuityCheck(const std::vector<SteadyState>& states)
{
    ContinuityReport r;
    if (states.empty())
        return r;
    const double reach = 2.0 * states.front().supportRadius;
    for (const auto& s : states) {
        const auto u = s.totalPotential();
        const auto& g = s.rho.grid();
        double h = 0.0, jump = 0.0;
        for (std::size_t i = 0; i + 1 < g.size() && g.node(i + 1) <= reach; ++i) {
            h = std::max(h, g.edges()[i + 1] - g.edges()[i]);
            jump = std::max(jump, std::fabs(u[i + 1] - u[i]));
        }
        r.spacings.push_back(h);
        r.jumps.push_back(jump);
    }
    const auto& fine = states.back();
    const auto u = fine.totalPotential();
    const auto x = fine.rho.grid().nodes();
    for (double frac : {1e-3, 1e-2, 1e-1, 1.0}) {
        const double delta = frac * states.front().supportRadius;
        double omega = 0.0;
        for (std::size_t i = 0; i < x.size() && x[i] <= reach; ++i)
            for (std::size_t j = i + 1; j < x.size() && x[j] - x[i] <= delta; ++j)
                omega = std::max(omega, std::fabs(u[j] - u[i]));
        r.modulus.emplace_back(delta, omega);
    }
    bool ok = r.jumps.size() >= 2;
    for (std::size_t k = 1; k < r.jumps.size(); ++k)
        ok = ok && r.jumps[k] <= 1.1 * r.jumps[k - 1] * r.spacings[k] / r.spacings[k - 1];
    r.verdict = ok ? Verdict::pass : Verdict::fail;
    return r;
}

// ---------------------------------------------------------------------------

nlohmann::json FourierReport::toJson() const
{
    return {{"frequencies", frequencies}, {"ratios", ratios}, {"expected", expected},
            {"max_relative_error", maxRelativeError}, {"ill_conditioned", illConditioned},
            {"verdict", verdictName(verdict)}};
}

FourierReport fourierSymbolCheck(const RadialDensity& rho, double xiMin, double xiMax, int samples, double tol)
{
    FourierReport r;
    const double mass = rho.mass();
    if (mass == 0.0)
        return r;
    const auto& g = rho.grid();
    const auto u = g.potentialOperator().potential(rho.values());
    const auto e = g.edges();
    for (int s = 0; s < samples; ++s) {
        const double xi = xiMin * std::pow(xiMax / xiMin, samples > 1 ? double(s) / (samples - 1) : 0.0);
        double fr = 0.0, fu = -kTwoPi * mass / xi;
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double a = e[j], b = e[j + 1];
            fr += rho[j] * kTwoPi / xi * (b * std::cyl_bessel_j(1.0, xi * b) - a * std::cyl_bessel_j(1.0, xi * a));
            const double x = g.node(j);
            fu += g.weight(j) * (u[j] + mass / x) * std::cyl_bessel_j(0.0, xi * x);
        }
        if (std::fabs(fr) < 1e-10 * mass) {
            r.illConditioned = true;
            continue;
        }
        const double expected = -kTwoPi / xi;
        r.frequencies.push_back(xi);
        r.ratios.push_back(fu / fr);
        r.expected.push_back(expected);
        r.maxRelativeError = std::max(r.maxRelativeError, std::fabs(fu / fr - expected) / std::fabs(expected));
    }
    if (r.frequencies.empty())
        r.verdict = Verdict::skipped;
    else
        r.verdict = (r.maxRelativeError <= tol && !r.illConditioned) ? Verdict::pass : Verdict::fail;
    return r;
}

// ---------------------------------------------------------------------------

nlohmann::json RegularityReport::toJson() const
{
    return {{"n", n},
            {"holder_target", holderTarget},
            {"l4n", {{"exponent", l4n.exponent}, {"norm", l4n.norm}, {"psi_prime_quartic", l4n.psiPrimeQuartic},
                     {"ratio", l4n.ratio}}},
            {"max_psi_inverse_derivative", maxPsiInverseDerivative},
            {"smoothing", smoothing.toJson()},
            {"holder", holder.toJson()},
            {"continuity", continuity.toJson()}};
}

RegularityReport regularityReport(const ReducedProfile& profile, double mass, const ExternalDensity& external,
                                  const RadialGrid& grid, const SolverOptions& options)
{
    RegularityReport r;
    r.n = profile.n();
    r.holderTarget = 1.0 - r.n / 2.0;
    std::vector<SteadyState> states;
    for (int factor : {1, 2, 4})
        states.push_back(solveSteadyState(profile, mass, external, refineGrid(grid, factor), options));
    const auto& base = states.front();
    r.l4n = l4nNorm(base);
    const auto u = base.totalPotential();
    const double top = base.E0 - *std::min_element(u.begin(), u.end());
    for (int i = 1; i <= 200; ++i)
        r.maxPsiInverseDerivative = std::max(r.maxPsiInverseDerivative, profile.psiPrimeInverseDerivative(top * i / 200.0));
    r.smoothing = smoothingCheck(base.rho, r.l4n.exponent);
    r.holder = holderCheck(states, r.holderTarget);
    r.continuity = continuityCheck(states);
    return r;
}

}  // namespace flatvp

#include "flatvp/dynamics.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "flatvp/csv.hpp"

namespace flatvp {

namespace {

// uniform double in [0,1) with a fixed bit recipe
double uniform01(std::mt19937_64& rng)
{
    return double(rng() >> 11) * 0x1.0p-53;
}

// cell-in-cell assignment on the nodes: the two nodes bracketing r and the weight of the upper one
struct Cic {
    std::size_t lo, hi;
    double t;
};

Cic cic(std::span<const double> nodes, double r)
{
    const std::size_t n = nodes.size();
    if (r <= nodes.front())
        return {0, 0, 0.0};
    if (r >= nodes.back())
        return {n - 1, n - 1, 0.0};
    auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
    const std::size_t i = std::size_t(it - nodes.begin()) - 1;
    return {i, i + 1, (r - nodes[i]) / (nodes[i + 1] - nodes[i])};
}

double selfEnergy(std::span<const double> rho, const RadialGrid& grid)
{
    const auto u = grid.potentialOperator().energyGradient(rho);
    double e = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j)
        e += 0.5 * grid.weight(j) * rho[j] * u[j];
    return e;
}

void requireGrid(const DynamicsContext& ctx)
{
    if (!ctx.grid)
        throw DomainError("dynamics: context has no grid");
}

void requireStateGrid(const DynamicsContext& ctx, const AnsatzField& field)
{
    requireGrid(ctx);
    if (!ctx.grid->sameAs(*field.grid()))
        throw DomainError("distance: the context grid differs from the steady-state grid");
}

}  // namespace

std::string fieldModeName(FieldMode mode)
{
    return mode == FieldMode::nbody ? "nbody" : "radial";
}

FieldMode fieldModeFromString(const std::string& name)
{
    if (name == "nbody")
        return FieldMode::nbody;
    if (name == "radial" || name == "radial-binned")
        return FieldMode::radialBinned;
    throw DomainError("unknown field mode '" + name + "' (expected nbody or radial)");
}

// ---------------------------------------------------------------------------
// Ensemble

double Ensemble::mass() const
{
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
        m += w[i] * f[i];
    return m;
}

double Ensemble::kineticEnergy() const
{
    double e = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
        e += 0.5 * w[i] * f[i] * (v1[i] * v1[i] + v2[i] * v2[i]);
    return e;
}

double Ensemble::casimir(const MicroProfile& micro) const
{
    double e = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
        e += w[i] * micro.phi(f[i]);
    return e;
}

void Ensemble::writeCsv(const std::filesystem::path& path, const std::string& configHash) const
{
    std::vector<std::vector<double>> rows(size());
    for (std::size_t i = 0; i < size(); ++i)
        rows[i] = {x1[i], x2[i], v1[i], v2[i], f[i], w[i]};
    csv::write(path, {"x1", "x2", "v1", "v2", "f", "w"}, rows,
               configHash.empty() ? std::string() : "config_hash: " + configHash);
}

Ensemble Ensemble::readCsv(const std::filesystem::path& path)
{
    const auto table = csv::read(path);
    Ensemble e;
    e.x1 = table.columnValues("x1");
    e.x2 = table.columnValues("x2");
    e.v1 = table.columnValues("v1");
    e.v2 = table.columnValues("v2");
    e.f = table.columnValues("f");
    e.w = table.columnValues("w");
    for (std::size_t i = 0; i < e.size(); ++i)
        if (!(e.f[i] >= 0.0) || !(e.w[i] > 0.0))
            throw DomainError("ensemble: row " + std::to_string(i) + " has negative f or nonpositive w");
    return e;
}

// ---------------------------------------------------------------------------
// Ansatz

AnsatzField::AnsatzField(const SteadyState& state)
    : profile_(state.profile), grid_(state.rho.gridPtr()),
      rho0_(state.rho.values().begin(), state.rho.values().end()),
      selfEnergy0_(-coulombEnergy(state.rho, state.rho)), E0_(state.E0)
{
    const auto nodes = state.rho.grid().nodes();
    nodes_.assign(nodes.begin(), nodes.end());
    u_ = state.totalPotential();
    // first crossing of U = E0 (U increases outward for a decreasing total density)
    support_ = -1.0;
    for (std::size_t i = 0; i < u_.size(); ++i) {
        if (u_[i] >= E0_) {
            if (i == 0)
                throw DomainError("ansatz: E0 lies below the potential at the first node");
            const double t = (E0_ - u_[i - 1]) / (u_[i] - u_[i - 1]);
            support_ = nodes_[i - 1] + t * (nodes_[i] - nodes_[i - 1]);
            break;
        }
    }
    if (support_ < 0.0)
        throw DomainError("ansatz: the support reaches the outer grid node; use a larger r_max");
}

double AnsatzField::potential(double r) const
{
    return math::interpLinear(nodes_, u_, r);
}

double AnsatzField::f0(double r, double speed2) const
{
    const double arg = E0_ - energy(r, speed2);
    return arg > 0.0 ? profile_.micro().phiPrimeInverse(arg) : 0.0;
}

double defaultSoftening(double supportRadius, std::size_t count)
{
    return 2.0 * std::sqrt(kPi * supportRadius * supportRadius / double(std::max<std::size_t>(count, 1)));
}

Ensemble sampleAnsatz(const SteadyState& state, std::size_t count, std::uint64_t seed)
{
    if (count == 0)
        throw DomainError("sample_ansatz: particle count must be positive");
    const AnsatzField field(state);
    const double rs = field.supportRadius();

    const std::size_t nr = std::max<std::size_t>(1, std::size_t(std::lround(std::sqrt(double(count) / 16.0))));
    const std::size_t ns = std::max<std::size_t>(1, std::size_t(std::lround(double(count) / (16.0 * double(nr)))));

    // radial strata of equal mass under rho = (Psi')^-1(E0 - U)
    const std::size_t nt = 4000;
    std::vector<double> rt(nt + 1), mt(nt + 1, 0.0);
    for (std::size_t i = 0; i <= nt; ++i)
        rt[i] = rs * double(i) / double(nt);
    auto rhoAt = [&](double r) { return state.profile.psiPrimeInverse(field.depth(r)); };
    for (std::size_t i = 1; i <= nt; ++i)
        mt[i] = mt[i - 1] + math::gaussLegendre([&](double r) { return rhoAt(r) * kTwoPi * r; }, rt[i - 1], rt[i], 8);
    std::vector<double> edges(nr + 1, 0.0);
    edges[nr] = rs;
    for (std::size_t i = 1; i < nr; ++i)
        edges[i] = math::interpLinear(mt, rt, mt.back() * double(i) / double(nr));

    // int 2 (E0 - U) r dr over each stratum, exact for the piecewise-linear U
    std::span<const double> nodes = state.rho.grid().nodes();
    auto velocityArea = [&](double a, double b) {
        std::vector<double> cuts{a};
        for (double x : nodes)
            if (x > a && x < b)
                cuts.push_back(x);
        cuts.push_back(b);
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            sum += math::gaussLegendre([&](double r) { return 2.0 * field.depth(r) * r; }, cuts[i], cuts[i + 1], 8);
        return sum;
    };

    const double dAngle = kTwoPi / 4.0;
    Ensemble e;
    const std::size_t total = nr * ns * 16;
    for (auto* v : {&e.x1, &e.x2, &e.v1, &e.v2, &e.f, &e.w})
        v->reserve(total);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < nr; ++i) {
        const double a = edges[i], b = edges[i + 1];
        const double spatial = velocityArea(a, b);
        const double depthMax = field.depth(a);
        for (std::size_t j = 0; j < ns; ++j) {
            const double s2a = double(j) / double(ns), s2b = double(j + 1) / double(ns);
            const double volume = dAngle * dAngle * 0.5 * (s2b - s2a) * spatial;
            for (int ta = 0; ta < 4; ++ta) {
                for (int pa = 0; pa < 4; ++pa) {
                    // r with density proportional to r (E0 - U(r)) on [a, b]
                    double r = a;
                    for (int tries = 0;; ++tries) {
                        r = std::sqrt(a * a + uniform01(rng) * (b * b - a * a));
                        if (uniform01(rng) * depthMax <= field.depth(r) || tries > 1000)
                            break;
                    }
                    const double s2 = s2a + uniform01(rng) * (s2b - s2a);
                    const double theta = dAngle * (ta + uniform01(rng));
                    const double phi = dAngle * (pa + uniform01(rng));
                    const double lambda = std::max(field.depth(r), 0.0);
                    const double speed = std::sqrt(s2 * 2.0 * lambda);
                    e.x1.push_back(r * std::cos(theta));
                    e.x2.push_back(r * std::sin(theta));
                    e.v1.push_back(speed * std::cos(phi));
                    e.v2.push_back(speed * std::sin(phi));
                    e.f.push_back(field.f0(r, speed * speed));
                    e.w.push_back(volume);
                }
            }
        }
    }
    e.softening = defaultSoftening(rs, e.size());
    return e;
}

// ---------------------------------------------------------------------------
// Fields and energies

std::vector<double> binnedDensity(const Ensemble& ens, const RadialGrid& grid)
{
    const auto nodes = grid.nodes();
    std::vector<double> mass(grid.size(), 0.0);
    for (std::size_t p = 0; p < ens.size(); ++p) {
        const auto c = cic(nodes, ens.radius(p));
        const double m = ens.particleMass(p);
        mass[c.lo] += m * (1.0 - c.t);
        mass[c.hi] += m * c.t;
    }
    for (std::size_t j = 0; j < mass.size(); ++j)
        mass[j] /= grid.weight(j);
    return mass;
}

EnsembleEnergy ensembleEnergy(const Ensemble& ens, const DynamicsContext& ctx)
{
    EnsembleEnergy e;
    e.kinetic = ens.kineticEnergy();
    if (ctx.micro)
        e.casimir = ens.casimir(*ctx.micro);
    for (std::size_t p = 0; p < ens.size(); ++p)
        e.external += ens.particleMass(p) * ctx.external.potential(ens.radius(p));
    if (!ctx.selfGravity)
        return e;
    if (ens.mode == FieldMode::radialBinned) {
        requireGrid(ctx);
        e.self = selfEnergy(binnedDensity(ens, *ctx.grid), *ctx.grid);
    } else {
        const std::size_t n = ens.size();
        const double d2 = ens.softening * ens.softening;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = ens.x1[i] - ens.x1[j], dy = ens.x2[i] - ens.x2[j];
                row += ens.particleMass(j) / std::sqrt(dx * dx + dy * dy + d2);
            }
            sum += ens.particleMass(i) * row;
        }
        e.self = -sum;
    }
    return e;
}

void accelerations(const Ensemble& ens, const DynamicsContext& ctx, std::vector<double>& a1, std::vector<double>& a2)
{
    const std::size_t n = ens.size();
    a1.assign(n, 0.0);
    a2.assign(n, 0.0);

    std::vector<double> u;
    std::span<const double> nodes;
    const bool binned = ctx.selfGravity && ens.mode == FieldMode::radialBinned;
    if (binned) {
        requireGrid(ctx);
        u = ctx.grid->potentialOperator().energyGradient(binnedDensity(ens, *ctx.grid));
        nodes = ctx.grid->nodes();
    }
    const bool direct = ctx.selfGravity && ens.mode == FieldMode::nbody;
    const double d2 = ens.softening * ens.softening;
    if (direct && !(d2 > 0.0))
        throw DomainError("nbody mode needs a positive softening length");

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ip = 0; ip < std::ptrdiff_t(n); ++ip) {
        const std::size_t i = std::size_t(ip);
        const double r = ens.radius(i);
        // radial part: -dU/dr (x/r)
        double radial = ctx.external.force(r);
        if (binned) {
            const auto c = cic(nodes, r);
            if (c.hi != c.lo)
                radial += (u[c.hi] - u[c.lo]) / (nodes[c.hi] - nodes[c.lo]);
        }
        double ax = 0.0, ay = 0.0;
        if (r > 0.0) {
            ax = -radial * ens.x1[i] / r;
            ay = -radial * ens.x2[i] / r;
        }
        if (direct) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i)
                    continue;
                const double dx = ens.x1[i] - ens.x1[j], dy = ens.x2[i] - ens.x2[j];
                const double q = dx * dx + dy * dy + d2;
                const double s = ens.particleMass(j) / (q * std::sqrt(q));
                ax -= s * dx;
                ay -= s * dy;
            }
        }
        a1[i] = ax;
        a2[i] = ay;
    }
}

Trajectory evolve(const Ensemble& initial, const DynamicsContext& ctx, const EvolveOptions& options, bool keepSnapshots)
{
    if (!(options.dt > 0.0) || !(options.tEnd >= 0.0))
        throw DomainError("evolve: dt must be positive and t_end nonnegative");
    const int steps = int(std::ceil(options.tEnd / options.dt - 1e-9));
    const double dt = steps > 0 ? options.tEnd / steps : options.dt;
    const int samples = std::max(1, std::min(options.samples, std::max(steps, 1)));
    const double limit = options.maxStepFactor * initial.softening;

    Trajectory traj;
    traj.steps = steps;
    auto record = [&](double t, const Ensemble& e) {
        traj.times.push_back(t);
        if (keepSnapshots)
            traj.snapshots.push_back(e);
        if (options.observer)
            options.observer(t, e);
    };

    Ensemble cur = initial;
    std::vector<double> a1, a2;
    accelerations(cur, ctx, a1, a2);
    record(0.0, cur);
    int nextSample = 1;
    for (int step = 1; step <= steps; ++step) {
        Ensemble next = cur;
        const std::size_t n = cur.size();
        double maxMove = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next.v1[i] = cur.v1[i] + 0.5 * dt * a1[i];
            next.v2[i] = cur.v2[i] + 0.5 * dt * a2[i];
            const double dx = dt * next.v1[i], dy = dt * next.v2[i];
            next.x1[i] = cur.x1[i] + dx;
            next.x2[i] = cur.x2[i] + dy;
            maxMove = std::max(maxMove, std::hypot(dx, dy));
        }
        if (limit > 0.0 && maxMove > limit && !options.strict)
            ++traj.flaggedSteps;
        else if (limit > 0.0 && maxMove > limit)
            throw StepRejected("evolve: step " + std::to_string(step) + " moves a particle " + std::to_string(maxMove) +
                               ", more than " + std::to_string(options.maxStepFactor) +
                               " softening lengths; reduce dt");
        accelerations(next, ctx, a1, a2);
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            next.v1[i] += 0.5 * dt * a1[i];
            next.v2[i] += 0.5 * dt * a2[i];
            finite = finite && std::isfinite(next.x1[i] + next.x2[i] + next.v1[i] + next.v2[i]);
        }
        if (!finite)
            throw BlowUp("evolve: non-finite particle state at t = " + std::to_string(step * dt), step * dt);
        cur = std::move(next);
        // sample k lands on step round(k steps / samples)
        if (steps > 0 && step == int(std::lround(double(nextSample) * steps / samples))) {
            record(step * dt, cur);
            ++nextSample;
        }
    }
    traj.final = std::move(cur);
    return traj;
}

// ---------------------------------------------------------------------------
// Distance

DistanceReference distanceReference(const Ensemble& reference, const AnsatzField& field, const DynamicsContext& ctx)
{
    requireStateGrid(ctx, field);
    const auto& micro = field.profile().micro();
    const double p = 1.0 + 1.0 / micro.exponent();
    DistanceReference ref;
    ref.terms.resize(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double speed2 = reference.v1[i] * reference.v1[i] + reference.v2[i] * reference.v2[i];
        const double f0 = field.f0(reference.radius(i), speed2);
        ref.terms[i] = reference.w[i] * (micro.phi(f0) + field.energy(reference.radius(i), speed2) * f0);
        ref.href += ref.terms[i];
        ref.normPower += reference.w[i] * std::pow(f0, p);
    }
    ref.energy = ensembleEnergy(reference, ctx).total();
    return ref;
}

DistanceReport distance(const Ensemble& ens, const AnsatzField& field, const DistanceReference& ref,
                        const DynamicsContext& ctx)
{
    requireStateGrid(ctx, field);
    const auto& micro = field.profile().micro();
    DistanceReport out;
    std::vector<double> terms(ens.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const double speed2 = ens.v1[i] * ens.v1[i] + ens.v2[i] * ens.v2[i];
        terms[i] = ens.w[i] * (micro.phi(ens.f[i]) + field.energy(ens.radius(i), speed2) * ens.f[i]);
        sum += terms[i];
    }
    out.d = sum - ref.href;
    if (terms.size() == ref.terms.size() && !terms.empty()) {
        for (std::size_t i = 0; i < terms.size(); ++i)
            terms[i] -= ref.terms[i];
        const double mean = out.d / double(terms.size());
        double var = 0.0;
        for (double t : terms)
            var += (t - mean) * (t - mean);
        out.spread = std::sqrt(var);
    }

    auto drho = binnedDensity(ens, *ctx.grid);
    for (std::size_t j = 0; j < drho.size(); ++j)
        drho[j] -= field.rho0()[j];
    out.epotDiff = selfEnergy(drho, *ctx.grid);
    out.combined = out.d - out.epotDiff;

    out.identity.lhs = ensembleEnergy(ens, ctx).total() - ref.energy;
    out.identity.exactRhs = out.d + out.epotDiff;
    out.identity.statedRhs = out.d - out.epotDiff;
    out.identity.scale = std::max(std::fabs(ref.energy), std::fabs(out.d));
    return out;
}

double normDeviation(const Ensemble& ens, const AnsatzField& field, const DistanceReference& ref)
{
    const double p = 1.0 + 1.0 / field.profile().micro().exponent();
    double covered = 0.0, coveredRef = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const double speed2 = ens.v1[i] * ens.v1[i] + ens.v2[i] * ens.v2[i];
        const double f0 = field.f0(ens.radius(i), speed2);
        covered += ens.w[i] * std::pow(std::fabs(ens.f[i] - f0), p);
        coveredRef += ens.w[i] * std::pow(f0, p);
    }
    return std::pow(covered + std::max(0.0, ref.normPower - coveredRef), 1.0 / p);
}

Ensemble dilateVelocities(const Ensemble& ens, double delta)
{
    if (!(delta > -1.0))
        throw DomainError("dilation factor 1 + delta must be positive");
    Ensemble out = ens;
    const double s = 1.0 + delta;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.v1[i] *= s;
        out.v2[i] *= s;
        out.w[i] *= s * s;
        out.f[i] /= s * s;
    }
    return out;
}

Ensemble dilatePositions(const Ensemble& ens, double delta)
{
    if (!(delta > -1.0))
        throw DomainError("dilation factor 1 + delta must be positive");
    Ensemble out = ens;
    const double s = 1.0 + delta;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.x1[i] *= s;
        out.x2[i] *= s;
        out.w[i] *= s * s;
        out.f[i] /= s * s;
    }
    return out;
}

double dynamicalTime(const SteadyState& state)
{
    const double r = state.supportRadius;
    return std::sqrt(r * r * r / state.mass);
}

// ---------------------------------------------------------------------------
// Stability experiment

StabilityMetrics stabilityExperiment(const SteadyState& state, const StabilityOptions& options)
{
    if (options.samples < 50)
        throw DomainError("stability experiment needs at least 50 samples");
    const AnsatzField field(state);
    Ensemble reference = sampleAnsatz(state, options.particles, options.seed);
    reference.mode = options.mode;
    if (options.softening > 0.0)
        reference.softening = options.softening;

    DynamicsContext ctx;
    ctx.grid = state.rho.gridPtr();
    ctx.external = state.external;
    ctx.micro = &state.profile.micro();
    const auto ref = distanceReference(reference, field, ctx);
    const Ensemble perturbed = dilateVelocities(reference, options.perturbation);

    StabilityMetrics m;
    m.timeUnit = options.dynamicalUnits ? dynamicalTime(state) : 1.0;
    const double mass0 = perturbed.mass();
    double ec0 = 0.0;
    EvolveOptions ev;
    ev.dt = options.dt * m.timeUnit;
    ev.tEnd = options.tEnd * m.timeUnit;
    ev.samples = options.samples;
    ev.maxStepFactor = options.maxStepFactor;
    ev.observer = [&](double t, const Ensemble& e) {
        const auto dist = distance(e, field, ref, ctx);
        const double ec = dist.identity.lhs + ref.energy;
        if (m.t.empty()) {
            ec0 = ec;
            m.identity = dist.identity;
            if (!(dist.identity.exactError() <= 0.01))
                throw PropertyViolation("expansion identity off by " + std::to_string(dist.identity.exactError()) +
                                        " of max(|E_C(f0)|, d) at t = 0");
        }
        m.t.push_back(t / m.timeUnit);
        m.d.push_back(dist.d);
        m.epotDiff.push_back(dist.epotDiff);
        m.combined.push_back(dist.combined);
        m.ecDrift.push_back((ec - ec0) / std::fabs(ec0));
        m.massDrift.push_back((e.mass() - mass0) / mass0);
        m.maxNormDeviation = std::max(m.maxNormDeviation, normDeviation(e, field, ref));
        m.maxIdentityError = std::max(m.maxIdentityError, dist.identity.exactError());
    };
    auto traj = evolve(perturbed, ctx, ev);
    m.steps = traj.steps;
    m.flaggedSteps = traj.flaggedSteps;
    m.final = std::move(traj.final);

    m.initialCombined = m.combined.front();
    m.maxCombined = *std::max_element(m.combined.begin(), m.combined.end());
    m.minCombined = *std::min_element(m.combined.begin(), m.combined.end());
    m.minD = *std::min_element(m.d.begin(), m.d.end());
    for (double x : m.ecDrift)
        m.maxAbsEcDrift = std::max(m.maxAbsEcDrift, std::fabs(x));
    return m;
}

void StabilityMetrics::writeCsv(const std::filesystem::path& path, const std::string& configHash) const
{
    std::vector<std::vector<double>> rows(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        rows[i] = {t[i], d[i], epotDiff[i], combined[i], ecDrift[i], massDrift[i]};
    csv::write(path, {"t", "d", "epot_diff", "combined", "ec_drift", "mass_drift"}, rows,
               configHash.empty() ? std::string() : "config_hash: " + configHash);
}

nlohmann::json StabilityMetrics::summary() const
{
    return {
        {"time_unit", timeUnit},
        {"samples", t.size()},
        {"initial_combined", initialCombined},
        {"max_combined", maxCombined},
        {"min_combined", minCombined},
        {"ratio", ratio()},
        {"min_d", minD},
        {"max_abs_ec_drift", maxAbsEcDrift},
        {"max_norm_deviation", maxNormDeviation},
        {"max_identity_error", maxIdentityError},
        {"steps", steps},
        {"flagged_steps", flaggedSteps},
        {"identity_t0", {{"lhs", identity.lhs},
                      {"d_plus_epot", identity.exactRhs},
                      {"d_minus_epot", identity.statedRhs},
                      {"error_d_plus_epot", identity.exactError()},
                      {"error_d_minus_epot", identity.statedError()}}},
    };
}

}  // namespace flatvp

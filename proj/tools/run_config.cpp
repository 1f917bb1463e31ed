#include "run_config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace flatvp::cli {

namespace {

using nlohmann::json;

// Typed access to one JSON object that remembers which keys were consumed.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError(path_.empty() ? "config" : path_, "must be a JSON object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number())
                throw ConfigError(field(key), "must be a number");
            out = v->get<double>();
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number_integer())
                throw ConfigError(field(key), "must be an integer");
            if (v->is_number_unsigned()) {
                const auto u = v->get<std::uint64_t>();
                if (u > std::uint64_t(std::numeric_limits<Int>::max()))
                    throw ConfigError(field(key), "integer out of range");
                out = Int(u);
            } else {
                const auto s = v->get<std::int64_t>();
                if (s < 0 && std::is_unsigned_v<Int>)
                    throw ConfigError(field(key), "must be a nonnegative integer");
                out = Int(s);
            }
        }
    }

    void string(const std::string& key, std::string& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_string())
                throw ConfigError(field(key), "must be a string");
            out = v->get<std::string>();
        }
    }

    void finish() const
    {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key()))
                throw ConfigError(field(item.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void requireKeys(const json& j, const std::string& path, std::initializer_list<const char*> allowed)
{
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || item.key() == a;
        if (!ok)
            throw ConfigError(path + "." + item.key(), "unknown key");
    }
}

void checkProfileKeys(const json& p)
{
    if (!p.is_object())
        throw ConfigError("profile", "must be a JSON object");
    if (!p.contains("kind") || !p.at("kind").is_string())
        throw ConfigError("profile.kind", "missing or not a string");
    const auto kind = p.at("kind").get<std::string>();
    if (kind == "polytrope") {
        requireKeys(p, "profile", {"kind", "k"});
        if (!p.contains("k") || !p.at("k").is_number())
            throw ConfigError("profile.k", "missing or not a number");
    } else if (kind == "tabulated") {
        requireKeys(p, "profile", {"kind", "path", "f", "phi_prime"});
    } else {
        throw ConfigError("profile.kind", "unknown profile kind '" + kind + "'");
    }
}

void checkExternalKeys(const json& e)
{
    if (!e.is_object())
        throw ConfigError("external", "must be a JSON object");
    requireKeys(e, "external", {"kind", "params"});
    if (!e.contains("kind") || !e.at("kind").is_string())
        throw ConfigError("external.kind", "missing or not a string");
    const auto kind = e.at("kind").get<std::string>();
    const json params = e.value("params", json::object());
    if (!params.is_object())
        throw ConfigError("external.params", "must be a JSON object");
    if (kind == "none")
        requireKeys(params, "external.params", {});
    else if (kind == "kuzmin")
        requireKeys(params, "external.params", {"M", "a"});
    else if (kind == "gaussian")
        requireKeys(params, "external.params", {"M", "w"});
    else if (kind == "tabulated")
        requireKeys(params, "external.params", {"path", "r", "rho"});
    else
        throw ConfigError("external.kind", "unknown external density kind '" + kind + "'");
}

void require(bool ok, const char* field, const char* what)
{
    if (!ok)
        throw ConfigError(field, what);
}

}  // namespace

std::string fnv1a(const std::string& text)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig RunConfig::fromJson(const json& j)
{
    RunConfig c;
    Section top(j, "");
    if (const json* p = top.find("profile"))
        c.profile = *p;
    top.number("M", c.mass);
    if (const json* e = top.find("external")) {
        c.external = *e;
        if (c.external.is_object() && !c.external.contains("params"))
            c.external["params"] = json::object();
    }
    if (const json* g = top.find("grid")) {
        Section s(*g, "grid");
        s.string("mode", c.grid.mode);
        s.integer("n", c.grid.n);
        if (const json* r = s.find("r_max")) {
            if (r->is_string()) {
                if (r->get<std::string>() != "auto")
                    throw ConfigError("grid.r_max", "must be a number or \"auto\"");
            } else if (r->is_number()) {
                c.grid.rMax = r->get<double>();
            } else {
                throw ConfigError("grid.r_max", "must be a number or \"auto\"");
            }
        }
        s.number("r_min", c.grid.rMin);
        s.finish();
    }
    if (const json* v = top.find("solver")) {
        Section s(*v, "solver");
        s.string("method", c.solver.method);
        s.number("omega", c.solver.omega);
        s.number("tol", c.solver.tol);
        s.integer("max_iter", c.solver.maxIter);
        s.finish();
    }
    if (const json* v = top.find("dynamics")) {
        Section s(*v, "dynamics");
        s.integer("N", c.dynamics.particles);
        s.number("dt", c.dynamics.dt);
        s.number("t_end", c.dynamics.tEnd);
        s.number("delta_pert", c.dynamics.deltaPert);
        s.number("softening", c.dynamics.softening);
        s.string("field_mode", c.dynamics.fieldMode);
        s.integer("samples", c.dynamics.samples);
        s.string("time_unit", c.dynamics.timeUnit);
        s.number("max_step_factor", c.dynamics.maxStepFactor);
        s.finish();
    }
    if (const json* v = top.find("checks")) {
        Section s(*v, "checks");
        s.number("hls_constant", c.checks.hlsConstant);
        s.integer("corpus_size", c.checks.corpusSize);
        s.integer("corpus_seed", c.checks.corpusSeed);
        s.number("mass_tol", c.checks.massTol);
        s.number("residual_tol", c.checks.residualTol);
        s.number("identity_tol", c.checks.identityTol);
        s.number("slope_tol", c.checks.slopeTol);
        s.integer("probe_trials", c.checks.probeTrials);
        s.finish();
    }
    top.integer("seed", c.seed);
    top.string("output", c.output);
    top.finish();
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config", "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("not valid JSON: ") + e.what());
    }
    return fromJson(j);
}

void RunConfig::validate() const
{
    checkProfileKeys(profile);
    if (profile.at("kind") == "polytrope") {
        const double k = profile.at("k").get<double>();
        require(k > 0.0 && k <= 1.0, "profile.k", "must lie in (0, 1]");
    }
    (void)micro();
    require(std::isfinite(mass) && mass > 0.0, "M", "must be positive");
    checkExternalKeys(external);
    (void)externalDensity();

    require(grid.mode == "uniform" || grid.mode == "geometric", "grid.mode", "must be \"uniform\" or \"geometric\"");
    require(grid.n >= 16, "grid.n", "must be at least 16");
    if (grid.rMax)
        require(std::isfinite(*grid.rMax) && *grid.rMax > 0.0, "grid.r_max", "must be positive");
    require(grid.rMin >= 0.0 && (!grid.rMax || grid.rMin < *grid.rMax), "grid.r_min", "must lie in [0, r_max)");

    require(solver.method == "newton" || solver.method == "picard", "solver.method", "must be \"newton\" or \"picard\"");
    require(solver.omega > 0.0 && solver.omega <= 1.0, "solver.omega", "must lie in (0, 1]");
    require(solver.tol > 0.0, "solver.tol", "must be positive");
    require(solver.maxIter >= 1, "solver.max_iter", "must be at least 1");

    require(dynamics.particles >= 16, "dynamics.N", "must be at least 16");
    require(std::isfinite(dynamics.dt) && dynamics.dt > 0.0, "dynamics.dt", "must be positive");
    require(std::isfinite(dynamics.tEnd) && dynamics.tEnd >= dynamics.dt, "dynamics.t_end", "must be at least dt");
    require(std::fabs(dynamics.deltaPert) < 1.0, "dynamics.delta_pert", "must satisfy |delta_pert| < 1");
    require(dynamics.softening >= 0.0, "dynamics.softening", "must be nonnegative (0 selects the default)");
    try {
        (void)fieldModeFromString(dynamics.fieldMode);
    } catch (const DomainError& e) {
        throw ConfigError("dynamics.field_mode", e.what());
    }
    require(dynamics.samples >= 50, "dynamics.samples", "must be at least 50");
    require(dynamics.timeUnit == "dynamical" || dynamics.timeUnit == "model", "dynamics.time_unit",
            "must be \"dynamical\" or \"model\"");
    require(dynamics.maxStepFactor > 0.0, "dynamics.max_step_factor", "must be positive");

    require(checks.hlsConstant > 0.0, "checks.hls_constant", "must be positive");
    require(checks.corpusSize >= 1, "checks.corpus_size", "must be at least 1");
    require(checks.massTol > 0.0, "checks.mass_tol", "must be positive");
    require(checks.residualTol > 0.0, "checks.residual_tol", "must be positive");
    require(checks.identityTol > 0.0, "checks.identity_tol", "must be positive");
    require(checks.slopeTol > 0.0, "checks.slope_tol", "must be positive");
    require(checks.probeTrials >= 1, "checks.probe_trials", "must be at least 1");
    require(!output.empty(), "output", "must not be empty");
}

json RunConfig::toJson() const
{
    json g = {{"mode", grid.mode}, {"n", grid.n}, {"r_min", grid.rMin}};
    g["r_max"] = grid.rMax ? json(*grid.rMax) : json("auto");
    return {
        {"profile", profile},
        {"M", mass},
        {"external", external},
        {"grid", g},
        {"solver", {{"method", solver.method}, {"omega", solver.omega}, {"tol", solver.tol}, {"max_iter", solver.maxIter}}},
        {"dynamics",
         {{"N", dynamics.particles},
          {"dt", dynamics.dt},
          {"t_end", dynamics.tEnd},
          {"delta_pert", dynamics.deltaPert},
          {"softening", dynamics.softening},
          {"field_mode", dynamics.fieldMode},
          {"samples", dynamics.samples},
          {"time_unit", dynamics.timeUnit},
          {"max_step_factor", dynamics.maxStepFactor}}},
        {"checks",
         {{"hls_constant", checks.hlsConstant},
          {"corpus_size", checks.corpusSize},
          {"corpus_seed", checks.corpusSeed},
          {"mass_tol", checks.massTol},
          {"residual_tol", checks.residualTol},
          {"identity_tol", checks.identityTol},
          {"slope_tol", checks.slopeTol},
          {"probe_trials", checks.probeTrials}}},
        {"seed", seed},
        {"output", output},
    };
}

std::string RunConfig::hash() const
{
    auto j = toJson();
    j.erase("output");
    return fnv1a(j.dump());
}

std::string RunConfig::stateHash() const
{
    const auto j = toJson();
    const json s = {{"profile", j["profile"]}, {"M", j["M"]}, {"external", j["external"]},
                    {"grid", j["grid"]}, {"solver", j["solver"]}};
    return fnv1a(s.dump());
}

MicroProfile RunConfig::micro() const
{
    try {
        return profileFromJson(profile);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("profile", e.what());
    }
}

ExternalDensity RunConfig::externalDensity() const
{
    try {
        return ExternalDensity::fromJson(external);
    } catch (const std::exception& e) {
        throw ConfigError("external.params", e.what());
    }
}

GridPtr RunConfig::makeGrid() const
{
    double rMax = 0.0;
    if (grid.rMax) {
        rMax = *grid.rMax;
    } else {
        // the support radius spans decades across (k, M, external); locate it on a wide grid first
        const auto pilot = solveSteadyState(ReducedProfile(micro()), mass, externalDensity(),
                                            RadialGrid::geometric(256, 100.0, 1e-7), solverOptions());
        rMax = 1.5 * pilot.supportRadius;
    }
    if (grid.mode == "geometric")
        return RadialGrid::geometric(grid.n, rMax, grid.rMin);
    return RadialGrid::uniform(grid.n, rMax);
}

SolverOptions RunConfig::solverOptions() const
{
    SolverOptions o;
    o.method = solver.method == "picard" ? SolverMethod::picard : SolverMethod::newton;
    o.damping = solver.omega;
    o.tol = solver.tol;
    o.maxIter = solver.maxIter;
    return o;
}

StabilityOptions RunConfig::stabilityOptions() const
{
    StabilityOptions o;
    o.perturbation = dynamics.deltaPert;
    o.particles = dynamics.particles;
    o.dt = dynamics.dt;
    o.tEnd = dynamics.tEnd;
    o.dynamicalUnits = dynamics.timeUnit == "dynamical";
    o.samples = dynamics.samples;
    o.seed = seed;
    o.mode = fieldModeFromString(dynamics.fieldMode);
    o.softening = dynamics.softening;
    o.maxStepFactor = dynamics.maxStepFactor;
    return o;
}

CheckOptions RunConfig::checkOptions() const
{
    CheckOptions o;
    o.massTol = checks.massTol;
    o.residualTol = checks.residualTol;
    o.identityTol = checks.identityTol;
    o.slopeTol = checks.slopeTol;
    o.hlsConstant = checks.hlsConstant;
    o.corpusSize = checks.corpusSize;
    o.corpusSeed = checks.corpusSeed;
    o.probe.trials = checks.probeTrials;
    o.probe.seed = seed;
    return o;
}

}  // namespace flatvp::cli

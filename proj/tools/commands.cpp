#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "flatvp/csv.hpp"

namespace flatvp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kStateJson = "steady_state.json";
const char* kStateCsv = "steady_state.csv";

void writeJson(const fs::path& path, const json& j)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json diagnosticsJson(const SolverDiagnostics& d)
{
    return {{"iterations", d.iterations},
            {"converged", d.converged},
            {"residuals", d.residuals},
            {"dampings", d.dampings},
            {"support_cells", d.supportCells},
            {"support_at_boundary", d.supportAtBoundary}};
}

void warnAboutConfig(const RunConfig& c, Streams io)
{
    if (c.profile.at("kind") == "polytrope" && c.profile.at("k").get<double>() == 1.0)
        io.err << "warning: k = 1 lies outside the range 0 < k < 1 covered by the existence theory\n";
}

void printState(const SteadyState& s, Streams io)
{
    const auto& e = s.energies;
    io.log << std::setprecision(10) << "E0       = " << s.E0 << "\n"
           << "R0       = " << s.supportRadius << "\n"
           << "residual = " << elResidual(s) << "  (" << s.diagnostics.iterations << " sweeps)\n"
           << "E_kin = " << e.kinetic << "  C = " << e.casimir << "  int Psi = " << e.psiIntegral << "\n"
           << "E_pot^1 = " << e.selfPotential << "  E_pot^e = " << e.externalPotential
           << "  E_total = " << e.total << "\n";
}

SteadyState solveAndSave(const RunConfig& c, Streams io)
{
    const fs::path out = c.output;
    fs::create_directories(out);
    warnAboutConfig(c, io);
    const ReducedProfile profile(c.micro());
    std::optional<SteadyState> state;
    try {
        state = solveSteadyState(profile, c.mass, c.externalDensity(), c.makeGrid(), c.solverOptions());
    } catch (const NoConvergence& e) {
        json j = diagnosticsJson(e.diagnostics());
        j["config_hash"] = c.hash();
        j["error"] = e.what();
        writeJson(out / "solver_diagnostics.json", j);
        io.err << "residual diagnostics written to " << (out / "solver_diagnostics.json").string() << "\n";
        throw;
    }
    const auto& d = state->diagnostics;
    if (d.supportCells < 16)
        io.err << "warning: the support spans only " << d.supportCells << " cells; refine the grid\n";
    if (d.supportAtBoundary)
        io.err << "warning: the density reaches the outer grid edge; increase grid.r_max\n";

    saveSteadyState(*state, out / kStateJson, out / kStateCsv, c.hash());
    std::ifstream in(out / kStateJson);
    json j = json::parse(in);
    in.close();
    j["state_hash"] = c.stateHash();
    writeJson(out / kStateJson, j);
    return std::move(*state);
}

/// The saved state when it was produced from the same physics settings, a fresh solve otherwise.
SteadyState obtainState(const RunConfig& c, Streams io)
{
    const fs::path path = fs::path(c.output) / kStateJson;
    if (fs::exists(path)) {
        std::ifstream in(path);
        const json j = json::parse(in, nullptr, false);
        if (!j.is_discarded() && j.value("state_hash", "") == c.stateHash()) {
            io.log << "using " << path.string() << "\n";
            return loadSteadyState(path);
        }
    }
    io.log << "solving steady state\n";
    auto s = solveAndSave(c, io);
    printState(s, io);
    return s;
}

void printTable(const std::vector<CheckResult>& results, Streams io)
{
    io.log << std::left << std::setw(24) << "check" << std::setw(11) << "status" << std::setw(15) << "value"
           << std::setw(15) << "threshold" << "detail\n";
    for (const auto& r : results) {
        std::string status = r.passed ? "PASS" : "FAIL";
        if (r.diagnostic)
            status += " (d)";
        io.log << std::left << std::setw(24) << r.name << std::setw(11) << status << std::setw(15)
               << std::setprecision(6) << r.value << std::setw(15) << r.threshold << r.detail << "\n";
    }
    io.log << std::right << "(d) diagnostic, reported only\n";
}

}  // namespace

int guarded(Streams io, const std::function<int()>& command)
{
    try {
        return command();
    } catch (const ConfigError& e) {
        io.err << "invalid config: " << e.what() << "\n";
        return exitInvalid;
    } catch (const BlowUp& e) {
        io.err << "error: numerical blow-up at t = " << e.time() << ": " << e.what() << "\n";
        return exitNoConvergence;
    } catch (const ConvergenceError& e) {
        io.err << "error: " << e.what() << "\n";
        return exitNoConvergence;
    } catch (const PropertyViolation& e) {
        io.err << "check failed: " << e.what() << "\n";
        return exitCheckFailed;
    } catch (const DomainError& e) {
        io.err << "invalid input: " << e.what() << "\n";
        return exitInvalid;
    } catch (const std::exception& e) {
        io.err << "error: " << e.what() << "\n";
        return exitInvalid;
    }
}

int cmdSolve(const RunConfig& config, Streams io)
{
    return guarded(io, [&] {
        const auto state = solveAndSave(config, io);
        printState(state, io);
        io.log << "wrote " << (fs::path(config.output) / kStateJson).string() << "\n";
        return int(exitOk);
    });
}

int cmdCheck(const RunConfig& config, const std::string& suite, Streams io)
{
    if (suite != "inequalities" && suite != "regularity" && suite != "all") {
        io.err << "invalid input: --suite must be inequalities, regularity or all (got '" << suite << "')\n";
        return exitInvalid;
    }
    return guarded(io, [&] {
        const auto state = obtainState(config, io);
        const auto options = config.checkOptions();
        std::vector<CheckResult> results;
        if (suite != "regularity") {
            results.push_back(reductionIdentityCheck(state.profile, options.reductionTol));
            for (auto& r : stateChecks(state, options))
                results.push_back(std::move(r));
            for (auto& r : corpusChecks(state.profile, options))
                results.push_back(std::move(r));
        }
        if (suite != "inequalities")
            for (auto& r : regularityChecks(state, config.solverOptions()))
                results.push_back(std::move(r));
        printTable(results, io);

        const bool ok = allPassed(results);
        json report = {{"config_hash", config.hash()}, {"suite", suite}, {"passed", ok}};
        report["checks"] = json::array();
        for (const auto& r : results)
            report["checks"].push_back(r.toJson());
        writeJson(fs::path(config.output) / "check_report.json", report);
        io.log << (ok ? "all checks passed" : "some checks FAILED") << "\n";
        return int(ok ? exitOk : exitCheckFailed);
    });
}

int cmdEvolve(const RunConfig& config, Streams io)
{
    return guarded(io, [&] {
        const auto state = obtainState(config, io);
        const fs::path out = config.output;
        const auto options = config.stabilityOptions();
        StabilityMetrics m;
        try {
            m = stabilityExperiment(state, options);
        } catch (const BlowUp& e) {
            writeJson(out / "stability_summary.json",
                      {{"config_hash", config.hash()}, {"status", "blow_up"}, {"time", e.time()}, {"error", e.what()}});
            throw;
        }
        const std::string hash = config.hash();
        m.writeCsv(out / "stability.csv", hash);
        m.final.writeCsv(out / "ensemble_final.csv", hash);

        json summary = m.summary();
        summary["config_hash"] = hash;
        summary["status"] = "ok";
        summary["delta_pert"] = options.perturbation;
        summary["particles"] = options.particles;
        summary["field_mode"] = config.dynamics.fieldMode;
        summary["time_unit"] = config.dynamics.timeUnit;
        const double flaggedFraction = m.steps > 0 ? double(m.flaggedSteps) / m.steps : 0.0;
        summary["flagged_fraction"] = flaggedFraction;
        if (options.perturbation == 0.0)
            summary["noise_floor_excursion"] = m.maxCombined - m.initialCombined;
        writeJson(out / "stability_summary.json", summary);

        if (flaggedFraction > 0.1)
            io.err << "warning: " << m.flaggedSteps << " of " << m.steps
                   << " steps moved a particle by more than max_step_factor softening lengths; reduce dt\n";
        io.log << std::setprecision(6) << "steps " << m.steps << ", initial combined distance " << m.initialCombined
               << ", max " << m.maxCombined << " (ratio " << m.ratio() << "), min " << m.minCombined << "\n"
               << "max |E_C drift| " << m.maxAbsEcDrift << ", identity error at t=0 "
               << m.identity.exactError() << "\n"
               << "wrote " << (out / "stability.csv").string() << "\n";
        return int(exitOk);
    });
}

int cmdSweep(const RunConfig& config, const std::string& param, const std::vector<double>& values, Streams io)
{
    if (values.empty()) {
        io.err << "invalid input: --values is empty\n";
        return exitInvalid;
    }
    if (param != "M" && param != "k" && param != "Mext") {
        io.err << "invalid input: --param must be M, k or Mext (got '" << param << "')\n";
        return exitInvalid;
    }
    if (param == "k" && config.profile.at("kind") != "polytrope") {
        io.err << "invalid input: sweeping k needs a polytrope profile\n";
        return exitInvalid;
    }
    const std::string extKind = config.external.at("kind").get<std::string>();
    if (param == "Mext" && extKind != "kuzmin" && extKind != "gaussian") {
        io.err << "invalid input: sweeping Mext needs a kuzmin or gaussian external density\n";
        return exitInvalid;
    }

    return guarded(io, [&] {
        const fs::path out = config.output;
        fs::create_directories(out);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        std::vector<std::vector<double>> rows;
        int successes = 0, firstFailure = exitOk;
        for (double v : values) {
            RunConfig sub = config;
            if (param == "M")
                sub.mass = v;
            else if (param == "k")
                sub.profile["k"] = v;
            else
                sub.external["params"]["M"] = v;
            sub.output = (out / (param + "_" + csv::formatNumber(v))).string();
            io.log << "== " << param << " = " << v << "\n";

            std::optional<SteadyState> state;
            const int code = guarded(io, [&] {
                sub.validate();
                state = solveAndSave(sub, io);
                printState(*state, io);
                return int(exitOk);
            });
            if (code == exitOk) {
                ++successes;
                const auto& e = state->energies;
                rows.push_back({v, 0.0, state->E0, state->supportRadius, e.kinetic, e.casimir, e.psiIntegral,
                                e.selfPotential, e.externalPotential, e.total, elResidual(*state),
                                double(state->diagnostics.iterations)});
            } else {
                if (firstFailure == exitOk)
                    firstFailure = code;
                rows.push_back({v, double(code), nan, nan, nan, nan, nan, nan, nan, nan, nan, nan});
            }
        }
        csv::write(out / "sweep.csv",
                   {"value", "status", "E0", "R0", "E_kin", "casimir", "psi_integral", "E_pot_self", "E_pot_ext",
                    "E_total", "residual", "iterations"},
                   rows, "config_hash: " + config.hash() + ", param: " + param);
        io.log << successes << " of " << values.size() << " values succeeded; wrote " << (out / "sweep.csv").string()
               << "\n";
        return successes > 0 ? int(exitOk) : firstFailure;
    });
}

}  // namespace flatvp::cli

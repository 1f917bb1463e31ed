#include <charconv>
#include <iostream>

#include "CLI11.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include "commands.hpp"

using namespace flatvp::cli;

namespace {

// "0.5,1,2" -> {0.5, 1, 2}; throws ConfigError on anything else.
std::vector<double> parseValues(const std::string& text)
{
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string::npos)
            end = text.size();
        std::string item = text.substr(start, end - start);
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
            if (ec != std::errc() || ptr != item.data() + item.size())
                throw ConfigError("--values", "not a number: '" + item + "'");
            out.push_back(v);
        }
        start = end + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Steady states of the flat Vlasov-Poisson system: solve, check, evolve, sweep"};
    app.require_subcommand(1);

    std::string configPath, outDir;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    app.add_option("--config", configPath, "JSON run configuration (defaults when omitted)");
    app.add_option("--out", outDir, "output directory (overrides 'output')");
    app.add_option("--seed", seed, "random seed (overrides 'seed')");
    app.add_option("--threads", threads, "cap on worker threads")->check(CLI::PositiveNumber);

    auto* solve = app.add_subcommand("solve", "solve for the steady state");
    std::string suite = "all";
    auto* check = app.add_subcommand("check", "run the inequality and regularity checks");
    check->add_option("--suite", suite, "inequalities, regularity or all");
    auto* evolve = app.add_subcommand("evolve", "perturbed-ensemble stability experiment");
    std::string param, values;
    auto* sweep = app.add_subcommand("sweep", "solve over a list of parameter values");
    sweep->add_option("--param", param, "M, k or Mext")->required();
    sweep->add_option("--values", values, "comma-separated values")->required();
    for (auto* sub : {solve, check, evolve, sweep})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exitOk : exitInvalid;
    }

#ifdef _OPENMP
    if (threads > 0)
        omp_set_num_threads(threads);
#endif

    Streams io{std::cout, std::cerr};
    RunConfig config;
    std::vector<double> sweepValues;
    const int code = guarded(io, [&] {
        config = configPath.empty() ? RunConfig() : RunConfig::load(configPath);
        if (!outDir.empty())
            config.output = outDir;
        if (seed)
            config.seed = *seed;
        config.validate();
        if (sweep->parsed())
            sweepValues = parseValues(values);
        return int(exitOk);
    });
    if (code != exitOk)
        return code;

    if (solve->parsed())
        return cmdSolve(config, io);
    if (check->parsed())
        return cmdCheck(config, suite, io);
    if (evolve->parsed())
        return cmdEvolve(config, io);
    return cmdSweep(config, param, sweepValues, io);
}

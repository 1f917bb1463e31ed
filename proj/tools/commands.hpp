#pragma once

// solve / check / evolve / sweep. Each returns the process exit code:
// 0 success, 1 check failure, 2 non-convergence or blow-up, 3 invalid input.
// Progress goes to `log`, warnings and errors to `err`.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace flatvp::cli {

enum ExitCode { exitOk = 0, exitCheckFailed = 1, exitNoConvergence = 2, exitInvalid = 3 };

struct Streams {
    std::ostream& log;
    std::ostream& err;
};

/// steady_state.json + steady_state.csv in config.output. On non-convergence
/// writes solver_diagnostics.json and returns 2.
int cmdSolve(const RunConfig& config, Streams io);

/// suite: "inequalities", "regularity" or "all". Reuses steady_state.json when its
/// state hash matches the config, solves otherwise. Writes check_report.json.
int cmdCheck(const RunConfig& config, const std::string& suite, Streams io);

/// Perturbed-ensemble experiment: stability.csv, stability_summary.json and
/// ensemble_final.csv.
int cmdEvolve(const RunConfig& config, Streams io);

/// param: "M", "k" or "Mext". One solve per value in <output>/<param>_<value>,
/// aggregated into <output>/sweep.csv.
int cmdSweep(const RunConfig& config, const std::string& param, const std::vector<double>& values, Streams io);

/// Runs `command` and maps escaping exceptions to exit codes.
int guarded(Streams io, const std::function<int()>& command);

}  // namespace flatvp::cli

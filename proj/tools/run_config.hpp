#pragma once

// JSON run configuration of the command-line front end. Every key is optional;
// absent keys take the defaults below and unknown keys are rejected.
//
//   {
//     "profile":  {"kind": "polytrope", "k": 0.5},
//     "M": 1.0,
//     "external": {"kind": "kuzmin", "params": {"M": 1.0, "a": 1.0}},
//     "grid":     {"mode": "uniform", "n": 512, "r_max": "auto"},
//     "solver":   {"method": "newton", "omega": 0.5, "tol": 1e-10, "max_iter": 500},
//     "dynamics": {"N": 10000, "dt": 1e-3, "t_end": 10, "delta_pert": 0.01,
//                  "softening": 0, "field_mode": "radial-binned", "samples": 50,
//                  "time_unit": "dynamical", "max_step_factor": 1},
//     "checks":   {"hls_constant": 3.5449, "corpus_size": 50, "corpus_seed": 2024, ...},
//     "seed": 1,
//     "output": "out"
//   }

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "flatvp/checks.hpp"
#include "flatvp/dynamics.hpp"

namespace flatvp::cli {

/// Invalid configuration; the message starts with the offending field.
class ConfigError : public DomainError {
public:
    ConfigError(const std::string& field, const std::string& what)
        : DomainError(field + ": " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct GridConfig {
    std::string mode = "uniform";
    std::size_t n = 512;
    std::optional<double> rMax;  // empty: 1.5 R0 of a pilot solve
    double rMin = 0.0;           // geometric grids only
};

struct SolverConfig {
    std::string method = "newton";
    double omega = 0.5;
    double tol = 1e-10;
    int maxIter = 500;
};

struct DynamicsConfig {
    std::size_t particles = 10000;
    double dt = 1e-3;
    double tEnd = 10.0;
    double deltaPert = 0.01;
    double softening = 0.0;
    std::string fieldMode = "radial-binned";
    int samples = 50;
    std::string timeUnit = "dynamical";
    double maxStepFactor = 1.0;
};

struct ChecksConfig {
    double hlsConstant = kHlsConstant;
    std::size_t corpusSize = 50;
    std::uint64_t corpusSeed = 2024;
    double massTol = 1e-6;
    double residualTol = 1e-6;
    double identityTol = 1e-5;
    double slopeTol = 1e-5;
    int probeTrials = 100;
};

struct RunConfig {
    nlohmann::json profile = {{"kind", "polytrope"}, {"k", 0.5}};
    double mass = 1.0;
    nlohmann::json external = {{"kind", "none"}, {"params", nlohmann::json::object()}};
    GridConfig grid;
    SolverConfig solver;
    DynamicsConfig dynamics;
    ChecksConfig checks;
    std::uint64_t seed = 1;
    std::string output = "out";

    /// Parses and validates; throws ConfigError.
    static RunConfig fromJson(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);

    /// Full configuration with defaults filled in (keys sorted, so canonical).
    nlohmann::json toJson() const;
    /// Re-runs every range check (after flags or sweeps changed fields).
    void validate() const;

    /// FNV-1a of the canonical JSON without the output directory, as 16 hex digits.
    std::string hash() const;
    /// Same over the fields that determine the steady state only.
    std::string stateHash() const;

    MicroProfile micro() const;
    ExternalDensity externalDensity() const;
    /// Grid of the solve; resolves r_max = "auto" with a pilot solve.
    GridPtr makeGrid() const;
    SolverOptions solverOptions() const;
    StabilityOptions stabilityOptions() const;
    CheckOptions checkOptions() const;
};

std::string fnv1a(const std::string& text);

}  // namespace flatvp::cli

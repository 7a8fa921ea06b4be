#pragma once

// Experiment configs and the solve / verify / sweep / selfcheck pipelines.
// The config grammar is documented in README.md.

#include "degpar/field.hpp"
#include "degpar/forcing.hpp"
#include "degpar/paths.hpp"
#include "degpar/profiles.hpp"
#include "degpar/verify.hpp"
#include "degpar/weights.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace degpar {

struct McSpec {
    bool enabled = false;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    std::vector<Probe> probes;  // empty: 4 node times x 4 grid points
    double z_threshold = 3.0;
    double min_agreement = 0.95;
};

struct RescalingSpec {
    std::vector<double> lambdas{0.5, 1.0, 2.0, 10.0};
    std::vector<std::string> profiles;  // empty: every profile
    double max_spread = 0.02;
};

struct ExperimentConfig {
    int dimension = 2;
    double horizon = 1.0;
    std::vector<CoefficientProfile> profiles;

    std::optional<Forcing> forcing;            // symbolic
    std::optional<SpaceTimeField> forcing_samples;  // raw samples on midpoints

    int n = 64;
    std::optional<double> halfwidth;  // empty: truncation rule
    int cells = 128;
    bool refine = true;
    int max_refinements = 2;

    std::vector<double> ps{2.0};
    std::vector<double> qs{2.0};
    std::vector<double> betas{0.0};
    Weight weight = Weight::constant();
    CheckOptions options{};

    McSpec mc{};
    RescalingSpec rescaling{};
    std::string out_dir = "out";
    std::string source;  // the parsed config, echoed into reports.json
};

/// Parses JSON text; relative file paths resolve against `base_dir`.
/// Throws Error{config} or Error{admissibility} with a message naming the key.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

enum class Command { solve, verify, sweep, selfcheck };

/// Runs `command` and writes its files under `out_dir`. Returns 0 when every
/// non-vacuous check passed, 1 otherwise (files are written either way).
int run(const ExperimentConfig& config, Command command, const std::string& out_dir,
        std::ostream& log);

/// Acceptance criteria at reduced resolution (n = 64, M = 64, 1e4 paths);
/// writes selfcheck.csv. Returns 0 when all pass.
int selfcheck(const std::string& out_dir, std::ostream& log);

/// %.17g, with "inf" / "-inf" / "nan".
std::string csv_number(double v);

}  // namespace degpar

#include "degpar/error.hpp"
#include "degpar/runner.hpp"

#include "CLI11.hpp"

#include <omp.h>

#include <cstdlib>
#include <iostream>
#include <optional>

namespace {

// Exit codes: 0 all non-vacuous checks pass, 1 some check failed, 2 bad config.
constexpr int kConfigError = 2;

struct Flags {
    std::string config;
    std::optional<int> threads;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
};

void add_flags(CLI::App* sub, Flags& flags, bool needs_config) {
    auto* opt = sub->add_option("--config", flags.config, "experiment config (JSON)");
    if (needs_config) opt->required();
    sub->add_option("--threads", flags.threads, "OpenMP threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", flags.out, "output directory (overrides DEGPAR_OUT and the config)");
    sub->add_option("--seed", flags.seed, "Monte Carlo seed (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact solutions, explicit-constant estimates and Monte Carlo checks for degenerate parabolic equations"};
    app.require_subcommand(1);
    Flags flags;
    auto* solve = app.add_subcommand("solve", "solve every profile and dump f and u");
    auto* verify = app.add_subcommand("verify", "check every estimate and the Monte Carlo agreement");
    auto* sweep = app.add_subcommand("sweep", "check every estimate and the time-rescaling invariance");
    auto* selfcheck = app.add_subcommand("selfcheck", "acceptance criteria at reduced resolution");
    for (auto* sub : {solve, verify, sweep}) add_flags(sub, flags, true);
    add_flags(selfcheck, flags, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }
    if (flags.threads) omp_set_num_threads(*flags.threads);

    std::string out_dir;
    if (const char* env = std::getenv("DEGPAR_OUT")) out_dir = env;
    if (flags.out) out_dir = *flags.out;

    try {
        if (selfcheck->parsed()) {
            return degpar::selfcheck(out_dir.empty() ? "selfcheck" : out_dir, std::cerr);
        }
        degpar::ExperimentConfig cfg = degpar::load_config(flags.config);
        if (flags.seed) cfg.mc.seed = *flags.seed;
        if (out_dir.empty()) out_dir = cfg.out_dir;
        const auto command = solve->parsed()    ? degpar::Command::solve
                             : verify->parsed() ? degpar::Command::verify
                                                : degpar::Command::sweep;
        return degpar::run(cfg, command, out_dir, std::cerr);
    } catch (const degpar::Error& e) {
        std::cerr << "degpar: " << e.what() << "\n";
        const auto kind = e.kind();
        return kind == degpar::ErrorKind::config || kind == degpar::ErrorKind::admissibility ? kConfigError : 1;
    } catch (const std::exception& e) {
        std::cerr << "degpar: " << e.what() << "\n";
        return 1;
    }
}

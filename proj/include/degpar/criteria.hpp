#pragma once

// The end-to-end checks, parameterized by resolution so that the acceptance
// binary (full resolution) and `selfcheck` (reduced) share one implementation.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace degpar {

struct Resolution {
    int cross_n = 64;           // solver cross-validation grid
    int cross_cells = 32;
    std::size_t cross_paths = 100000;
    int verify_n = 128;         // estimate suites (T = 3)
    int verify_cells = 96;
    double verify_variance = 4.0;  // bump variance; must stay resolved at verify_n
    int rescale_n = 64;
    int rescale_cells = 320;    // base cells; lambda = 10 keeps 32
    int transform_n = 64;
    int transform_cells = 48;
    std::size_t split_paths = 100000;
    int split_cells = 16;
    int random_weights = 100;
    std::uint64_t seed = 20240607;

    static Resolution full() { return {}; }
    /// n = 64, M = 64, 1e4 paths.
    static Resolution reduced();
};

struct CriterionResult {
    int number = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

inline constexpr int kCriterionCount = 9;

CriterionResult solver_cross_validation(const Resolution& res);
CriterionResult lp_contraction_suite(const Resolution& res);
CriterionResult explicit_constant_suite(const Resolution& res);
CriterionResult sup_constant_anchor(const Resolution& res);
CriterionResult improper_dichotomy(const Resolution& res);
CriterionResult rescaling_invariance(const Resolution& res);
CriterionResult splitting_law(const Resolution& res);
CriterionResult transform_equivalence(const Resolution& res);
CriterionResult weight_checks(const Resolution& res);

/// Runs the listed criteria (1-based; empty means all), in order.
std::vector<CriterionResult> run_criteria(const Resolution& res, std::span<const int> which = {});

}  // namespace degpar

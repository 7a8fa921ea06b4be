#pragma once

// The canonical d = 2 profile suite:
//   identity     A = I
//   anisotropic  A = diag(1, 4)
//   window       A = I on [0, 1) and [2, inf), A = 0 on [1, 2)
//   unbounded    A = (1 + t^{-1/2}) I
//   rotating     A = R(t) diag(1, 3) R(t)^T, R rotation by angle t
// each optionally with b = (1, -1) and c = +1 or c = -1.

#include "degpar/forcing.hpp"
#include "degpar/profiles.hpp"

#include <string>
#include <vector>

namespace degpar {

enum class LowerOrder { none, growth, decay };  // c = 0 / +1 / -1, b = (1, -1) when c != 0

CoefficientProfile canonical_profile(const std::string& name, double horizon);
const std::vector<std::string>& canonical_names();
CoefficientProfile with_lower_order(const CoefficientProfile& profile, LowerOrder variant);

/// Five plain profiles, or all fifteen (plain, growth, decay per profile).
std::vector<CoefficientProfile> canonical_suite(double horizon, bool with_variants);

/// Centred bump amplitude * N(0, variance I) switched on over `window`.
Forcing bump_forcing(int dimension, double variance, TimeSupport window = {}, double amplitude = 1.0);

}  // namespace degpar

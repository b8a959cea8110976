#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace head::selfcheck {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteReport {
  std::vector<CheckResult> results;
  bool all_passed() const {
    for (const CheckResult& r : results) {
      if (!r.passed) return false;
    }
    return true;
  }
};

// exp/log round trips (tolerance 1e-6), geodesic normalization (1e-8),
// Lorentz<->Poincare isometry (1e-6), manifold constraint of exp outputs
// (1e-9), plus symmetry/identity spot checks.
SuiteReport geometry_suite(std::size_t samples = 1000, std::uint64_t seed = 7);

// Central finite differences (h = 1e-5, relative error < 1e-4) for every
// taped operator at `points_per_op` random points; exact-negation and
// determinism contracts for grl.
SuiteReport autodiff_suite(std::size_t points_per_op = 100, std::uint64_t seed = 11);

// The three analytic model properties:
//  (a) per-node gradient-norm ratio (max(d)-d)/max(d) under detached roots,
//  (b) raw-feature norm growth on the antipodal toy versus unit-norm
//      discriminator inputs across 200 aligned training steps,
//  (c) bitwise forward invariance and gradient invariance (<= 1e-10) of the
//      aligned discriminator under input rescaling, with the unaligned path
//      demonstrably scale-sensitive.
SuiteReport theorem_suite(std::uint64_t seed = 13);

// All of the above, concatenated.
SuiteReport run_all(std::uint64_t seed = 7);

}  // namespace head::selfcheck

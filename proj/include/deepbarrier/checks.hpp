#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace deepbarrier {

struct CheckLine {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckLine> lines;

  bool passed() const;
  std::string to_text() const;
};

/// Backprop vs central finite differences (step 1e-5): single forward/backward
/// on a 2-21-1 net with a batch of 8 (tolerance 1e-4), and the full unrolled
/// BSDE loss on 5 steps, batch 4, width 4 (tolerance 1e-3). Every BN mode,
/// `seeds` seeds each.
SuiteReport check_gradients(int seeds = 5);

/// Terminal-bridge vs path-bridge estimators on eight grid cases, combined
/// 3 standard errors.
SuiteReport check_estimators(std::int64_t paths = 1'000'000, std::uint64_t seed = 11);

/// Closed form vs terminal-bridge Monte Carlo on all 72 grid cases (3 SE) and
/// vs quadrature on 12 cases (1e-6 relative).
SuiteReport check_analytic(std::int64_t paths = 2'000'000, std::uint64_t seed = 7);

/// Conditional-expectation identity on the die-and-coin model.
SuiteReport check_lemma2(std::int64_t samples = 1'000'000, std::uint64_t seed = 5);

/// Dispatches "gradients", "estimators", "analytic", "lemma2".
SuiteReport run_check_suite(std::string_view name);

}  // namespace deepbarrier

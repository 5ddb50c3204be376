#pragma once

#include <cstdint>
#include <functional>

#include "deepbarrier/analytic.hpp"
#include "deepbarrier/market.hpp"

namespace deepbarrier {

enum class McEstimator { terminal_bridge, path_bridge };

struct McConfig {
  std::int64_t n_paths = 1'000'000;
  std::uint64_t seed = 0;
  McEstimator estimator = McEstimator::terminal_bridge;
  /// Exact lognormal sub-steps per grid step (path-bridge only).
  int substeps = 1;
  /// Worker threads; 0 means hardware concurrency. Results do not depend on it.
  unsigned workers = 0;

  void validate() const;
};

/// Samples X_T exactly and averages the discounted modified payoff.
PriceEstimate price_terminal_bridge(const MarketCase& c, const McConfig& cfg);

/// Simulates exact lognormal paths on `grid` (refined by cfg.substeps) and
/// weights each path by the product of per-step bridge survival
/// probabilities; a monitoring point at or above the barrier zeroes the path.
PriceEstimate price_path_bridge(const MarketCase& c, const TimeGrid& grid, const McConfig& cfg);

/// Dispatches on cfg.estimator; the path estimator uses build_time_grid(c).
PriceEstimate price_monte_carlo(const MarketCase& c, const McConfig& cfg);

/// Both sides of E[f(X)|A] P(A) = E[f(X) P(A|X)] on a die-and-coin model:
/// X uniform on {1..6}, P(A | X = k) = event_probability(k).
struct Lemma2Report {
  double exact_lhs = 0.0;
  double exact_rhs = 0.0;
  double simulated_lhs = 0.0;
  double simulated_rhs = 0.0;
  double combined_std_error = 0.0;
  bool exact_equal = false;
  bool simulated_agree = false;

  bool passed() const { return exact_equal && simulated_agree; }
};

struct Lemma2Model {
  std::function<double(int)> f = [](int k) { return double(k) * k; };
  std::function<double(int)> event_probability = [](int k) { return k / 10.0; };
};

Lemma2Report lemma2_property_check(std::int64_t sample_size, std::uint64_t seed,
                                   const Lemma2Model& model = {});

}  // namespace deepbarrier

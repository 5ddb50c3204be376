#pragma once

#include <cstdint>
#include <Eigen/Dense>
#include <json.hpp>

namespace deepbarrier {

/// One up-and-out call pricing problem under constant-coefficient GBM.
/// `drift` is the real-world drift of the simulated process and `rate` the
/// discount rate; they are allowed to differ.
struct MarketCase {
  double spot = 0.0;
  double strike = 0.0;
  double barrier = 0.0;
  double maturity = 0.0;
  double rate = 0.0;
  double drift = 0.0;
  double volatility = 0.0;

  /// Throws std::invalid_argument unless spot, strike, barrier, maturity and
  /// volatility are strictly positive and every field is finite.
  void validate() const;

  /// True when the payoff region (strike, barrier) is empty or the spot has
  /// already reached the barrier; such cases price to exactly zero.
  bool knocked_out_or_empty() const { return barrier <= strike || spot >= barrier; }

  friend bool operator==(const MarketCase&, const MarketCase&) = default;
};

/// Builds and validates a case.
MarketCase make_case(double spot, double strike, double barrier, double maturity,
                     double volatility, double rate = 0.0, double drift = 0.0);

void to_json(nlohmann::json& j, const MarketCase& c);
/// Validates after parsing.
void from_json(const nlohmann::json& j, MarketCase& c);

/// Uniform grid on [0, T].
struct TimeGrid {
  int n_steps = 0;
  double maturity = 0.0;
  double dt = 0.0;

  static TimeGrid uniform(double maturity, int n_steps);

  /// t_i = i * dt, with t_N pinned to the maturity.
  double time(int i) const { return i == n_steps ? maturity : i * dt; }
  double time_to_maturity(int i) const { return maturity - time(i); }
};

inline constexpr int kMinTimeSteps = 80;
inline constexpr double kVariancePerStep = 0.025;

/// Variance-based step count: max(80, ceil(sigma^2 T / 0.025)).
TimeGrid build_time_grid(const MarketCase& c);

/// Simulated forward paths. Column i of `values` holds every path at t_i;
/// column i of `increments` holds W(t_{i+1}) - W(t_i).
struct PathBatch {
  Eigen::MatrixXd values;      // batch_size x (n_steps + 1)
  Eigen::MatrixXd increments;  // batch_size x n_steps
  std::uint64_t seed = 0;

  Eigen::Index batch_size() const { return values.rows(); }
  Eigen::Index n_steps() const { return increments.cols(); }
  auto terminal() const { return values.col(values.cols() - 1); }
};

/// Multiplicative Euler scheme X += b X dt + sigma X dW. Path p draws from
/// the stream keyed by (seed, p). Negative values are not clamped.
PathBatch simulate_paths(const MarketCase& c, const TimeGrid& grid, Eigen::Index batch_size,
                         std::uint64_t seed);

/// Euler recursion on caller-supplied increments (same scheme as
/// simulate_paths).
PathBatch euler_paths(const MarketCase& c, const TimeGrid& grid, Eigen::MatrixXd increments);

/// Exact lognormal terminal draws x0 exp((b - sigma^2/2) T + sigma sqrt(T) z).
/// Sample i uses stream (seed, i).
Eigen::VectorXd sample_terminal_exact(const MarketCase& c, Eigen::Index batch_size,
                                      std::uint64_t seed);

}  // namespace deepbarrier

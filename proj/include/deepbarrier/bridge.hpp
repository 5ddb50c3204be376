#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <type_traits>

#include <Eigen/Dense>

#include "deepbarrier/market.hpp"

namespace deepbarrier {

/// Endpoints of a GBM segment, a level, and the segment's total log-variance
/// sigma^2 * dt.
template <typename Scalar>
struct BridgeQuery {
  Scalar left;
  Scalar right;
  Scalar level;
  Scalar variance;
};

/// xi(y) = exp(-2 ln(y/left) ln(y/right) / variance), unclamped. For a level
/// above both endpoints this is the probability the bridge touches the level.
template <typename Scalar>
Scalar bridge_crossing_factor(const BridgeQuery<Scalar>& q) {
  using std::exp;
  using std::log;
  if (!(q.left > 0) || !(q.right > 0) || !(q.level > 0) || !(q.variance > 0)) {
    throw std::domain_error("bridge_crossing_factor: inputs must be > 0");
  }
  return exp(-2 * log(q.level / q.left) * log(q.level / q.right) / q.variance);
}

/// P(max over the segment < level). Zero if either endpoint is at or above
/// the level.
template <typename Scalar>
Scalar survival_probability_up(const BridgeQuery<Scalar>& q) {
  const Scalar xi = bridge_crossing_factor(q);
  if (q.left >= q.level || q.right >= q.level) return Scalar(0);
  return std::clamp(Scalar(1) - xi, Scalar(0), Scalar(1));
}

/// P(min over the segment > level). Zero if either endpoint is at or below
/// the level.
template <typename Scalar>
Scalar survival_probability_down(const BridgeQuery<Scalar>& q) {
  const Scalar xi = bridge_crossing_factor(q);
  if (q.left <= q.level || q.right <= q.level) return Scalar(0);
  return std::clamp(Scalar(1) - xi, Scalar(0), Scalar(1));
}

/// Terminal payoff with the barrier folded in, for pricing at t = 0:
/// (X - K)^+ 1{X < B} (1 - exp(-2 ln(B/x0) ln(B/X) / (sigma^2 T))).
/// Nonpositive X (possible on Euler paths) pays zero.
template <typename Scalar>
  requires(!std::is_base_of_v<Eigen::EigenBase<Scalar>, Scalar>)
Scalar modified_payoff(const MarketCase& c, Scalar terminal) {
  const Scalar spot(c.spot), strike(c.strike), barrier(c.barrier);
  if (spot >= barrier) return Scalar(0);
  if (!(terminal > strike) || !(terminal < barrier)) return Scalar(0);
  const Scalar variance(c.volatility * c.volatility * c.maturity);
  const Scalar survival = survival_probability_up(BridgeQuery<Scalar>{spot, terminal, barrier, variance});
  return (terminal - strike) * survival;
}

/// Element-wise modified payoff over a column of terminal values.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> modified_payoff(
    const MarketCase& c, const Eigen::DenseBase<Derived>& terminal) {
  using Scalar = typename Derived::Scalar;
  return terminal.derived().unaryExpr([&c](Scalar x) { return modified_payoff(c, x); });
}

}  // namespace deepbarrier

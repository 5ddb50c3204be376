#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "deepbarrier/bridge.hpp"
#include "deepbarrier/market.hpp"
#include "deepbarrier/rng.hpp"

using namespace deepbarrier;

namespace {

struct OracleEstimate {
  double p = 0.0;
  double se = 0.0;
};

// Fraction of log-space Brownian bridges from ln(left) to ln(right) with total
// variance `variance` whose maximum on `substeps` points exceeds ln(level).
// The level is shifted down by 0.5826 sigma sqrt(delta) (Broadie-Glasserman-Kou
// continuity correction) so the discrete maximum targets the continuous one.
OracleEstimate fine_grid_crossing(double left, double right, double level, double variance, int paths,
                                  int substeps, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  const double a = std::log(left), b = std::log(right);
  const double step_sd = std::sqrt(variance / substeps);
  const double barrier = std::log(level) - 0.5826 * step_sd;
  std::vector<double> w(substeps + 1);
  int hits = 0;
  for (int p = 0; p < paths; ++p) {
    w[0] = 0.0;
    for (int k = 1; k <= substeps; ++k) w[k] = w[k - 1] + step_sd * normal(gen);
    for (int k = 1; k < substeps; ++k) {
      const double frac = double(k) / substeps;
      if (a + w[k] - frac * w[substeps] + frac * (b - a) >= barrier) {
        ++hits;
        break;
      }
    }
  }
  const double ph = double(hits) / paths;
  return {ph, std::sqrt(std::max(ph * (1 - ph), 1.0 / paths) / paths)};
}

}  // namespace

TEST(CrossingFactor, LeftEndpointOnLevelIsCertain) {
  EXPECT_DOUBLE_EQ(bridge_crossing_factor(BridgeQuery<double>{40, 25, 40, 0.08}), 1.0);
}

TEST(CrossingFactor, VanishesForFarLevel) {
  EXPECT_LT(bridge_crossing_factor(BridgeQuery<double>{20, 25, 1e12, 0.08}), 1e-300);
}

TEST(CrossingFactor, ReferenceValue) {
  const double xi = bridge_crossing_factor(BridgeQuery<double>{20, 25, 40, 0.4 * 0.4 * 0.5});
  EXPECT_NEAR(xi, std::exp(-2 * std::log(2.0) * std::log(1.6) / 0.08), 1e-13 * xi);
  EXPECT_NEAR(xi, 2.9e-4, 0.05e-4);
}

TEST(CrossingFactor, SymmetricInEndpoints) {
  RandomStream rng(1, 0);
  for (int i = 0; i < 200; ++i) {
    const double l = 1 + 50 * rng.uniform(), r = 1 + 50 * rng.uniform(), y = 60 * rng.uniform() + 1, v = rng.uniform();
    EXPECT_DOUBLE_EQ(bridge_crossing_factor(BridgeQuery<double>{l, r, y, v}),
                     bridge_crossing_factor(BridgeQuery<double>{r, l, y, v}));
  }
}

TEST(CrossingFactor, RejectsNonPositiveInputs) {
  EXPECT_THROW(bridge_crossing_factor(BridgeQuery<double>{0, 25, 40, 0.08}), std::domain_error);
  EXPECT_THROW(bridge_crossing_factor(BridgeQuery<double>{20, 25, 40, 0}), std::domain_error);
}

TEST(Survival, EndpointAtOrAboveLevelIsZero) {
  EXPECT_EQ(survival_probability_up(BridgeQuery<double>{40, 25, 40, 0.08}), 0.0);
  EXPECT_EQ(survival_probability_up(BridgeQuery<double>{20, 45, 40, 0.08}), 0.0);
  EXPECT_EQ(survival_probability_down(BridgeQuery<double>{20, 45, 25, 0.08}), 0.0);
}

TEST(Survival, FarLevelSurvives) {
  EXPECT_DOUBLE_EQ(survival_probability_up(BridgeQuery<double>{20, 25, 1e12, 0.08}), 1.0);
}

TEST(Survival, MirroredDownLevel) {
  // A down level at 10 for endpoints 20, 25 mirrors an up level at 20*25/10 in log space.
  const double down = survival_probability_down(BridgeQuery<double>{20, 25, 10, 0.08});
  const double up = survival_probability_up(BridgeQuery<double>{1 / 20.0, 1 / 25.0, 1 / 10.0, 0.08});
  EXPECT_NEAR(down, up, 1e-15);
}

TEST(Survival, MatchesFineGridBridgeAtModerateLevel) {
  const BridgeQuery<double> q{20, 25, 30, 0.08};
  const OracleEstimate mc = fine_grid_crossing(20, 25, 30, 0.08, 20000, 1000, 17);
  EXPECT_LT(std::abs(bridge_crossing_factor(q) - mc.p), 4 * mc.se) << "mc " << mc.p;
}

TEST(Survival, MatchesFineGridBridgeAtReferenceLevel) {
  const BridgeQuery<double> q{20, 25, 40, 0.08};
  const OracleEstimate mc = fine_grid_crossing(20, 25, 40, 0.08, 200000, 1000, 18);
  EXPECT_LT(std::abs(bridge_crossing_factor(q) - mc.p), 4 * mc.se) << "mc " << mc.p;
  EXPECT_LT(std::abs(survival_probability_up(q) - (1 - mc.p)), 4 * mc.se);
}

TEST(Survival, MatchesFineGridBridgeOnRandomTuples) {
  RandomStream rng(3, 0);
  for (int i = 0; i < 10; ++i) {
    const double level = 30 + 20 * rng.uniform();
    const double left = level * (0.5 + 0.45 * rng.uniform());
    const double right = level * (0.5 + 0.45 * rng.uniform());
    const double variance = 0.02 + 0.3 * rng.uniform();
    const BridgeQuery<double> q{left, right, level, variance};
    const OracleEstimate mc = fine_grid_crossing(left, right, level, variance, 4000, 1000, 100 + i);
    EXPECT_LT(std::abs(bridge_crossing_factor(q) - mc.p), 4 * mc.se)
        << "tuple " << left << ' ' << right << ' ' << level << ' ' << variance << " mc " << mc.p;
  }
}

TEST(ModifiedPayoff, BoundedByCallPayoff) {
  const MarketCase c = make_case(22, 23, 40, 0.5, 0.4);
  const double h = modified_payoff(c, 30.0);
  EXPECT_GT(h, 0.0);
  EXPECT_LT(h, 7.0);
}

TEST(ModifiedPayoff, KilledAtAndAboveBarrier) {
  const MarketCase c = make_case(22, 23, 40, 0.5, 0.4);
  EXPECT_EQ(modified_payoff(c, 45.0), 0.0);
  EXPECT_EQ(modified_payoff(c, 40.0), 0.0);
  EXPECT_NEAR(modified_payoff(c, 40.0 - 1e-9), 0.0, 1e-6);
  EXPECT_EQ(modified_payoff(c, 20.0), 0.0);
}

TEST(ModifiedPayoff, ReferenceValue) {
  const MarketCase c = make_case(22, 23, 40, 0.5, 0.4);
  const double expected = 7.0 * (1 - std::exp(-2 * std::log(40.0 / 22) * std::log(40.0 / 30) / 0.08));
  EXPECT_NEAR(modified_payoff(c, 30.0), expected, 1e-13);
  const OracleEstimate mc = fine_grid_crossing(22, 30, 40, 0.08, 100000, 1000, 19);
  EXPECT_LT(std::abs(modified_payoff(c, 30.0) - 7.0 * (1 - mc.p)), 4 * 7.0 * mc.se);
}

TEST(ModifiedPayoff, SpotAtBarrierIsZero) {
  const MarketCase c = make_case(40, 23, 40, 0.5, 0.4);
  EXPECT_EQ(modified_payoff(c, 30.0), 0.0);
}

TEST(ModifiedPayoff, ContinuousInsideRange) {
  const MarketCase c = make_case(22, 23, 40, 0.5, 0.4);
  for (double x = 23.5; x < 39.9; x += 0.37) {
    EXPECT_NEAR(modified_payoff(c, x), modified_payoff(c, x + 1e-9), 1e-7);
  }
}

TEST(ModifiedPayoff, VectorOverloadMatchesScalar) {
  const MarketCase c = make_case(22, 23, 40, 0.5, 0.4);
  Eigen::VectorXd x(5);
  x << 10, 23, 30, 39, 50;
  const Eigen::VectorXd h = modified_payoff(c, x);
  for (Eigen::Index i = 0; i < x.size(); ++i) EXPECT_EQ(h[i], modified_payoff(c, x[i]));
}

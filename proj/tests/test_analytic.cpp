#include <cmath>

#include <gtest/gtest.h>

#include "deepbarrier/analytic.hpp"
#include "deepbarrier/harness.hpp"
#include "deepbarrier/mc.hpp"

using namespace deepbarrier;

TEST(NormalCdf, KnownValues) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(normal_cdf(-8.0), 6.220960574271785e-16, 1e-28);
}

TEST(VanillaCall, DeterministicLimit) {
  EXPECT_NEAR(bs_vanilla_call(make_case(32, 23, 1e9, 0.5, 1e-8)).value, 9.0, 1e-9);
}

TEST(VanillaCall, ZeroStrikeIsForward) {
  EXPECT_NEAR(bs_vanilla_call(make_case(22, 1e-12, 1e9, 0.5, 0.4)).value, 22.0, 1e-9);
}

TEST(VanillaCall, MatchesExactTerminalSamples) {
  const MarketCase c = make_case(22, 23, 40, 0.5, 0.4);
  const Eigen::ArrayXd payoff = (sample_terminal_exact(c, 10'000'000, 21).array() - 23.0).max(0.0);
  const double mean = payoff.mean();
  const double se = std::sqrt((payoff - mean).square().sum() / (payoff.size() - 1.0) / payoff.size());
  EXPECT_LT(std::abs(bs_vanilla_call(c).value - mean), 3 * se);
}

TEST(UpOutCall, EmptyPayoffRegionIsZero) {
  EXPECT_EQ(up_out_call(make_case(22, 23, 23, 0.5, 0.4)).value, 0.0);
  EXPECT_EQ(up_out_call(make_case(22, 23, 20, 0.5, 0.4)).value, 0.0);
  EXPECT_EQ(up_out_call(make_case(45, 23, 40, 0.5, 0.4)).value, 0.0);
}

TEST(UpOutCall, FarBarrierIsVanilla) {
  for (const auto& c : GridSpec{}.cases()) {
    MarketCase far = c;
    far.barrier = 1e6 * c.spot;
    const double vanilla = bs_vanilla_call(c).value;
    EXPECT_NEAR(up_out_call(far).value, vanilla, 1e-8 * vanilla);
  }
  const MarketCase drifted = make_case(22, 23, 22e6, 1.0, 0.3, 0.03, 0.05);
  EXPECT_NEAR(up_out_call(drifted).value, bs_vanilla_call(drifted).value, 1e-8 * bs_vanilla_call(drifted).value);
}

TEST(UpOutCall, DominatedByVanillaAndMonotoneInBarrier) {
  for (const auto& c : GridSpec{}.cases()) {
    const double v = up_out_call(c).value;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, bs_vanilla_call(c).value);
    MarketCase higher = c;
    higher.barrier *= 1.1;
    EXPECT_LE(v, up_out_call(higher).value + 1e-12);
  }
}

TEST(UpOutCall, MatchesQuadratureWithRateAndDrift) {
  for (const auto& c : {make_case(22, 23, 40, 0.5, 0.4, 0.05, 0.02), make_case(27, 23, 100, 2.0, 0.8, 0.0, -0.1),
                        make_case(17, 23, 60, 2.0, 1.2, 0.03, 0.03)}) {
    const double closed = up_out_call(c).value;
    EXPECT_NEAR(up_out_call_quadrature(c).value, closed, 1e-6 * closed);
  }
}

TEST(UpOutCall, PinnedByTerminalMonteCarlo) {
  const MarketCase c = make_case(22, 23, 40, 0.5, 0.4);
  McConfig cfg;
  cfg.n_paths = 20'000'000;
  cfg.seed = 2024;
  const PriceEstimate mc = price_terminal_bridge(c, cfg);
  EXPECT_LT(std::abs(up_out_call(c).value - mc.value), 3 * mc.std_error)
      << "closed " << up_out_call(c).value << " mc " << mc.value << " se " << mc.std_error;
}

TEST(PriceEstimateJson, RoundTripAndMethodNames) {
  PriceEstimate p{1.25, PricingMethod::mc_path, 0.01, {{"paths", 10}}};
  const nlohmann::json j = p;
  EXPECT_EQ(j.at("method"), "mc-path");
  const PriceEstimate back = j.get<PriceEstimate>();
  EXPECT_EQ(back.value, 1.25);
  EXPECT_EQ(back.method, PricingMethod::mc_path);
  EXPECT_EQ(back.diagnostics.at("paths"), 10);
  for (auto m : {PricingMethod::analytic, PricingMethod::mc_terminal, PricingMethod::mc_path, PricingMethod::bsde})
    EXPECT_EQ(parse_pricing_method(to_string(m)), m);
  EXPECT_THROW(parse_pricing_method("fd"), std::invalid_argument);
}

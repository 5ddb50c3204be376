#include <cmath>

#include <gtest/gtest.h>

#include "deepbarrier/market.hpp"

using namespace deepbarrier;

TEST(TimeGridRule, VarianceBasedStepCount) {
  EXPECT_EQ(build_time_grid(make_case(22, 23, 40, 0.5, 0.4)).n_steps, 80);
  EXPECT_EQ(build_time_grid(make_case(22, 23, 40, 2.0, 0.8)).n_steps, 80);
  EXPECT_EQ(build_time_grid(make_case(22, 23, 40, 2.0, 1.2)).n_steps, 116);
}

TEST(TimeGridRule, StepsCoverMaturity) {
  for (double t : {0.5, 2.0}) {
    for (double v : {0.4, 0.8, 1.2}) {
      const TimeGrid g = build_time_grid(make_case(22, 23, 40, t, v));
      EXPECT_NEAR(g.dt * g.n_steps, t, 1e-12);
      EXPECT_EQ(g.time(g.n_steps), t);
      EXPECT_EQ(g.time_to_maturity(0), t);
      EXPECT_GE(g.n_steps, kMinTimeSteps);
    }
  }
}

TEST(TimeGridRule, RejectsEmptyGrid) { EXPECT_THROW(TimeGrid::uniform(1.0, 0), std::invalid_argument); }

TEST(MarketCaseTest, ValidationRejectsNonPositiveInputs) {
  EXPECT_THROW(make_case(0, 23, 40, 0.5, 0.4), std::invalid_argument);
  EXPECT_THROW(make_case(22, 23, 40, -1, 0.4), std::invalid_argument);
  EXPECT_THROW(make_case(22, 23, 40, 0.5, 0.0), std::invalid_argument);
  EXPECT_THROW(make_case(22, 23, NAN, 0.5, 0.4), std::invalid_argument);
}

TEST(MarketCaseTest, JsonRoundTrip) {
  const MarketCase c = make_case(27, 23, 100, 2.0, 0.4, 0.01, 0.03);
  const nlohmann::json j = c;
  EXPECT_EQ(j.get<MarketCase>(), c);
  const auto partial = nlohmann::json::parse(R"({"spot":22,"strike":23,"barrier":40,"maturity":0.5,"volatility":0.4})");
  EXPECT_EQ(partial.get<MarketCase>().rate, 0.0);
  EXPECT_THROW(nlohmann::json::parse(R"({"spot":22})").get<MarketCase>(), nlohmann::json::exception);
}

TEST(EulerPaths, SingleStepArithmetic) {
  const MarketCase c = make_case(22, 23, 40, 0.1, 0.4);
  Eigen::MatrixXd dw(1, 1);
  dw << 0.5;
  const PathBatch b = euler_paths(c, TimeGrid::uniform(0.1, 1), dw);
  EXPECT_DOUBLE_EQ(b.values(0, 1), 26.4);
}

TEST(EulerPaths, ZeroNoiseZeroDriftIsConstant) {
  const MarketCase c = make_case(22, 23, 40, 0.5, 0.4);
  const TimeGrid g = build_time_grid(c);
  const PathBatch b = euler_paths(c, g, Eigen::MatrixXd::Zero(3, g.n_steps));
  EXPECT_TRUE((b.values.array() == 22.0).all());
}

TEST(EulerPaths, ShapesAndReproducibility) {
  const MarketCase c = make_case(22, 23, 40, 0.5, 0.4);
  const TimeGrid g = build_time_grid(c);
  const PathBatch a = simulate_paths(c, g, 64, 9);
  const PathBatch b = simulate_paths(c, g, 64, 9);
  EXPECT_EQ(a.values.rows(), 64);
  EXPECT_EQ(a.values.cols(), g.n_steps + 1);
  EXPECT_EQ(a.increments.cols(), g.n_steps);
  EXPECT_TRUE((a.values.col(0).array() == 22.0).all());
  EXPECT_TRUE(a.values == b.values);
  EXPECT_TRUE(a.increments == b.increments);
  EXPECT_FALSE(a.values == simulate_paths(c, g, 64, 10).values);
}

TEST(EulerPaths, DriftlessMeanIsSpot) {
  const MarketCase c = make_case(22, 23, 40, 0.5, 0.4);
  const PathBatch b = simulate_paths(c, build_time_grid(c), 20000, 3);
  const Eigen::ArrayXd x = b.terminal();
  const double mean = x.mean();
  const double se = std::sqrt((x - mean).square().sum() / (x.size() - 1) / x.size());
  EXPECT_LT(std::abs(mean - 22.0), 4 * se);
  const double inc_var = b.increments.array().square().mean();
  EXPECT_NEAR(inc_var, build_time_grid(c).dt, 0.02 * build_time_grid(c).dt);
}

TEST(ExactTerminal, LognormalMoments) {
  const MarketCase c = make_case(22, 23, 40, 0.5, 0.4, 0.0, 0.05);
  const Eigen::ArrayXd x = sample_terminal_exact(c, 200000, 4);
  const double mean = x.mean();
  const double se = std::sqrt((x - mean).square().sum() / (x.size() - 1) / x.size());
  EXPECT_LT(std::abs(mean - 22.0 * std::exp(0.05 * 0.5)), 4 * se);
  const Eigen::ArrayXd logs = x.log();
  const double lv = (logs - logs.mean()).square().mean();
  EXPECT_NEAR(lv, 0.16 * 0.5, 0.003);
  EXPECT_TRUE((x > 0).all());
}

TEST(ExactTerminal, SmallVolatilityLimit) {
  const MarketCase c = make_case(22, 23, 40, 0.5, 1e-9, 0.0, 0.1);
  const Eigen::VectorXd x = sample_terminal_exact(c, 4, 1);
  for (double v : x) EXPECT_NEAR(v, 22.0 * std::exp(0.05), 1e-6);
}

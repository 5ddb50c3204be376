#include "deepbarrier/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "deepbarrier/rng.hpp"

namespace deepbarrier {

namespace {

void require_positive(double value, const char* name) {
  if (!std::isfinite(value) || !(value > 0.0)) {
    throw std::invalid_argument(std::string("MarketCase: ") + name +
                                " must be finite and > 0, got " + std::to_string(value));
  }
}

}  // namespace

void MarketCase::validate() const {
  require_positive(spot, "spot");
  require_positive(strike, "strike");
  require_positive(barrier, "barrier");
  require_positive(maturity, "maturity");
  require_positive(volatility, "volatility");
  if (!std::isfinite(rate) || !std::isfinite(drift)) {
    throw std::invalid_argument("MarketCase: rate and drift must be finite");
  }
}

MarketCase make_case(double spot, double strike, double barrier, double maturity,
                     double volatility, double rate, double drift) {
  MarketCase c{spot, strike, barrier, maturity, rate, drift, volatility};
  c.validate();
  return c;
}

void to_json(nlohmann::json& j, const MarketCase& c) {
  j = nlohmann::json{{"spot", c.spot},         {"strike", c.strike},
                     {"barrier", c.barrier},   {"maturity", c.maturity},
                     {"rate", c.rate},         {"drift", c.drift},
                     {"volatility", c.volatility}};
}

void from_json(const nlohmann::json& j, MarketCase& c) {
  c.spot = j.at("spot").get<double>();
  c.strike = j.at("strike").get<double>();
  c.barrier = j.at("barrier").get<double>();
  c.maturity = j.at("maturity").get<double>();
  c.rate = j.value("rate", 0.0);
  c.drift = j.value("drift", 0.0);
  c.volatility = j.at("volatility").get<double>();
  c.validate();
}

TimeGrid TimeGrid::uniform(double maturity, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
  if (!(maturity > 0.0)) throw std::invalid_argument("TimeGrid: maturity must be > 0");
  return TimeGrid{n_steps, maturity, maturity / n_steps};
}

TimeGrid build_time_grid(const MarketCase& c) {
  const double ratio = c.volatility * c.volatility * c.maturity / kVariancePerStep;
  // Absorb representation error so an exact integer ratio is not bumped up.
  const auto by_variance = static_cast<int>(std::ceil(ratio - 1e-9));
  return TimeGrid::uniform(c.maturity, std::max(kMinTimeSteps, by_variance));
}

PathBatch euler_paths(const MarketCase& c, const TimeGrid& grid, Eigen::MatrixXd increments) {
  const Eigen::Index n = grid.n_steps;
  if (increments.cols() != n) throw std::invalid_argument("euler_paths: increments/grid mismatch");
  PathBatch batch;
  batch.values.resize(increments.rows(), n + 1);
  batch.values.col(0).setConstant(c.spot);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto x = batch.values.col(i).array();
    batch.values.col(i + 1) =
        x + c.drift * x * grid.dt + c.volatility * x * increments.col(i).array();
  }
  batch.increments = std::move(increments);
  return batch;
}

PathBatch simulate_paths(const MarketCase& c, const TimeGrid& grid, Eigen::Index batch_size,
                         std::uint64_t seed) {
  if (batch_size < 1) throw std::invalid_argument("simulate_paths: batch_size must be >= 1");
  const double sqrt_dt = std::sqrt(grid.dt);
  Eigen::MatrixXd dw(batch_size, grid.n_steps);
  for (Eigen::Index p = 0; p < batch_size; ++p) {
    RandomStream rng(seed, static_cast<std::uint64_t>(p));
    for (int i = 0; i < grid.n_steps; ++i) dw(p, i) = sqrt_dt * rng.normal();
  }
  PathBatch batch = euler_paths(c, grid, std::move(dw));
  batch.seed = seed;
  return batch;
}

Eigen::VectorXd sample_terminal_exact(const MarketCase& c, Eigen::Index batch_size,
                                      std::uint64_t seed) {
  if (batch_size < 1) throw std::invalid_argument("sample_terminal_exact: batch_size must be >= 1");
  const double log_drift = (c.drift - 0.5 * c.volatility * c.volatility) * c.maturity;
  const double log_vol = c.volatility * std::sqrt(c.maturity);
  Eigen::VectorXd out(batch_size);
  for (Eigen::Index i = 0; i < batch_size; ++i) {
    RandomStream rng(seed, static_cast<std::uint64_t>(i));
    out[i] = c.spot * std::exp(log_drift + log_vol * rng.normal());
  }
  return out;
}

}  // namespace deepbarrier

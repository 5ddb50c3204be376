#include "deepbarrier/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "deepbarrier/bridge.hpp"
#include "deepbarrier/parallel.hpp"
#include "deepbarrier/rng.hpp"

namespace deepbarrier {

void McConfig::validate() const {
  if (n_paths < 2) throw std::invalid_argument("McConfig: n_paths must be >= 2");
  if (substeps < 1) throw std::invalid_argument("McConfig: substeps must be >= 1");
}

namespace {

constexpr std::int64_t kBlockSize = 1 << 14;

// Running mean / sum of squared deviations (Welford), mergeable.
struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    const double total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * o.count / total;
    m2 += o.m2 + delta * delta * count * o.count / total;
    count = total;
  }

  double std_error() const { return count > 1.0 ? std::sqrt(m2 / (count - 1.0) / count) : 0.0; }
};

// Evaluates sample(i) for i in [0, n) in fixed-size blocks and merges the
// block moments in block order, so the result is independent of `workers`.
template <typename Sample>
Moments blocked_moments(std::int64_t n, unsigned workers, Sample&& sample) {
  const auto blocks = static_cast<std::size_t>((n + kBlockSize - 1) / kBlockSize);
  std::vector<Moments> partial(blocks);
  parallel_for(blocks, workers, [&](std::size_t b) {
    const std::int64_t begin = static_cast<std::int64_t>(b) * kBlockSize;
    const std::int64_t end = std::min(n, begin + kBlockSize);
    Moments m;
    for (std::int64_t i = begin; i < end; ++i) m.add(sample(i));
    partial[b] = m;
  });
  Moments total;
  for (const auto& m : partial) total.merge(m);
  return total;
}

PriceEstimate make_estimate(const Moments& m, PricingMethod method, const McConfig& cfg) {
  PriceEstimate out;
  out.value = m.mean;
  out.method = method;
  out.std_error = m.std_error();
  out.diagnostics["paths"] = cfg.n_paths;
  out.diagnostics["seed"] = cfg.seed;
  return out;
}

}  // namespace

PriceEstimate price_terminal_bridge(const MarketCase& c, const McConfig& cfg) {
  c.validate();
  cfg.validate();
  const double discount = std::exp(-c.rate * c.maturity);
  const double log_drift = (c.drift - 0.5 * c.volatility * c.volatility) * c.maturity;
  const double log_vol = c.volatility * std::sqrt(c.maturity);
  Moments m;
  if (!c.knocked_out_or_empty()) {
    m = blocked_moments(cfg.n_paths, cfg.workers, [&](std::int64_t i) {
      RandomStream rng(cfg.seed, static_cast<std::uint64_t>(i));
      const double terminal = c.spot * std::exp(log_drift + log_vol * rng.normal());
      return discount * modified_payoff(c, terminal);
    });
  } else {
    m.count = static_cast<double>(cfg.n_paths);
  }
  PriceEstimate out = make_estimate(m, PricingMethod::mc_terminal, cfg);
  out.diagnostics["estimator"] = "terminal-bridge";
  return out;
}

PriceEstimate price_path_bridge(const MarketCase& c, const TimeGrid& grid, const McConfig& cfg) {
  c.validate();
  cfg.validate();
  const int steps = grid.n_steps * cfg.substeps;
  const double h = grid.maturity / steps;
  const double step_var = c.volatility * c.volatility * h;
  const double log_drift = (c.drift - 0.5 * c.volatility * c.volatility) * h;
  const double log_vol = std::sqrt(step_var);
  const double discount = std::exp(-c.rate * c.maturity);
  const double log_barrier = std::log(c.barrier);
  Moments m;
  if (!c.knocked_out_or_empty()) {
    m = blocked_moments(cfg.n_paths, cfg.workers, [&](std::int64_t i) {
      RandomStream rng(cfg.seed, static_cast<std::uint64_t>(i));
      // Work in log space; the bridge factor only needs distances to the barrier.
      double log_x = std::log(c.spot);
      double weight = 1.0;
      for (int s = 0; s < steps; ++s) {
        const double next = log_x + log_drift + log_vol * rng.normal();
        if (next >= log_barrier) return 0.0;
        weight *= 1.0 - std::exp(-2.0 * (log_barrier - log_x) * (log_barrier - next) / step_var);
        log_x = next;
      }
      return discount * std::max(std::exp(log_x) - c.strike, 0.0) * weight;
    });
  } else {
    m.count = static_cast<double>(cfg.n_paths);
  }
  PriceEstimate out = make_estimate(m, PricingMethod::mc_path, cfg);
  out.diagnostics["estimator"] = "path-bridge";
  out.diagnostics["steps"] = steps;
  return out;
}

PriceEstimate price_monte_carlo(const MarketCase& c, const McConfig& cfg) {
  if (cfg.estimator == McEstimator::terminal_bridge) return price_terminal_bridge(c, cfg);
  return price_path_bridge(c, build_time_grid(c), cfg);
}

Lemma2Report lemma2_property_check(std::int64_t sample_size, std::uint64_t seed,
                                   const Lemma2Model& model) {
  if (sample_size < 10'000) throw std::invalid_argument("lemma2_property_check: sample_size must be >= 1e4");
  constexpr int kFaces = 6;
  constexpr double kFaceProb = 1.0 / kFaces;
  Lemma2Report report;

  // Left side by enumeration over the joint outcomes (face, coin):
  // P(A) and E[f(X) | A] computed separately, then multiplied.
  double prob_a = 0.0;
  double f_and_a = 0.0;
  for (int k = 1; k <= kFaces; ++k) {
    for (const bool heads : {true, false}) {
      const double p_coin = heads ? model.event_probability(k) : 1.0 - model.event_probability(k);
      const double joint = kFaceProb * p_coin;
      if (heads) {
        prob_a += joint;
        f_and_a += joint * model.f(k);
      }
    }
  }
  report.exact_lhs = prob_a > 0.0 ? (f_and_a / prob_a) * prob_a : 0.0;
  // Right side: E[f(X) P(A|X)] over the faces alone.
  for (int k = 1; k <= kFaces; ++k) report.exact_rhs += kFaceProb * model.f(k) * model.event_probability(k);
  const double scale = std::max({1.0, std::abs(report.exact_lhs), std::abs(report.exact_rhs)});
  report.exact_equal =
      std::abs(report.exact_lhs - report.exact_rhs) <= 8.0 * std::numeric_limits<double>::epsilon() * scale;

  // Simulated: the left side from the empirical conditional mean times the
  // empirical event frequency; the right side from f(X) P(A|X).
  RandomStream rng(seed, 0);
  double sum_f_given_a = 0.0, n_a = 0.0;
  double sum_lhs_sq = 0.0, sum_rhs = 0.0, sum_rhs_sq = 0.0;
  for (std::int64_t i = 0; i < sample_size; ++i) {
    const int k = 1 + static_cast<int>(rng.uniform() * kFaces);
    const bool event = rng.uniform() < model.event_probability(k);
    const double fk = model.f(k);
    if (event) {
      sum_f_given_a += fk;
      n_a += 1.0;
      sum_lhs_sq += fk * fk;
    }
    const double rhs_term = fk * model.event_probability(k);
    sum_rhs += rhs_term;
    sum_rhs_sq += rhs_term * rhs_term;
  }
  const double n = static_cast<double>(sample_size);
  const double freq_a = n_a / n;
  report.simulated_lhs = n_a > 0.0 ? (sum_f_given_a / n_a) * freq_a : 0.0;
  report.simulated_rhs = sum_rhs / n;
  // The product above equals the sample mean of f(X) 1_A; its variance follows.
  const double lhs_var = std::max(0.0, sum_lhs_sq / n - report.simulated_lhs * report.simulated_lhs);
  const double rhs_var = std::max(0.0, sum_rhs_sq / n - report.simulated_rhs * report.simulated_rhs);
  report.combined_std_error = std::sqrt((lhs_var + rhs_var) / (n - 1.0));
  report.simulated_agree = std::abs(report.simulated_lhs - report.simulated_rhs) <=
                           4.0 * report.combined_std_error + 1e-12 * scale;
  return report;
}

}  // namespace deepbarrier

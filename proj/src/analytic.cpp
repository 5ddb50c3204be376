#include "deepbarrier/analytic.hpp"

#include <cmath>
#include <limits>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

#include "deepbarrier/bridge.hpp"

namespace deepbarrier {

std::string_view to_string(PricingMethod m) {
  switch (m) {
    case PricingMethod::analytic: return "analytic";
    case PricingMethod::mc_terminal: return "mc-terminal";
    case PricingMethod::mc_path: return "mc-path";
    case PricingMethod::bsde: return "bsde";
  }
  return "unknown";
}

PricingMethod parse_pricing_method(std::string_view name) {
  if (name == "analytic") return PricingMethod::analytic;
  if (name == "mc-terminal") return PricingMethod::mc_terminal;
  if (name == "mc-path") return PricingMethod::mc_path;
  if (name == "bsde") return PricingMethod::bsde;
  throw std::invalid_argument("unknown pricing method: " + std::string(name));
}

void to_json(nlohmann::json& j, const PriceEstimate& p) {
  j = nlohmann::json{{"value", p.value},
                     {"method", to_string(p.method)},
                     {"std_error", p.std_error},
                     {"diagnostics", p.diagnostics}};
}

void from_json(const nlohmann::json& j, PriceEstimate& p) {
  p.value = j.at("value").get<double>();
  p.method = parse_pricing_method(j.at("method").get<std::string>());
  p.std_error = j.at("std_error").get<double>();
  p.diagnostics = j.value("diagnostics", nlohmann::json::object());
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace {

// For Y ~ N(mean, sd^2) and a < c (in log-spot units):
//   E[(x0 e^Y - K) 1{a < Y < c}]
double call_slab(double x0, double strike, double mean, double sd, double a, double c) {
  const double shifted = mean + sd * sd;
  const double forward = x0 * std::exp(mean + 0.5 * sd * sd);
  const auto cdf = [](double z) { return normal_cdf(z); };
  const double upper = std::isinf(c) ? 1.0 : cdf((c - shifted) / sd);
  const double upper_k = std::isinf(c) ? 1.0 : cdf((c - mean) / sd);
  return forward * (upper - cdf((a - shifted) / sd)) - strike * (upper_k - cdf((a - mean) / sd));
}

PriceEstimate analytic_estimate(double value) {
  return PriceEstimate{std::max(0.0, value), PricingMethod::analytic, 0.0, nlohmann::json::object()};
}

}  // namespace

PriceEstimate bs_vanilla_call(const MarketCase& c) {
  c.validate();
  const double mean = (c.drift - 0.5 * c.volatility * c.volatility) * c.maturity;
  const double sd = c.volatility * std::sqrt(c.maturity);
  const double log_strike = std::log(c.strike / c.spot);
  const double discount = std::exp(-c.rate * c.maturity);
  return analytic_estimate(
      discount * call_slab(c.spot, c.strike, mean, sd, log_strike, std::numeric_limits<double>::infinity()));
}

PriceEstimate up_out_call(const MarketCase& c) {
  c.validate();
  if (c.knocked_out_or_empty()) return analytic_estimate(0.0);
  const double var_rate = c.volatility * c.volatility;
  const double mu = c.drift - 0.5 * var_rate;
  const double mean = mu * c.maturity;
  const double sd = c.volatility * std::sqrt(c.maturity);
  const double level = std::log(c.barrier / c.spot);
  const double log_strike = std::log(c.strike / c.spot);
  // Density of {ln(X_T/x0) in dy, max < level}:
  //   n(y; mu T, sd) - exp(2 mu level / sigma^2) n(y; 2 level + mu T, sd)
  const double direct = call_slab(c.spot, c.strike, mean, sd, log_strike, level);
  const double image_weight = std::exp(2.0 * mu * level / var_rate);
  const double image = call_slab(c.spot, c.strike, mean + 2.0 * level, sd, log_strike, level);
  const double discount = std::exp(-c.rate * c.maturity);
  return analytic_estimate(discount * (direct - image_weight * image));
}

namespace {

struct SimpsonNode {
  double a, b, fa, fm, fb, whole;
};

double adaptive_simpson(const std::function<double(double)>& f, const SimpsonNode& node,
                        double tolerance, int depth) {
  const double m = 0.5 * (node.a + node.b);
  const double lm = 0.5 * (node.a + m);
  const double rm = 0.5 * (m + node.b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - node.a) / 6.0 * (node.fa + 4.0 * flm + node.fm);
  const double right = (node.b - m) / 6.0 * (node.fm + 4.0 * frm + node.fb);
  const double delta = left + right - node.whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tolerance) return left + right + delta / 15.0;
  return adaptive_simpson(f, {node.a, m, node.fa, flm, node.fm, left}, 0.5 * tolerance, depth - 1) +
         adaptive_simpson(f, {m, node.b, node.fm, frm, node.fb, right}, 0.5 * tolerance, depth - 1);
}

}  // namespace

PriceEstimate up_out_call_quadrature(const MarketCase& c, double tolerance) {
  c.validate();
  if (c.knocked_out_or_empty()) return analytic_estimate(0.0);
  const double mean = (c.drift - 0.5 * c.volatility * c.volatility) * c.maturity;
  const double sd = c.volatility * std::sqrt(c.maturity);
  // Integrate in y = ln(z / x0) over (ln K/x0, ln B/x0) against the normal density.
  const auto integrand = [&](double y) {
    const double z = c.spot * std::exp(y);
    const double density =
        std::exp(-0.5 * std::pow((y - mean) / sd, 2)) / (sd * std::sqrt(2.0 * std::numbers::pi));
    return modified_payoff(c, z) * density;
  };
  const double a = std::log(c.strike / c.spot);
  const double b = std::log(c.barrier / c.spot);
  // Split into panels so narrow peaks are not missed by the first Simpson estimate.
  constexpr int kPanels = 64;
  double total = 0.0;
  for (int k = 0; k < kPanels; ++k) {
    const double lo = a + (b - a) * k / kPanels;
    const double hi = a + (b - a) * (k + 1) / kPanels;
    const double flo = integrand(lo), fhi = integrand(hi), fmid = integrand(0.5 * (lo + hi));
    const SimpsonNode node{lo, hi, flo, fmid, fhi, (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)};
    total += adaptive_simpson(integrand, node, tolerance / kPanels, 40);
  }
  PriceEstimate out = analytic_estimate(std::exp(-c.rate * c.maturity) * total);
  out.diagnostics["quadrature"] = "adaptive-simpson";
  return out;
}

}  // namespace deepbarrier

#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "deepbarrier/market.hpp"

namespace deepbarrier {

enum class PricingMethod { analytic, mc_terminal, mc_path, bsde };

std::string_view to_string(PricingMethod m);
/// Accepts "analytic", "mc-terminal", "mc-path", "bsde".
PricingMethod parse_pricing_method(std::string_view name);

/// A price together with how it was obtained. std_error is zero for
/// deterministic methods.
struct PriceEstimate {
  double value = 0.0;
  PricingMethod method = PricingMethod::analytic;
  double std_error = 0.0;
  nlohmann::json diagnostics = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const PriceEstimate& p);
void from_json(const nlohmann::json& j, PriceEstimate& p);

/// Standard normal CDF, evaluated through std::erfc (no rational
/// approximation involved).
double normal_cdf(double x);

/// e^{-rT} E[(X_T - K)^+] with X a GBM of drift b.
PriceEstimate bs_vanilla_call(const MarketCase& c);

/// Continuously monitored up-and-out call, closed form. Uses the joint law of
/// (running max, terminal) of ln X, a Brownian motion with drift b - sigma^2/2.
PriceEstimate up_out_call(const MarketCase& c);

/// Same price by adaptive quadrature of the bridge-weighted payoff against
/// the terminal lognormal density. Independent of up_out_call.
PriceEstimate up_out_call_quadrature(const MarketCase& c, double tolerance = 1e-13);

}  // namespace deepbarrier

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "deepbarrier/bsde.hpp"
#include "deepbarrier/market.hpp"

namespace deepbarrier {

/// Cartesian product of case parameters. Defaults reproduce the 72-case
/// up-and-out grid (strike 23, zero rate and drift).
struct GridSpec {
  std::vector<double> strikes{23.0};
  std::vector<double> maturities{0.5, 2.0};
  std::vector<double> spots{17.0, 22.0, 27.0, 32.0};
  std::vector<double> volatilities{0.4, 0.8, 1.2};
  std::vector<double> barriers{40.0, 60.0, 100.0};
  double rate = 0.0;
  double drift = 0.0;

  /// Nested strike > maturity > spot > volatility > barrier (barrier fastest).
  std::vector<MarketCase> cases() const;
};

/// Selects a sub-product of the grid. Keys: strike, maturity, spot,
/// volatility (alias vol), barrier. Parsed from "key=v1|v2,key=v".
class CaseFilter {
 public:
  CaseFilter() = default;
  static CaseFilter parse(std::string_view text);

  CaseFilter& allow(std::string_view key, std::vector<double> values);
  bool matches(const MarketCase& c) const;
  bool empty() const { return allowed_.empty(); }

 private:
  std::map<std::string, std::vector<double>> allowed_;
};

struct IndexedCase {
  int index = 0;  // position in the full grid
  MarketCase market;
};

std::vector<IndexedCase> select_cases(const GridSpec& grid, const CaseFilter& filter);

struct CaseResult {
  int index = 0;
  MarketCase market;
  Setting setting = Setting::custom;
  std::uint64_t seed = 0;
  double analytic = 0.0;
  double bsde = 0.0;
  std::optional<double> mc;
  double abs_error = 0.0;
  std::optional<double> rel_error;  // undefined when the analytic price is 0
  int iterations = 0;
  bool converged = false;
  std::string error;  // non-empty when the case failed

  bool ok() const { return error.empty(); }
};

struct RunOptions {
  Setting setting = Setting::test2;
  CaseFilter filter;
  std::uint64_t base_seed = 0;
  unsigned workers = 1;
  /// When set, also price each case with the terminal-bridge Monte Carlo.
  std::optional<std::int64_t> mc_paths;
  /// Applied to the setting's TrainConfig before training (tests, custom runs).
  std::function<void(TrainConfig&)> adjust_config;
  /// Called once per case, in grid order, as soon as the prefix is complete.
  std::function<void(const CaseResult&)> on_result;
};

/// Per-case seed: derive_key(base_seed, grid index).
std::uint64_t case_seed(std::uint64_t base_seed, int index);

/// Trains every selected case. A failing case is recorded (error set) and
/// the run continues.
std::vector<CaseResult> run_grid(const GridSpec& grid, const RunOptions& options);
/// Same as run_grid on an explicit case list; options.filter is ignored.
std::vector<CaseResult> run_cases(const std::vector<IndexedCase>& selected, const RunOptions& options);

/// Builds a CaseResult from prices, re-checking the analytic invariants
/// (dominance by the vanilla call, monotonicity in the barrier).
CaseResult make_case_result(int index, const MarketCase& c, Setting setting, std::uint64_t seed, double bsde);

struct SummaryStats {
  double average = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;

  friend bool operator==(const SummaryStats&, const SummaryStats&) = default;
};

struct ErrorStats {
  SummaryStats relative;
  SummaryStats absolute;
  int count_relative = 0;
  int count_absolute = 0;

  friend bool operator==(const ErrorStats&, const ErrorStats&) = default;
};

/// Quantile with linear interpolation between order statistics
/// (position (n - 1) p in the sorted sample).
double quantile(std::vector<double> values, double p);
SummaryStats summarize(const std::vector<double>& values);

/// Throws std::invalid_argument when no successful result has a defined
/// relative error.
ErrorStats compute_stats(const std::vector<CaseResult>& results);

void to_json(nlohmann::json& j, const SummaryStats& s);
void from_json(const nlohmann::json& j, SummaryStats& s);
void to_json(nlohmann::json& j, const ErrorStats& s);
void from_json(const nlohmann::json& j, ErrorStats& s);

/// Fixed column order, see kResultsCsvHeader.
extern const char* const kResultsCsvHeader;
std::string results_csv_row(const CaseResult& r);
std::string results_csv(const std::vector<CaseResult>& results);
std::string summary_json(const ErrorStats& stats, Setting setting, std::uint64_t base_seed);

/// Writes results.csv and summary.json into `dir` (created if needed).
/// Throws std::runtime_error naming the path on I/O failure.
void write_report(const std::filesystem::path& dir, const std::vector<CaseResult>& results,
                  const ErrorStats& stats, Setting setting, std::uint64_t base_seed);

}  // namespace deepbarrier

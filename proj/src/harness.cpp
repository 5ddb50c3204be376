#include "deepbarrier/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "deepbarrier/analytic.hpp"
#include "deepbarrier/mc.hpp"
#include "deepbarrier/parallel.hpp"
#include "deepbarrier/rng.hpp"

namespace deepbarrier {

std::vector<MarketCase> GridSpec::cases() const {
  std::vector<MarketCase> out;
  for (double k : strikes)
    for (double t : maturities)
      for (double s : spots)
        for (double v : volatilities)
          for (double b : barriers) out.push_back(make_case(s, k, b, t, v, rate, drift));
  return out;
}

namespace {

std::string canonical_key(std::string_view key) {
  if (key == "vol" || key == "volatility") return "volatility";
  if (key == "spot" || key == "strike" || key == "maturity" || key == "barrier") return std::string(key);
  throw std::invalid_argument("unknown filter key: " + std::string(key));
}

double field(const MarketCase& c, const std::string& key) {
  if (key == "spot") return c.spot;
  if (key == "strike") return c.strike;
  if (key == "maturity") return c.maturity;
  if (key == "volatility") return c.volatility;
  return c.barrier;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(sep, start), text.size());
    parts.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

}  // namespace

CaseFilter CaseFilter::parse(std::string_view text) {
  CaseFilter filter;
  if (text.empty()) return filter;
  for (const auto& clause : split(text, ',')) {
    const auto eq = clause.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("filter clause needs key=value: " + clause);
    std::vector<double> values;
    for (const auto& v : split(std::string_view(clause).substr(eq + 1), '|')) {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("bad filter value: " + v);
      values.push_back(x);
    }
    filter.allow(clause.substr(0, eq), std::move(values));
  }
  return filter;
}

CaseFilter& CaseFilter::allow(std::string_view key, std::vector<double> values) {
  allowed_[canonical_key(key)] = std::move(values);
  return *this;
}

bool CaseFilter::matches(const MarketCase& c) const {
  for (const auto& [key, values] : allowed_) {
    const double x = field(c, key);
    const bool hit = std::any_of(values.begin(), values.end(),
                                 [x](double v) { return std::abs(v - x) <= 1e-12 * std::max(1.0, std::abs(v)); });
    if (!hit) return false;
  }
  return true;
}

std::vector<IndexedCase> select_cases(const GridSpec& grid, const CaseFilter& filter) {
  std::vector<IndexedCase> out;
  const auto all = grid.cases();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (filter.matches(all[i])) out.push_back({static_cast<int>(i), all[i]});
  }
  return out;
}

std::uint64_t case_seed(std::uint64_t base_seed, int index) {
  return derive_key(base_seed, static_cast<std::uint64_t>(index));
}

CaseResult make_case_result(int index, const MarketCase& c, Setting setting, std::uint64_t seed, double bsde) {
  CaseResult r;
  r.index = index;
  r.market = c;
  r.setting = setting;
  r.seed = seed;
  r.analytic = up_out_call(c).value;
  r.bsde = bsde;
  r.abs_error = std::abs(bsde - r.analytic);
  if (r.analytic > 0.0) r.rel_error = r.abs_error / r.analytic;

  const double vanilla = bs_vanilla_call(c).value;
  const double slack = 1e-10 * std::max(1.0, vanilla);
  if (r.analytic > vanilla + slack) r.error = "analytic price exceeds vanilla call";
  if (c.barrier > c.strike) {
    MarketCase lower = c;
    lower.barrier = c.strike + 0.9 * (c.barrier - c.strike);
    if (up_out_call(lower).value > r.analytic + slack) r.error = "analytic price not monotone in barrier";
  }
  return r;
}

std::vector<CaseResult> run_grid(const GridSpec& grid, const RunOptions& options) {
  return run_cases(select_cases(grid, options.filter), options);
}

std::vector<CaseResult> run_cases(const std::vector<IndexedCase>& selected, const RunOptions& options) {
  std::vector<CaseResult> results(selected.size());
  std::vector<bool> done(selected.size(), false);
  std::size_t next_to_emit = 0;
  std::mutex emit_mutex;

  parallel_for(selected.size(), options.workers, [&](std::size_t i) {
    const auto& [index, market] = selected[i];
    const std::uint64_t seed = case_seed(options.base_seed, index);
    CaseResult r;
    try {
      TrainConfig cfg = TrainConfig::for_setting(options.setting, seed);
      if (options.adjust_config) options.adjust_config(cfg);
      const TrainResult trained = train(market, cfg);
      r = make_case_result(index, market, options.setting, seed, trained.price);
      r.iterations = trained.iterations_run;
      r.converged = trained.converged;
      if (options.mc_paths) {
        McConfig mc;
        mc.n_paths = *options.mc_paths;
        mc.seed = seed;
        mc.workers = 1;
        r.mc = price_terminal_bridge(market, mc).value;
      }
    } catch (const std::exception& e) {
      r = CaseResult{};
      r.index = index;
      r.market = market;
      r.setting = options.setting;
      r.seed = seed;
      r.error = e.what();
    }
    std::lock_guard lock(emit_mutex);
    results[i] = std::move(r);
    done[i] = true;
    while (next_to_emit < selected.size() && done[next_to_emit]) {
      if (options.on_result) options.on_result(results[next_to_emit]);
      ++next_to_emit;
    }
  });
  return results;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SummaryStats summarize(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("summarize: empty sample");
  SummaryStats s;
  const double n = static_cast<double>(values.size());
  s.average = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.average) * (v - s.average);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  s.q25 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q75 = quantile(values, 0.75);
  return s;
}

ErrorStats compute_stats(const std::vector<CaseResult>& results) {
  std::vector<double> rel, abs;
  for (const auto& r : results) {
    if (!r.ok()) continue;
    abs.push_back(r.abs_error);
    if (r.rel_error) rel.push_back(*r.rel_error);
  }
  if (rel.empty()) throw std::invalid_argument("compute_stats: no result with a defined relative error");
  ErrorStats stats;
  stats.relative = summarize(rel);
  stats.absolute = summarize(abs);
  stats.count_relative = static_cast<int>(rel.size());
  stats.count_absolute = static_cast<int>(abs.size());
  return stats;
}

void to_json(nlohmann::json& j, const SummaryStats& s) {
  j = nlohmann::json{{"average", s.average}, {"std", s.std}, {"q25", s.q25}, {"median", s.median}, {"q75", s.q75}};
}

void from_json(const nlohmann::json& j, SummaryStats& s) {
  s.average = j.at("average").get<double>();
  s.std = j.at("std").get<double>();
  s.q25 = j.at("q25").get<double>();
  s.median = j.at("median").get<double>();
  s.q75 = j.at("q75").get<double>();
}

void to_json(nlohmann::json& j, const ErrorStats& s) {
  j = nlohmann::json{{"relative", s.relative},
                     {"absolute", s.absolute},
                     {"count_relative", s.count_relative},
                     {"count_absolute", s.count_absolute}};
}

void from_json(const nlohmann::json& j, ErrorStats& s) {
  s.relative = j.at("relative").get<SummaryStats>();
  s.absolute = j.at("absolute").get<SummaryStats>();
  s.count_relative = j.at("count_relative").get<int>();
  s.count_absolute = j.at("count_absolute").get<int>();
}

const char* const kResultsCsvHeader =
    "index,spot,strike,barrier,maturity,rate,drift,volatility,setting,seed,analytic,bsde,mc,abs_error,rel_error,"
    "iterations,converged,status";

namespace {

std::string number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string results_csv_row(const CaseResult& r) {
  std::ostringstream row;
  const auto& c = r.market;
  row << r.index << ',' << number(c.spot) << ',' << number(c.strike) << ',' << number(c.barrier) << ','
      << number(c.maturity) << ',' << number(c.rate) << ',' << number(c.drift) << ',' << number(c.volatility) << ','
      << to_string(r.setting) << ',' << r.seed << ',' << number(r.analytic) << ',' << number(r.bsde) << ','
      << (r.mc ? number(*r.mc) : "") << ',' << number(r.abs_error) << ','
      << (r.rel_error ? number(*r.rel_error) : "") << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
      << (r.ok() ? std::string("ok") : csv_text("error: " + r.error));
  return row.str();
}

std::string results_csv(const std::vector<CaseResult>& results) {
  std::string out = std::string(kResultsCsvHeader) + "\n";
  for (const auto& r : results) out += results_csv_row(r) + "\n";
  return out;
}

std::string summary_json(const ErrorStats& stats, Setting setting, std::uint64_t base_seed) {
  nlohmann::json j = stats;
  j["setting"] = to_string(setting);
  j["base_seed"] = base_seed;
  return j.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void write_report(const std::filesystem::path& dir, const std::vector<CaseResult>& results,
                  const ErrorStats& stats, Setting setting, std::uint64_t base_seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
  write_file(dir / "results.csv", results_csv(results));
  write_file(dir / "summary.json", summary_json(stats, setting, base_seed));
}

}  // namespace deepbarrier

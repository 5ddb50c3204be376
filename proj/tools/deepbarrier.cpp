// deepbarrier: price up-and-out calls, run the experiment grid, run property checks.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "deepbarrier/analytic.hpp"
#include "deepbarrier/bsde.hpp"
#include "deepbarrier/checks.hpp"
#include "deepbarrier/harness.hpp"
#include "deepbarrier/mc.hpp"

namespace db = deepbarrier;

namespace {

struct Settings {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string setting = "test2";
  std::int64_t paths = 1'000'000;
};

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

// Defaults < config file < environment < command-line flags.
Settings resolve_settings(const std::string& config_path) {
  Settings s;
  if (!config_path.empty()) {
    const auto j = read_json_file(config_path);
    s.seed = j.value("seed", s.seed);
    s.workers = j.value("workers", s.workers);
    s.setting = j.value("setting", s.setting);
    s.paths = j.value("paths", s.paths);
  }
  if (const char* env = std::getenv("DEEPBARRIER_SEED")) s.seed = std::stoull(env);
  if (const char* env = std::getenv("DEEPBARRIER_WORKERS")) s.workers = static_cast<unsigned>(std::stoul(env));
  return s;
}

int run_price(const Settings& s, const std::string& method_name, const std::string& case_path,
              const std::string& history_path, const std::string& checkpoint_path, int substeps) {
  const db::MarketCase c = read_json_file(case_path).get<db::MarketCase>();
  db::PriceEstimate estimate;
  switch (db::parse_pricing_method(method_name)) {
    case db::PricingMethod::analytic:
      estimate = db::up_out_call(c);
      break;
    case db::PricingMethod::mc_terminal:
    case db::PricingMethod::mc_path: {
      db::McConfig cfg;
      cfg.n_paths = s.paths;
      cfg.seed = s.seed;
      cfg.workers = s.workers;
      cfg.substeps = substeps;
      cfg.estimator = method_name == "mc-path" ? db::McEstimator::path_bridge : db::McEstimator::terminal_bridge;
      estimate = db::price_monte_carlo(c, cfg);
      break;
    }
    case db::PricingMethod::bsde: {
      const auto cfg = db::TrainConfig::for_setting(db::parse_setting(s.setting), s.seed);
      const db::TrainResult r = db::train(c, cfg);
      estimate.value = r.price;
      estimate.method = db::PricingMethod::bsde;
      estimate.diagnostics = db::to_json(r);
      estimate.diagnostics["setting"] = s.setting;
      estimate.diagnostics["seed"] = s.seed;
      if (!history_path.empty()) {
        std::ofstream(history_path) << db::history_csv(r);
      }
      if (!checkpoint_path.empty() && r.network) {
        std::ofstream(checkpoint_path) << db::save_checkpoint(*r.network);
      }
      break;
    }
  }
  std::cout << nlohmann::json(estimate).dump(2) << '\n';
  return 0;
}

int run_grid(const Settings& s, const std::string& filter, const std::string& out_dir,
             std::optional<std::int64_t> mc_paths) {
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  const auto csv_path = dir / "results.csv";
  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot open for writing: " + csv_path.string());
  csv << db::kResultsCsvHeader << '\n' << std::flush;

  db::RunOptions options;
  options.setting = db::parse_setting(s.setting);
  options.filter = db::CaseFilter::parse(filter);
  options.base_seed = s.seed;
  options.workers = s.workers;
  options.mc_paths = mc_paths;
  options.on_result = [&](const db::CaseResult& r) {
    csv << db::results_csv_row(r) << '\n' << std::flush;
    std::cerr << "case " << r.index << ": bsde " << r.bsde << " analytic " << r.analytic
              << (r.ok() ? "" : "  [" + r.error + "]") << '\n';
  };
  const auto results = db::run_grid(db::GridSpec{}, options);
  if (!csv) throw std::runtime_error("write failed: " + csv_path.string());
  csv.close();
  if (results.empty()) throw std::runtime_error("filter selected no cases");

  const auto stats = db::compute_stats(results);
  const auto summary_path = dir / "summary.json";
  std::ofstream summary(summary_path, std::ios::binary | std::ios::trunc);
  summary << db::summary_json(stats, options.setting, s.seed);
  if (!summary) throw std::runtime_error("write failed: " + summary_path.string());
  std::cout << "relative error: median " << stats.relative.median << " average " << stats.relative.average << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep-BSDE pricing of up-and-out barrier calls"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config with seed, workers, setting, paths")->check(CLI::ExistingFile);

  std::optional<std::uint64_t> seed_flag;
  std::optional<unsigned> workers_flag;
  std::optional<std::string> setting_flag;
  std::optional<std::int64_t> paths_flag;

  auto* price = app.add_subcommand("price", "Price one case and print a PriceEstimate as JSON");
  std::string method, case_path, history_path, checkpoint_path;
  int substeps = 1;
  price->add_option("--method", method, "analytic | mc-terminal | mc-path | bsde")
      ->required()
      ->check(CLI::IsMember({"analytic", "mc-terminal", "mc-path", "bsde"}));
  price->add_option("--case", case_path, "MarketCase JSON file")->required()->check(CLI::ExistingFile);
  price->add_option("--setting", setting_flag, "test1 | test2 | test3 (bsde only)")
      ->check(CLI::IsMember({"test1", "test2", "test3"}));
  price->add_option("--seed", seed_flag, "Random seed (env DEEPBARRIER_SEED)");
  price->add_option("--paths", paths_flag, "Monte Carlo paths");
  price->add_option("--workers", workers_flag, "Monte Carlo worker threads (env DEEPBARRIER_WORKERS)");
  price->add_option("--substeps", substeps, "Path-bridge substeps per grid step")->check(CLI::PositiveNumber);
  price->add_option("--history-csv", history_path, "Write iteration,loss,y0,lr (bsde only)");
  price->add_option("--checkpoint", checkpoint_path, "Write the trained network as JSON (bsde only)");

  auto* grid = app.add_subcommand("grid", "Train every selected grid case; write results.csv and summary.json");
  std::string filter, out_dir;
  std::optional<std::int64_t> mc_paths;
  grid->add_option("--setting", setting_flag, "test1 | test2 | test3")
      ->required()
      ->check(CLI::IsMember({"test1", "test2", "test3"}));
  grid->add_option("--filter", filter, "Sub-product, e.g. barrier=40,spot=22|27");
  grid->add_option("--seed", seed_flag, "Base seed (env DEEPBARRIER_SEED)");
  grid->add_option("--workers", workers_flag, "Cases trained in parallel (env DEEPBARRIER_WORKERS)");
  grid->add_option("--mc-paths", mc_paths, "Also record a terminal-bridge Monte Carlo price");
  grid->add_option("--out", out_dir, "Output directory")->required();

  auto* check = app.add_subcommand("check", "Run a property suite; exit code 0 on pass");
  std::string suite;
  check->add_option("--suite", suite, "gradients | estimators | analytic | lemma2")
      ->required()
      ->check(CLI::IsMember({"gradients", "estimators", "analytic", "lemma2"}));

  CLI11_PARSE(app, argc, argv);

  try {
    Settings s = resolve_settings(config_path);
    if (seed_flag) s.seed = *seed_flag;
    if (workers_flag) s.workers = *workers_flag;
    if (setting_flag) s.setting = *setting_flag;
    if (paths_flag) s.paths = *paths_flag;
    db::parse_setting(s.setting);

    if (price->parsed()) return run_price(s, method, case_path, history_path, checkpoint_path, substeps);
    if (grid->parsed()) return run_grid(s, filter, out_dir, mc_paths);
    if (check->parsed()) {
      const auto report = db::run_check_suite(suite);
      std::cout << report.to_text();
      return report.passed() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

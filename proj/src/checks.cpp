#include "deepbarrier/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "deepbarrier/analytic.hpp"
#include "deepbarrier/bsde.hpp"
#include "deepbarrier/harness.hpp"
#include "deepbarrier/mc.hpp"
#include "deepbarrier/network.hpp"
#include "deepbarrier/rng.hpp"

namespace deepbarrier {

bool SuiteReport::passed() const {
  return !lines.empty() && std::all_of(lines.begin(), lines.end(), [](const CheckLine& l) { return l.passed; });
}

std::string SuiteReport::to_text() const {
  std::ostringstream out;
  for (const auto& l : lines) out << (l.passed ? "PASS " : "FAIL ") << suite << ": " << l.name << "  " << l.detail << '\n';
  out << (passed() ? "PASS " : "FAIL ") << suite << " (" << lines.size() << " checks)\n";
  return out.str();
}

namespace {

constexpr double kFdStep = 1e-5;

double relative_gap(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

template <typename LossFn>
double worst_fd_gap(Eigen::VectorXd& params, const Eigen::VectorXd& analytic, LossFn&& loss) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + kFdStep;
    const double up = loss();
    params[k] = saved - kFdStep;
    const double down = loss();
    params[k] = saved;
    worst = std::max(worst, relative_gap(analytic[k], (up - down) / (2.0 * kFdStep)));
  }
  return worst;
}

void randomize_bn(Network& net, RandomStream& rng) {
  for (int k = 0; k < net.spec().bn_layers(); ++k) {
    for (int t = 0; t < net.spec().n_time_steps; ++t) {
      for (auto& g : net.bn_gamma(k, t)) g = 0.5 + rng.uniform();
      for (auto& b : net.bn_beta(k, t)) b = rng.uniform() - 0.5;
    }
  }
}

double layer_gradient_gap(BnMode mode, std::uint64_t seed) {
  NetworkSpec spec;
  spec.bn_mode = mode;
  spec.n_time_steps = 3;
  Network net(spec);
  glorot_initialize(net, seed);
  RandomStream rng(seed, 99);
  randomize_bn(net, rng);
  for (int l = 0; l < spec.dense_layers(); ++l)
    for (auto& b : net.bias(l)) b = 0.2 * (rng.uniform() - 0.5);
  const int t = 1;
  Eigen::MatrixXd inputs(2, 8);
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    inputs(0, j) = 15.0 + 25.0 * rng.uniform();
    inputs(1, j) = 2.0 * rng.uniform();
  }
  // Scale the spot-like input down so Glorot weights land in Elu's curved region.
  inputs.row(0) /= 20.0;
  Eigen::MatrixXd upstream(1, 8);
  for (auto& u : upstream.reshaped()) u = rng.uniform() - 0.5;

  const auto loss = [&] { return (forward(net, t, inputs).output.array() * upstream.array()).sum(); };
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameter_count());
  const Eigen::MatrixXd input_grad = backward(net, forward(net, t, inputs), upstream, grad);

  double worst = worst_fd_gap(net.parameters(), grad, loss);
  for (Eigen::Index k = 0; k < inputs.size(); ++k) {
    double& x = inputs.reshaped()[k];
    const double saved = x;
    x = saved + kFdStep;
    const double up = loss();
    x = saved - kFdStep;
    const double down = loss();
    x = saved;
    worst = std::max(worst, relative_gap(input_grad.reshaped()[k], (up - down) / (2.0 * kFdStep)));
  }
  return worst;
}

double end_to_end_gradient_gap(BnMode mode, std::uint64_t seed) {
  const MarketCase c = make_case(22.0, 23.0, 40.0, 0.5, 0.4);
  const TimeGrid grid = TimeGrid::uniform(c.maturity, 5);
  const PathBatch batch = simulate_paths(c, grid, 4, seed);
  TrainConfig cfg;
  cfg.bn_mode = mode;
  cfg.hidden_width = 4;
  Network net(make_network_spec(cfg, grid));
  initialize_network(net, c, seed);
  RandomStream rng(seed, 77);
  randomize_bn(net, rng);
  const LossGradient lg = loss_and_gradient(c, grid, batch, net);
  const auto loss = [&] {
    return bsde_loss(roll_forward(c, grid, batch, net).terminal_y, c, batch.terminal());
  };
  return worst_fd_gap(net.parameters(), lg.gradient, loss);
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

std::string case_label(const MarketCase& c) {
  std::ostringstream s;
  s << "T=" << c.maturity << " S=" << c.spot << " vol=" << c.volatility << " B=" << c.barrier;
  return s.str();
}

}  // namespace

SuiteReport check_gradients(int seeds) {
  SuiteReport report{"gradients", {}};
  for (const BnMode mode : {BnMode::none, BnMode::input_only, BnMode::every_layer}) {
    for (int s = 1; s <= seeds; ++s) {
      const double layer = layer_gradient_gap(mode, static_cast<std::uint64_t>(s));
      report.lines.push_back({"layer " + std::string(to_string(mode)) + " seed " + std::to_string(s), layer <= 1e-4,
                              "max rel gap " + fmt(layer)});
      const double e2e = end_to_end_gradient_gap(mode, static_cast<std::uint64_t>(s));
      report.lines.push_back({"end-to-end " + std::string(to_string(mode)) + " seed " + std::to_string(s),
                              e2e <= 1e-3, "max rel gap " + fmt(e2e)});
    }
  }
  return report;
}

SuiteReport check_estimators(std::int64_t paths, std::uint64_t seed) {
  SuiteReport report{"estimators", {}};
  const std::vector<MarketCase> cases{
      make_case(22, 23, 40, 0.5, 0.4), make_case(27, 23, 60, 0.5, 0.8), make_case(17, 23, 100, 0.5, 1.2),
      make_case(32, 23, 40, 0.5, 0.4), make_case(22, 23, 100, 2.0, 0.4), make_case(27, 23, 40, 2.0, 0.8),
      make_case(17, 23, 60, 2.0, 1.2), make_case(32, 23, 100, 2.0, 1.2)};
  for (const auto& c : cases) {
    McConfig cfg;
    cfg.n_paths = paths;
    cfg.seed = seed;
    const PriceEstimate terminal = price_terminal_bridge(c, cfg);
    cfg.seed = derive_key(seed, 1);
    const PriceEstimate path = price_path_bridge(c, build_time_grid(c), cfg);
    const double se = std::hypot(terminal.std_error, path.std_error);
    const double gap = std::abs(terminal.value - path.value);
    report.lines.push_back({case_label(c), gap <= 3.0 * se,
                            "terminal " + fmt(terminal.value) + " path " + fmt(path.value) + " gap/SE " + fmt(gap / se)});
  }
  const Lemma2Report lemma = lemma2_property_check(100'000, seed);
  report.lines.push_back({"lemma2 enumeration", lemma.exact_equal && std::abs(lemma.exact_lhs - 7.35) < 1e-12,
                          "lhs " + fmt(lemma.exact_lhs) + " rhs " + fmt(lemma.exact_rhs)});
  return report;
}

SuiteReport check_analytic(std::int64_t paths, std::uint64_t seed) {
  SuiteReport report{"analytic", {}};
  const auto cases = GridSpec{}.cases();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    McConfig cfg;
    cfg.n_paths = paths;
    cfg.seed = derive_key(seed, i);
    const PriceEstimate mc = price_terminal_bridge(c, cfg);
    const double closed = up_out_call(c).value;
    const double gap = std::abs(closed - mc.value);
    report.lines.push_back({"mc " + case_label(c), gap <= 3.0 * mc.std_error,
                            "closed " + fmt(closed) + " mc " + fmt(mc.value) + " gap/SE " + fmt(gap / mc.std_error)});
  }
  // One case per block of six, rotating through the barrier levels.
  for (std::size_t j = 0; j < cases.size() / 6; ++j) {
    const auto& c = cases[6 * j + j % 3];
    const double closed = up_out_call(c).value;
    const double quad = up_out_call_quadrature(c).value;
    const double rel = std::abs(closed - quad) / std::max(closed, 1e-300);
    report.lines.push_back({"quadrature " + case_label(c), rel <= 1e-6, "rel gap " + fmt(rel)});
  }
  return report;
}

SuiteReport check_lemma2(std::int64_t samples, std::uint64_t seed) {
  SuiteReport report{"lemma2", {}};
  const Lemma2Report r = lemma2_property_check(samples, seed);
  report.lines.push_back({"exact enumeration", r.exact_equal && std::abs(r.exact_lhs - 7.35) < 1e-12,
                          "lhs " + fmt(r.exact_lhs) + " rhs " + fmt(r.exact_rhs)});
  report.lines.push_back({"simulation", r.simulated_agree,
                          "lhs " + fmt(r.simulated_lhs) + " rhs " + fmt(r.simulated_rhs) + " SE " +
                              fmt(r.combined_std_error)});
  Lemma2Model constant;
  constant.f = [](int) { return 1.0; };
  const Lemma2Report c = lemma2_property_check(samples, seed + 1, constant);
  report.lines.push_back({"f = 1 gives P(A)", c.passed() && std::abs(c.exact_lhs - 0.35) < 1e-12,
                          "lhs " + fmt(c.exact_lhs)});
  Lemma2Model sure;
  sure.event_probability = [](int) { return 1.0; };
  const Lemma2Report s = lemma2_property_check(samples, seed + 2, sure);
  report.lines.push_back({"sure event gives E[f]", s.passed() && std::abs(s.exact_lhs - 91.0 / 6.0) < 1e-12,
                          "lhs " + fmt(s.exact_lhs)});
  return report;
}

SuiteReport run_check_suite(std::string_view name) {
  if (name == "gradients") return check_gradients();
  if (name == "estimators") return check_estimators();
  if (name == "analytic") return check_analytic();
  if (name == "lemma2") return check_lemma2();
  throw std::invalid_argument("unknown check suite: " + std::string(name));
}

}  // namespace deepbarrier

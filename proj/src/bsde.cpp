#include "deepbarrier/bsde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "deepbarrier/bridge.hpp"
#include "deepbarrier/rng.hpp"

namespace deepbarrier {

std::string_view to_string(Setting s) {
  switch (s) {
    case Setting::test1: return "test1";
    case Setting::test2: return "test2";
    case Setting::test3: return "test3";
    case Setting::custom: return "custom";
  }
  return "unknown";
}

Setting parse_setting(std::string_view name) {
  if (name == "test1") return Setting::test1;
  if (name == "test2") return Setting::test2;
  if (name == "test3") return Setting::test3;
  if (name == "custom") return Setting::custom;
  throw std::invalid_argument("unknown setting: " + std::string(name));
}

TrainConfig TrainConfig::for_setting(Setting s, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.setting = s;
  cfg.seed = seed;
  switch (s) {
    case Setting::test1:
      cfg.initial_lr = 0.01;
      cfg.lr_decay_every = 1500;
      cfg.max_iterations = 8000;
      cfg.min_iterations = 8000;
      cfg.stop_threshold = 0.0;
      cfg.bn_mode = BnMode::none;
      break;
    case Setting::test2:
      cfg.initial_lr = 0.02;
      cfg.lr_decay_every = 500;
      cfg.max_iterations = 1500;
      cfg.min_iterations = 750;
      cfg.stop_threshold = 0.002;
      cfg.bn_mode = BnMode::every_layer;
      break;
    case Setting::test3:
      cfg.initial_lr = 0.02;
      cfg.lr_decay_every = 1000;
      cfg.max_iterations = 3000;
      cfg.min_iterations = 1500;
      cfg.stop_threshold = 0.005;
      cfg.bn_mode = BnMode::input_only;
      break;
    case Setting::custom:
      break;
  }
  return cfg;
}

void TrainConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("TrainConfig: max_iterations must be >= 1");
  if (min_iterations > max_iterations) throw std::invalid_argument("TrainConfig: min_iterations > max_iterations");
  if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
  if (!(initial_lr > 0.0)) throw std::invalid_argument("TrainConfig: initial_lr must be > 0");
  if (lr_decay_every < 1) throw std::invalid_argument("TrainConfig: lr_decay_every must be >= 1");
  if (window < 1) throw std::invalid_argument("TrainConfig: window must be >= 1");
  if (stop_threshold < 0.0) throw std::invalid_argument("TrainConfig: stop_threshold must be >= 0");
  if (setting != Setting::test1 && setting != Setting::custom && !(stop_threshold > 0.0)) {
    throw std::invalid_argument("TrainConfig: stop_threshold must be > 0 for this setting");
  }
}

double learning_rate_at(const TrainConfig& cfg, int iteration) {
  return cfg.initial_lr * std::pow(cfg.lr_decay_factor, iteration / cfg.lr_decay_every);
}

int network_time_steps(const TimeGrid& grid) { return std::max(1, grid.n_steps - 1); }

NetworkSpec make_network_spec(const TrainConfig& cfg, const TimeGrid& grid) {
  NetworkSpec spec;
  spec.input_dim = 2;
  spec.hidden_layers = cfg.hidden_layers;
  spec.hidden_width = cfg.hidden_width;
  spec.output_dim = 1;
  spec.bn_mode = cfg.bn_mode;
  spec.n_time_steps = network_time_steps(grid);
  return spec;
}

void initialize_network(Network& net, const MarketCase& c, std::uint64_t seed) {
  glorot_initialize(net, derive_key(seed, 1));
  RandomStream rng(seed, 2);
  net.y0() = rng.uniform() * (std::max(c.spot - c.strike, 0.0) + 2.0);
  net.z0() = 0.2 * rng.uniform() - 0.1;
}

RollForward roll_forward(const MarketCase& c, const TimeGrid& grid, const PathBatch& batch, const Network& net,
                         BnPhase phase) {
  const int n = grid.n_steps;
  if (batch.n_steps() != n) throw std::invalid_argument("roll_forward: batch not generated on this grid");
  if (net.spec().bn_layers() > 0 && net.spec().n_time_steps != network_time_steps(grid)) {
    throw std::invalid_argument("roll_forward: network BN steps do not match the grid");
  }
  const Eigen::Index m = batch.batch_size();
  const double growth = 1.0 + c.rate * grid.dt;
  RollForward out;
  out.caches.reserve(std::max(0, n - 1));
  Eigen::VectorXd y = Eigen::VectorXd::Constant(m, net.y0());
  y = growth * y + net.z0() * batch.increments.col(0);
  Eigen::MatrixXd inputs(2, m);
  for (int i = 1; i < n; ++i) {
    inputs.row(0) = batch.values.col(i).transpose();
    inputs.row(1).setConstant(grid.time_to_maturity(i));
    out.caches.push_back(forward(net, i - 1, inputs, phase));
    y = growth * y + out.caches.back().output.row(0).transpose().cwiseProduct(batch.increments.col(i));
  }
  out.terminal_y = std::move(y);
  return out;
}

double bsde_loss(const Eigen::Ref<const Eigen::VectorXd>& terminal_y, const MarketCase& c,
                 const Eigen::Ref<const Eigen::VectorXd>& terminal_x) {
  if (terminal_y.size() != terminal_x.size() || terminal_y.size() == 0) {
    throw std::invalid_argument("bsde_loss: batch shapes disagree");
  }
  return (terminal_y - modified_payoff(c, terminal_x)).squaredNorm() / double(terminal_y.size());
}

LossGradient loss_and_gradient(const MarketCase& c, const TimeGrid& grid, const PathBatch& batch,
                               const Network& net) {
  LossGradient out;
  out.roll = roll_forward(c, grid, batch, net, BnPhase::training);
  const Eigen::Index m = batch.batch_size();
  const Eigen::VectorXd residual = out.roll.terminal_y - modified_payoff(c, batch.terminal());
  out.loss = residual.squaredNorm() / double(m);
  out.gradient = Eigen::VectorXd::Zero(net.parameter_count());

  const double growth = 1.0 + c.rate * grid.dt;
  // dL/dY_{i+1}, walked backwards; dY_{i+1}/dY_i = growth, dY_{i+1}/dZ_i = dW_i.
  Eigen::VectorXd adjoint = (2.0 / double(m)) * residual;
  Eigen::RowVectorXd upstream(m);
  for (int i = grid.n_steps - 1; i >= 1; --i) {
    upstream = adjoint.cwiseProduct(batch.increments.col(i)).transpose();
    backward(net, out.roll.caches[i - 1], upstream, out.gradient);
    adjoint *= growth;
  }
  out.gradient[net.z0_offset()] = adjoint.dot(batch.increments.col(0));
  out.gradient[net.y0_offset()] = growth * adjoint.sum();
  return out;
}

namespace {

double trailing_mean(const std::vector<double>& values, int window) {
  const auto count = std::min<std::size_t>(values.size(), static_cast<std::size_t>(window));
  if (count == 0) return 0.0;
  return std::accumulate(values.end() - static_cast<std::ptrdiff_t>(count), values.end(), 0.0) / double(count);
}

}  // namespace

TrainResult train(const MarketCase& c, const TrainConfig& cfg, const IterationObserver& observer) {
  c.validate();
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const TimeGrid grid = build_time_grid(c);
  Network net(make_network_spec(cfg, grid));
  initialize_network(net, c, cfg.seed);
  AdamState<double> adam(net.parameter_count(), cfg.initial_lr);
  const std::uint64_t batch_key = derive_key(cfg.seed, 3);

  TrainResult result;
  result.n_steps = grid.n_steps;
  result.parameter_count = net.parameter_count();
  std::optional<double> previous_window;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    adam.learning_rate = learning_rate_at(cfg, it);
    const PathBatch batch = simulate_paths(c, grid, cfg.batch_size, derive_key(batch_key, std::uint64_t(it)));
    LossGradient lg = loss_and_gradient(c, grid, batch, net);
    if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << it << " (loss " << lg.loss << ", parameter norm "
          << net.parameters().norm() << ", gradient norm " << lg.gradient.norm() << ")";
      throw TrainingError(msg.str());
    }
    adam_step(adam, net.parameters(), lg.gradient);
    for (const auto& cache : lg.roll.caches) update_running_stats(net, cache);

    result.loss_history.push_back(lg.loss);
    result.price_history.push_back(net.y0());
    result.lr_history.push_back(adam.learning_rate);
    result.iterations_run = it + 1;
    if (observer) observer(it, lg.loss, net.y0(), adam.learning_rate);

    if ((it + 1) % cfg.window == 0) {
      const double current = trailing_mean(result.price_history, cfg.window);
      if (cfg.stopping_enabled() && previous_window && it + 1 >= cfg.min_iterations &&
          std::abs(current - *previous_window) < cfg.stop_threshold) {
        result.converged = true;
        break;
      }
      previous_window = current;
    }
  }
  result.price = trailing_mean(result.price_history, cfg.window);
  result.z0 = net.z0();
  result.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.network.emplace(std::move(net));
  return result;
}

nlohmann::json to_json(const TrainResult& r, bool include_history) {
  nlohmann::json j{{"price", r.price},
                   {"z0", r.z0},
                   {"iterations_run", r.iterations_run},
                   {"converged", r.converged},
                   {"wall_time_seconds", r.wall_time_seconds},
                   {"n_steps", r.n_steps},
                   {"parameter_count", r.parameter_count}};
  if (include_history) {
    j["loss_history"] = r.loss_history;
    j["price_history"] = r.price_history;
    j["lr_history"] = r.lr_history;
  }
  return j;
}

std::string history_csv(const TrainResult& r) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,loss,y0,lr\n";
  for (std::size_t i = 0; i < r.loss_history.size(); ++i) {
    out << i << ',' << r.loss_history[i] << ',' << r.price_history[i] << ',' << r.lr_history[i] << '\n';
  }
  return out.str();
}

}  // namespace deepbarrier

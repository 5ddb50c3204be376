#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "deepbarrier/market.hpp"
#include "deepbarrier/network.hpp"

namespace deepbarrier {

enum class Setting { test1, test2, test3, custom };

std::string_view to_string(Setting s);
/// Accepts "test1", "test2", "test3", "custom".
Setting parse_setting(std::string_view name);

struct TrainConfig {
  Setting setting = Setting::custom;
  double initial_lr = 0.02;
  double lr_decay_factor = 0.5;
  int lr_decay_every = 500;
  int max_iterations = 1500;
  int min_iterations = 750;
  /// Absolute change between consecutive trailing-window price means that
  /// stops training. Zero disables the stopping rule.
  double stop_threshold = 0.002;
  int batch_size = 512;
  BnMode bn_mode = BnMode::every_layer;
  int hidden_layers = 1;
  int hidden_width = 21;
  /// Trailing window for the stopping statistic and the reported price.
  int window = 50;
  std::uint64_t seed = 0;

  /// Hyperparameters of one of the three reference settings.
  static TrainConfig for_setting(Setting s, std::uint64_t seed = 0);

  bool stopping_enabled() const { return stop_threshold > 0.0; }
  void validate() const;
};

/// Learning rate in effect at 0-based iteration `iteration`:
/// initial_lr * factor^floor(iteration / lr_decay_every).
double learning_rate_at(const TrainConfig& cfg, int iteration);

/// Step count of the shared network: Z at t_0 is the scalar z0, so the
/// network covers t_1 .. t_{N-1}.
int network_time_steps(const TimeGrid& grid);

NetworkSpec make_network_spec(const TrainConfig& cfg, const TimeGrid& grid);

/// y0 ~ U[0, (x0 - K)^+ + 2], z0 ~ U[-0.1, 0.1], trunk Glorot-uniform.
void initialize_network(Network& net, const MarketCase& c, std::uint64_t seed);

struct RollForward {
  Eigen::VectorXd terminal_y;
  std::vector<ForwardCache<double>> caches;  // one per network step, t_1 .. t_{N-1}
};

/// Y_{i+1} = Y_i + r Y_i dt + Z_i dW_i from Y_0 = y0, with Z_0 = z0 and
/// Z_i = net(X_i, T - t_i) for i >= 1.
RollForward roll_forward(const MarketCase& c, const TimeGrid& grid, const PathBatch& batch, const Network& net,
                         BnPhase phase = BnPhase::training);

/// Mean squared mismatch between Y_T and the modified payoff of X_T.
double bsde_loss(const Eigen::Ref<const Eigen::VectorXd>& terminal_y, const MarketCase& c,
                 const Eigen::Ref<const Eigen::VectorXd>& terminal_x);

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // laid out like net.parameters()
  RollForward roll;
};

/// Loss and its exact gradient with respect to every trainable parameter,
/// back-propagated through the whole unrolled recursion.
LossGradient loss_and_gradient(const MarketCase& c, const TimeGrid& grid, const PathBatch& batch,
                               const Network& net);

struct TrainResult {
  double price = 0.0;
  double z0 = 0.0;
  int iterations_run = 0;
  std::vector<double> loss_history;
  std::vector<double> price_history;
  std::vector<double> lr_history;
  bool converged = false;
  double wall_time_seconds = 0.0;
  int n_steps = 0;
  Eigen::Index parameter_count = 0;
  std::optional<Network> network;
};

/// Raised when the loss becomes non-finite.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using IterationObserver = std::function<void(int iteration, double loss, double y0, double lr)>;

TrainResult train(const MarketCase& c, const TrainConfig& cfg, const IterationObserver& observer = {});

/// Histories are omitted unless requested.
nlohmann::json to_json(const TrainResult& r, bool include_history = false);
/// CSV with header "iteration,loss,y0,lr".
std::string history_csv(const TrainResult& r);

}  // namespace deepbarrier

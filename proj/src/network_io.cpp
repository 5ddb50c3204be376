#include <stdexcept>
#include <string>

#include <json.hpp>

#include "deepbarrier/network.hpp"

namespace deepbarrier {

std::string_view to_string(BnMode mode) {
  switch (mode) {
    case BnMode::none: return "none";
    case BnMode::input_only: return "input-only";
    case BnMode::every_layer: return "every-layer";
  }
  return "unknown";
}

BnMode parse_bn_mode(std::string_view name) {
  if (name == "none") return BnMode::none;
  if (name == "input-only") return BnMode::input_only;
  if (name == "every-layer") return BnMode::every_layer;
  throw std::invalid_argument("unknown batch-norm mode: " + std::string(name));
}

namespace {

constexpr const char* kFormat = "deepbarrier-network";
constexpr int kVersion = 1;

nlohmann::json matrix_rows(const Network::Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void read_matrix(const nlohmann::json& rows, Network::Matrix& m) {
  if (rows.size() != static_cast<std::size_t>(m.rows())) throw std::runtime_error("checkpoint: running stat shape");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto& row = rows.at(i);
    if (row.size() != static_cast<std::size_t>(m.cols())) throw std::runtime_error("checkpoint: running stat shape");
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = row.at(j).get<double>();
  }
}

}  // namespace

std::string save_checkpoint(const Network& net) {
  const NetworkSpec& s = net.spec();
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["spec"] = {{"input_dim", s.input_dim},     {"hidden_layers", s.hidden_layers},
               {"hidden_width", s.hidden_width}, {"output_dim", s.output_dim},
               {"bn_mode", to_string(s.bn_mode)}, {"n_time_steps", s.n_time_steps}};
  j["batch_norm"] = {{"epsilon", net.bn_config().epsilon}, {"momentum", net.bn_config().momentum}};
  const auto& p = net.parameters();
  j["parameters"] = std::vector<double>(p.data(), p.data() + p.size());
  j["running_mean"] = nlohmann::json::array();
  j["running_var"] = nlohmann::json::array();
  for (int k = 0; k < s.bn_layers(); ++k) {
    j["running_mean"].push_back(matrix_rows(net.running_mean(k)));
    j["running_var"].push_back(matrix_rows(net.running_var(k)));
  }
  return j.dump();
}

Network load_checkpoint(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", "") != kFormat) throw std::runtime_error("checkpoint: unrecognized format");
  if (j.value("version", 0) != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  const auto& js = j.at("spec");
  NetworkSpec spec;
  spec.input_dim = js.at("input_dim").get<int>();
  spec.hidden_layers = js.at("hidden_layers").get<int>();
  spec.hidden_width = js.at("hidden_width").get<int>();
  spec.output_dim = js.at("output_dim").get<int>();
  spec.bn_mode = parse_bn_mode(js.at("bn_mode").get<std::string>());
  spec.n_time_steps = js.at("n_time_steps").get<int>();
  BatchNormConfig bn;
  bn.epsilon = j.at("batch_norm").at("epsilon").get<double>();
  bn.momentum = j.at("batch_norm").at("momentum").get<double>();
  Network net(spec, bn);
  const auto params = j.at("parameters").get<std::vector<double>>();
  if (params.size() != static_cast<std::size_t>(net.parameter_count())) {
    throw std::runtime_error("checkpoint: parameter count does not match spec");
  }
  net.parameters() = Eigen::Map<const Eigen::VectorXd>(params.data(), Eigen::Index(params.size()));
  for (int k = 0; k < spec.bn_layers(); ++k) {
    read_matrix(j.at("running_mean").at(k), net.running_mean(k));
    read_matrix(j.at("running_var").at(k), net.running_var(k));
    if ((net.running_var(k).array() < 0.0).any()) throw std::runtime_error("checkpoint: negative running variance");
  }
  return net;
}

}  // namespace deepbarrier

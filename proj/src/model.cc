#include "threadcast/model.h"

#include <cmath>
#include <stdexcept>

#include "threadcast/gat.h"
#include "threadcast/graphormer.h"

namespace threadcast {

using nlohmann::json;

const char* model_kind_name(ModelKind kind) { return kind == ModelKind::kGraphormer ? "graphormer" : "gat"; }

ModelKind parse_model_kind(std::string_view name) {
  if (name == "graphormer") return ModelKind::kGraphormer;
  if (name == "gat") return ModelKind::kGat;
  throw std::invalid_argument("unknown model '" + std::string(name) + "' (graphormer|gat)");
}

ModelConfig ModelConfig::from_preset(std::string_view name, ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  c.preset = std::string(name);
  if (name == "desk") {
    c.num_layers = 4;
    c.hidden_dim = 64;
    c.num_heads = 4;
    c.ffn_dim = 128;
    c.dropout = 0.0;
  } else if (name == "base") {
    // 769 is prime, so the base width only admits a single head.
    c.num_layers = 10;
    c.hidden_dim = 769;
    c.num_heads = 1;
    c.ffn_dim = 769;
    c.dropout = 0.1;
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (desk|base)");
  }
  if (kind == ModelKind::kGat) c.num_layers = 2;
  return c;
}

void ModelConfig::check() const {
  if (input_dim == 0) throw std::invalid_argument("model: input_dim must be set");
  if (hidden_dim == 0 || num_heads == 0 || hidden_dim % num_heads != 0) {
    throw std::invalid_argument("model: hidden_dim must be a positive multiple of num_heads");
  }
  if (max_spd < 1 || max_degree < 1) throw std::invalid_argument("model: clamps must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("model: dropout must be in [0, 1)");
  if (kind == ModelKind::kGraphormer && ffn_dim == 0) throw std::invalid_argument("model: ffn_dim must be positive");
}

json ModelConfig::to_json() const {
  return json{{"model", model_kind_name(kind)}, {"preset", preset},         {"input_dim", input_dim},
              {"num_layers", num_layers},       {"hidden_dim", hidden_dim}, {"num_heads", num_heads},
              {"ffn_dim", ffn_dim},             {"max_spd", max_spd},       {"max_degree", max_degree},
              {"dropout", dropout},             {"init_std", init_std},     {"leaky_slope", leaky_slope}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  const ModelKind kind = parse_model_kind(j.value("model", std::string("graphormer")));
  ModelConfig c = from_preset(j.value("preset", std::string("desk")), kind);
  c.input_dim = j.value("input_dim", c.input_dim);
  c.num_layers = j.value("num_layers", c.num_layers);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.max_spd = j.value("max_spd", c.max_spd);
  c.max_degree = j.value("max_degree", c.max_degree);
  c.dropout = j.value("dropout", c.dropout);
  c.init_std = j.value("init_std", c.init_std);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  return c;
}

template <typename T>
std::vector<double> NodeRegressor<T>::predict(const ModelInput& input) const {
  Tape<T> tape;
  Var<T> out = forward(tape, input);
  auto v = out.value();
  return std::vector<double>(v.begin(), v.begin() + static_cast<long>(input.real_nodes));
}

template <typename T>
std::unique_ptr<NodeRegressor<T>> make_model(const ModelConfig& config) {
  if (config.kind == ModelKind::kGraphormer) return std::make_unique<Graphormer<T>>(config);
  return std::make_unique<Gat<T>>(config);
}

template <typename T>
Var<T> input_features(Tape<T>& tape, const ModelInput& input) {
  Tensor<T> x({input.num_nodes, input.feature_dim});
  for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] = static_cast<T>(input.features[i]);
  return tape.constant(std::move(x));
}

std::vector<std::uint8_t> real_column_mask(const ModelInput& input) {
  const std::size_t n = input.num_nodes;
  std::vector<std::uint8_t> allowed(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) allowed[i * n + j] = input.is_padding(j) ? 0 : 1;
  }
  return allowed;
}

int predicted_class(double value) {
  if (std::isnan(value)) return 0;
  const double r = std::nearbyint(value);
  if (r < 0.0) return 0;
  if (r > 4.0) return 4;
  return static_cast<int>(r);
}

template class NodeRegressor<float>;
template class NodeRegressor<double>;
template std::unique_ptr<NodeRegressor<float>> make_model<float>(const ModelConfig&);
template std::unique_ptr<NodeRegressor<double>> make_model<double>(const ModelConfig&);
template Var<float> input_features<float>(Tape<float>&, const ModelInput&);
template Var<double> input_features<double>(Tape<double>&, const ModelInput&);

}  // namespace threadcast

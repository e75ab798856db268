#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "threadcast/params.h"
#include "threadcast/struct_encode.h"
#include "threadcast/tensor.h"

namespace threadcast {

enum class ModelKind { kGraphormer, kGat };
const char* model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelConfig {
  ModelKind kind = ModelKind::kGraphormer;
  std::size_t input_dim = 0;  // d_text + 1; taken from the dataset when 0
  std::size_t num_layers = 4;
  std::size_t hidden_dim = 64;
  std::size_t num_heads = 4;
  std::size_t ffn_dim = 128;
  int max_spd = 16;
  int max_degree = 64;
  double dropout = 0.0;
  double init_std = 0.02;
  double leaky_slope = 0.2;  // GAT attention scoring
  std::string preset = "desk";

  // "desk": 4 layers, width 64, 4 heads. "base": 10 layers, width 769.
  // A GAT preset always has 2 layers.
  static ModelConfig from_preset(std::string_view name, ModelKind kind);
  void check() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct ForwardOptions {
  bool training = false;
  std::uint64_t dropout_seed = 0;
};

// Per-node scalar regression over one (possibly padded) graph.
template <typename T>
class NodeRegressor {
 public:
  explicit NodeRegressor(ModelConfig config) : config_(std::move(config)) {}
  virtual ~NodeRegressor() = default;

  const ModelConfig& config() const { return config_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }
  void initialize(std::uint64_t seed) { params_.initialize(seed, config_.init_std); }

  // [num_nodes x 1], padding rows included (their values are meaningless).
  virtual Var<T> forward(Tape<T>& tape, const ModelInput& input, const ForwardOptions& opts = {}) const = 0;

  // Attention matrices, one per layer and head, [num_nodes x num_nodes].
  virtual Var<T> forward_traced(Tape<T>& tape, const ModelInput& input, const ForwardOptions& opts,
                                std::vector<Var<T>>& attention) const = 0;

  // Convenience: forward on a fresh tape, predictions for real nodes only.
  std::vector<double> predict(const ModelInput& input) const;

 protected:
  ModelConfig config_;
  ParameterSet<T> params_;
};

template <typename T>
std::unique_ptr<NodeRegressor<T>> make_model(const ModelConfig& config);

// Input features as a [num_nodes x input_dim] constant.
template <typename T>
Var<T> input_features(Tape<T>& tape, const ModelInput& input);

// 1 where column j is a real node, for every row.
std::vector<std::uint8_t> real_column_mask(const ModelInput& input);

// Ordinal class from a regression output: nearest integer clamped to [0, 4].
int predicted_class(double value);

}  // namespace threadcast

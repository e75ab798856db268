#include "threadcast/gat.h"

#include <stdexcept>
#include <string>

namespace threadcast {

std::vector<std::uint8_t> neighbourhood_mask(const ModelInput& input) {
  const std::size_t n = input.num_nodes;
  std::vector<std::uint8_t> mask(n * n, 0);
  for (std::size_t i = 0; i < input.real_nodes; ++i) {
    for (std::size_t j = 0; j < input.real_nodes; ++j) {
      mask[i * n + j] = input.spd[i * n + j] <= 1 ? 1 : 0;
    }
  }
  return mask;
}

template <typename T>
Gat<T>::Gat(ModelConfig config) : NodeRegressor<T>(std::move(config)) {
  config_.kind = ModelKind::kGat;
  config_.check();
  const std::size_t d = config_.hidden_dim;
  const std::size_t dh = d / config_.num_heads;
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const std::string key = "gat." + std::to_string(l);
    params_.add(key + ".weight", {l == 0 ? config_.input_dim : d, d}, Init::kNormal);
    params_.add(key + ".att_src", {dh, config_.num_heads}, Init::kNormal);
    params_.add(key + ".att_dst", {dh, config_.num_heads}, Init::kNormal);
    params_.add(key + ".bias", {d});
  }
  params_.add("head.weight", {d, 1}, Init::kNormal);
  params_.add("head.bias", {1});
}

template <typename T>
Var<T> Gat<T>::gat_layer(Tape<T>& tape, const Var<T>& h, std::span<const std::uint8_t> adjacency, std::size_t layer,
                         std::vector<Var<T>>* attention) const {
  const std::string key = "gat." + std::to_string(layer);
  const std::size_t heads = config_.num_heads;
  const std::size_t dh = config_.hidden_dim / heads;
  Var<T> wh = matmul(h, tape.parameter(params_.at(key + ".weight")));
  Var<T> att_src = tape.parameter(params_.at(key + ".att_src"));
  Var<T> att_dst = tape.parameter(params_.at(key + ".att_dst"));

  std::vector<Var<T>> outs;
  for (std::size_t hd = 0; hd < heads; ++hd) {
    Var<T> whh = slice_cols(wh, hd * dh, (hd + 1) * dh);
    Var<T> s_src = matmul(whh, slice_cols(att_src, hd, hd + 1));
    Var<T> s_dst = matmul(whh, slice_cols(att_dst, hd, hd + 1));
    // e[i][j] scores node j as a source for target i.
    Var<T> e = leaky_relu(outer_add(s_dst, s_src), static_cast<T>(config_.leaky_slope));
    Var<T> alpha = softmax(e, adjacency);
    if (attention) attention->push_back(alpha);
    outs.push_back(matmul(alpha, whh));
  }
  Var<T> out = heads == 1 ? outs[0] : concat_cols(outs);
  return elu(add(out, tape.parameter(params_.at(key + ".bias"))));
}

template <typename T>
Var<T> Gat<T>::forward_traced(Tape<T>& tape, const ModelInput& input, const ForwardOptions& opts,
                              std::vector<Var<T>>& attention) const {
  if (input.feature_dim != config_.input_dim) {
    throw std::invalid_argument("gat: input width " + std::to_string(input.feature_dim) + ", model expects " +
                                std::to_string(config_.input_dim));
  }
  const std::vector<std::uint8_t> adjacency = neighbourhood_mask(input);
  Var<T> h = input_features<T>(tape, input);
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    h = gat_layer(tape, h, adjacency, l, &attention);
    if (opts.training && config_.dropout > 0.0) h = dropout(h, config_.dropout, opts.dropout_seed + l);
  }
  Var<T> w = tape.parameter(params_.at("head.weight"));
  Var<T> b = tape.parameter(params_.at("head.bias"));
  return add(matmul(h, w), b);
}

template <typename T>
Var<T> Gat<T>::forward(Tape<T>& tape, const ModelInput& input, const ForwardOptions& opts) const {
  std::vector<Var<T>> unused;
  return forward_traced(tape, input, opts, unused);
}

template class Gat<float>;
template class Gat<double>;

}  // namespace threadcast

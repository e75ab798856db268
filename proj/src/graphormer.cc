#include "threadcast/graphormer.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "threadcast/rng.h"

namespace threadcast {

namespace {

std::string layer_key(std::size_t layer, const char* leaf) { return "layers." + std::to_string(layer) + "." + leaf; }

template <typename T>
Var<T> linear(Tape<T>& tape, const Var<T>& x, const ParameterSet<T>& params, const std::string& prefix) {
  Var<T> w = tape.parameter(params.at(prefix + ".weight"));
  Var<T> b = tape.parameter(params.at(prefix + ".bias"));
  return add(matmul(x, w), b);
}

template <typename T>
Var<T> norm(Tape<T>& tape, const Var<T>& x, const ParameterSet<T>& params, const std::string& prefix) {
  return layer_norm(x, tape.parameter(params.at(prefix + ".gamma")), tape.parameter(params.at(prefix + ".beta")));
}

}  // namespace

template <typename T>
Graphormer<T>::Graphormer(ModelConfig config) : NodeRegressor<T>(std::move(config)) {
  config_.kind = ModelKind::kGraphormer;
  config_.check();
  const std::size_t d = config_.hidden_dim;
  params_.add("input.weight", {config_.input_dim, d}, Init::kNormal);
  params_.add("input.bias", {d});
  params_.add("centrality.in", {static_cast<std::size_t>(config_.max_degree) + 1, d}, Init::kNormal);
  params_.add("centrality.out", {static_cast<std::size_t>(config_.max_degree) + 1, d}, Init::kNormal);
  params_.add("spatial.bias", {static_cast<std::size_t>(config_.max_spd) + 1, config_.num_heads});
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    params_.add(layer_key(l, "ln1.gamma"), {d}, Init::kOnes);
    params_.add(layer_key(l, "ln1.beta"), {d});
    for (const char* proj : {"attn.q", "attn.k", "attn.v", "attn.out"}) {
      params_.add(layer_key(l, proj) + ".weight", {d, d}, Init::kNormal);
      params_.add(layer_key(l, proj) + ".bias", {d});
    }
    params_.add(layer_key(l, "ln2.gamma"), {d}, Init::kOnes);
    params_.add(layer_key(l, "ln2.beta"), {d});
    params_.add(layer_key(l, "ffn.fc1.weight"), {d, config_.ffn_dim}, Init::kNormal);
    params_.add(layer_key(l, "ffn.fc1.bias"), {config_.ffn_dim});
    params_.add(layer_key(l, "ffn.fc2.weight"), {config_.ffn_dim, d}, Init::kNormal);
    params_.add(layer_key(l, "ffn.fc2.bias"), {d});
  }
  params_.add("final_ln.gamma", {d}, Init::kOnes);
  params_.add("final_ln.beta", {d});
  params_.add("head.weight", {d, 1}, Init::kNormal);
  params_.add("head.bias", {1});
}

template <typename T>
Var<T> Graphormer<T>::embed_inputs(Tape<T>& tape, const ModelInput& input) const {
  if (input.feature_dim != config_.input_dim) {
    throw std::invalid_argument("graphormer: input width " + std::to_string(input.feature_dim) + ", model expects " +
                                std::to_string(config_.input_dim));
  }
  std::vector<int> in_deg(input.in_degree), out_deg(input.out_degree);
  for (int& v : in_deg) v = std::clamp(v, 0, config_.max_degree);
  for (int& v : out_deg) v = std::clamp(v, 0, config_.max_degree);
  Var<T> h = linear(tape, input_features<T>(tape, input), params_, "input");
  h = add(h, embedding_lookup(tape.parameter(params_.at("centrality.in")), std::span<const int>(in_deg)));
  return add(h, embedding_lookup(tape.parameter(params_.at("centrality.out")), std::span<const int>(out_deg)));
}

template <typename T>
std::vector<Var<T>> Graphormer<T>::spatial_bias(Tape<T>& tape, const ModelInput& input) const {
  const std::size_t n = input.num_nodes;
  std::vector<int> idx(input.spd);
  for (int& v : idx) v = std::clamp(v, 0, config_.max_spd);
  Var<T> all = embedding_lookup(tape.parameter(params_.at("spatial.bias")), std::span<const int>(idx));
  std::vector<Var<T>> per_head;
  for (std::size_t h = 0; h < config_.num_heads; ++h) per_head.push_back(reshape(slice_cols(all, h, h + 1), {n, n}));
  return per_head;
}

template <typename T>
Var<T> Graphormer<T>::attention_layer(Tape<T>& tape, const Var<T>& h, const std::vector<Var<T>>& bias,
                                      std::span<const std::uint8_t> allowed, std::size_t layer,
                                      const ForwardOptions& opts, std::vector<Var<T>>* attention) const {
  const std::size_t heads = config_.num_heads;
  const std::size_t dh = config_.hidden_dim / heads;
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(dh));
  const bool drop = opts.training && config_.dropout > 0.0;
  auto drop_seed = [&](std::uint64_t site) { return derive_seed(opts.dropout_seed, layer * 16 + site); };

  Var<T> a = norm(tape, h, params_, layer_key(layer, "ln1"));
  Var<T> q = linear(tape, a, params_, layer_key(layer, "attn.q"));
  Var<T> k = linear(tape, a, params_, layer_key(layer, "attn.k"));
  Var<T> v = linear(tape, a, params_, layer_key(layer, "attn.v"));

  std::vector<Var<T>> outs;
  for (std::size_t hd = 0; hd < heads; ++hd) {
    Var<T> qh = slice_cols(q, hd * dh, (hd + 1) * dh);
    Var<T> kh = slice_cols(k, hd * dh, (hd + 1) * dh);
    Var<T> vh = slice_cols(v, hd * dh, (hd + 1) * dh);
    Var<T> logits = add(scale(matmul(qh, transpose(kh)), inv_sqrt_d), bias[hd]);
    Var<T> weights = softmax(logits, allowed);
    if (attention) attention->push_back(weights);
    if (drop) weights = dropout(weights, config_.dropout, drop_seed(hd));
    outs.push_back(matmul(weights, vh));
  }
  Var<T> o = linear(tape, heads == 1 ? outs[0] : concat_cols(outs), params_, layer_key(layer, "attn.out"));
  if (drop) o = dropout(o, config_.dropout, drop_seed(14));
  Var<T> h1 = add(h, o);

  Var<T> f = norm(tape, h1, params_, layer_key(layer, "ln2"));
  f = gelu(linear(tape, f, params_, layer_key(layer, "ffn.fc1")));
  f = linear(tape, f, params_, layer_key(layer, "ffn.fc2"));
  if (drop) f = dropout(f, config_.dropout, drop_seed(15));
  return add(h1, f);
}

template <typename T>
Var<T> Graphormer<T>::forward_traced(Tape<T>& tape, const ModelInput& input, const ForwardOptions& opts,
                                     std::vector<Var<T>>& attention) const {
  Var<T> h = embed_inputs(tape, input);
  if (config_.num_layers > 0) {
    const std::vector<std::uint8_t> allowed = real_column_mask(input);
    const std::vector<Var<T>> bias = spatial_bias(tape, input);
    for (std::size_t l = 0; l < config_.num_layers; ++l) {
      h = attention_layer(tape, h, bias, allowed, l, opts, &attention);
    }
  }
  h = norm(tape, h, params_, "final_ln");
  return linear(tape, h, params_, "head");
}

template <typename T>
Var<T> Graphormer<T>::forward(Tape<T>& tape, const ModelInput& input, const ForwardOptions& opts) const {
  std::vector<Var<T>> unused;
  return forward_traced(tape, input, opts, unused);
}

template class Graphormer<float>;
template class Graphormer<double>;

}  // namespace threadcast

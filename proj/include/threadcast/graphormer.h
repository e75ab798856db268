#pragma once

#include <vector>

#include "threadcast/model.h"

namespace threadcast {

// Graph transformer for node-level regression: degree (centrality)
// embeddings added to the projected inputs, a learnable per-head bias indexed
// by shortest-path distance inside every attention layer, pre-norm blocks
// with a GELU feed-forward, and a linear head per node. No virtual graph node
// and no edge features.
template <typename T>
class Graphormer final : public NodeRegressor<T> {
 public:
  explicit Graphormer(ModelConfig config);

  Var<T> forward(Tape<T>& tape, const ModelInput& input, const ForwardOptions& opts = {}) const override;
  Var<T> forward_traced(Tape<T>& tape, const ModelInput& input, const ForwardOptions& opts,
                        std::vector<Var<T>>& attention) const override;

  // H0 = x W_in + b_in + z_in[in_degree] + z_out[out_degree]
  Var<T> embed_inputs(Tape<T>& tape, const ModelInput& input) const;

  // Per head [N x N] spatial bias b[spd(i, j)], shared by all layers.
  std::vector<Var<T>> spatial_bias(Tape<T>& tape, const ModelInput& input) const;

  // One pre-norm block: H + MHA(LN(H)), then + FFN(LN(.)).
  Var<T> attention_layer(Tape<T>& tape, const Var<T>& h, const std::vector<Var<T>>& bias,
                         std::span<const std::uint8_t> allowed, std::size_t layer, const ForwardOptions& opts,
                         std::vector<Var<T>>* attention) const;

 private:
  using NodeRegressor<T>::config_;
  using NodeRegressor<T>::params_;
};

}  // namespace threadcast

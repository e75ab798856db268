#pragma once

#include <vector>

#include "threadcast/model.h"

namespace threadcast {

// Graph attention baseline: every layer aggregates only over a node's direct
// neighbours (undirected tree edges plus a self loop), so a two-layer stack
// sees at most two hops.
template <typename T>
class Gat final : public NodeRegressor<T> {
 public:
  explicit Gat(ModelConfig config);

  Var<T> forward(Tape<T>& tape, const ModelInput& input, const ForwardOptions& opts = {}) const override;
  Var<T> forward_traced(Tape<T>& tape, const ModelInput& input, const ForwardOptions& opts,
                        std::vector<Var<T>>& attention) const override;

  Var<T> gat_layer(Tape<T>& tape, const Var<T>& h, std::span<const std::uint8_t> adjacency, std::size_t layer,
                   std::vector<Var<T>>* attention) const;

 private:
  using NodeRegressor<T>::config_;
  using NodeRegressor<T>::params_;
};

// Undirected tree edges plus self loops among real nodes, row-major N x N.
std::vector<std::uint8_t> neighbourhood_mask(const ModelInput& input);

}  // namespace threadcast

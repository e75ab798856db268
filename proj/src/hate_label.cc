#include "threadcast/hate_label.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace threadcast {

LabelWeights LabelWeights::parse(std::string_view spec) {
  LabelWeights w;
  if (spec == "equal") return w;
  if (spec == "influence") {
    w.influence = 0.5;
    return w;
  }
  if (spec == "reaction") {
    w.reaction = 0.5;
    return w;
  }
  if (spec == "context") {
    w.context = 0.5;
    return w;
  }
  constexpr std::string_view prefix = "custom(";
  if (spec.substr(0, prefix.size()) == prefix && spec.back() == ')') {
    std::string body(spec.substr(prefix.size(), spec.size() - prefix.size() - 1));
    double values[3];
    char trailing;
    if (std::sscanf(body.c_str(), "%lf,%lf,%lf%c", &values[0], &values[1], &values[2], &trailing) != 3) {
      throw std::invalid_argument("label weights: cannot parse '" + std::string(spec) + "'");
    }
    w = {values[0], values[1], values[2]};
    w.check();
    return w;
  }
  throw std::invalid_argument("label weights: unknown preset '" + std::string(spec) +
                              "' (equal|influence|reaction|context|custom(wc,wr,wi))");
}

void LabelWeights::check() const {
  if (!(context >= 0.0 && reaction >= 0.0 && influence >= 0.0)) {
    throw std::invalid_argument("label weights must be non-negative");
  }
}

std::vector<NamedWeights> sensitivity_presets() {
  return {
      {"Equal", "equal", LabelWeights::parse("equal")},
      {"Influence", "influence", LabelWeights::parse("influence")},
      {"Reaction", "reaction", LabelWeights::parse("reaction")},
      {"Context", "context", LabelWeights::parse("context")},
  };
}

double scale_hate(double hate_raw) {
  if (!(hate_raw >= 0.0 && hate_raw <= 1.0)) {
    throw std::out_of_range("scale_hate: hate_raw " + std::to_string(hate_raw) + " outside [0, 1]");
  }
  // -0.7 + 2.2 x, written in tenths so that raw values of exact tenths of
  // scaled hate map back exactly.
  return (22.0 * hate_raw - 7.0) / 10.0;
}

int bucketize(double value) {
  if (std::isnan(value)) throw std::invalid_argument("bucketize: NaN label");
  if (value < 0.0) return 0;
  if (value <= 5.0) return 1;
  if (value <= 20.0) return 2;
  if (value <= 500.0) return 3;
  return 4;
}

std::vector<HateLabel> compute_labels(const DiscussionTree& tree, const LabelWeights& weights) {
  weights.check();
  const std::size_t n = tree.size();
  std::vector<double> reaction_base(n);  // scaled hate times score
  for (std::size_t i = 0; i < n; ++i) {
    const CommentNode& node = tree.nodes[i];
    if (!node.hate_raw) throw std::invalid_argument("compute_labels: node '" + node.id + "' has no hate_raw");
    reaction_base[i] = scale_hate(*node.hate_raw) * static_cast<double>(node.score);
  }

  // Breadth-first order; reversed it visits every child before its parent.
  std::vector<std::size_t> order{tree.root_index};
  std::vector<int> parent(n, -1);
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (std::size_t c : tree.children[order[k]]) {
      parent[c] = static_cast<int>(order[k]);
      order.push_back(c);
    }
  }

  std::vector<HateLabel> labels(n);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t v = *it;
    const double context = parent[v] < 0 ? 0.0 : weights.context * reaction_base[parent[v]];
    const double reaction = weights.reaction * reaction_base[v];
    double influence = 0.0;
    for (std::size_t c : tree.children[v]) influence += weights.influence * labels[c].value;
    labels[v].value = context + reaction + influence;
    labels[v].cls = bucketize(labels[v].value);
  }
  return labels;
}

void LabelDistribution::add(const std::string& community, int cls) {
  auto it = std::lower_bound(communities.begin(), communities.end(), community);
  const auto pos = static_cast<std::size_t>(it - communities.begin());
  if (it == communities.end() || *it != community) {
    communities.insert(it, community);
    counts.insert(counts.begin() + static_cast<long>(pos), std::array<std::size_t, kNumClasses>{});
  }
  counts[pos].at(static_cast<std::size_t>(cls)) += 1;
}

std::array<std::size_t, kNumClasses> LabelDistribution::total() const {
  std::array<std::size_t, kNumClasses> sum{};
  for (const auto& row : counts) {
    for (int c = 0; c < kNumClasses; ++c) sum[c] += row[c];
  }
  return sum;
}

std::string LabelDistribution::to_tsv() const {
  std::ostringstream out;
  out << "community\t0\t1\t2\t3\t4\n";
  auto row = [&](const std::string& name, const std::array<std::size_t, kNumClasses>& r) {
    out << name;
    for (std::size_t v : r) out << '\t' << v;
    out << '\n';
  };
  for (std::size_t i = 0; i < communities.size(); ++i) row(communities[i], counts[i]);
  row("Total", total());
  return out.str();
}

LabeledDataset label_dataset(const std::vector<DiscussionTree>& trees, const LabelWeights& weights) {
  LabeledDataset out;
  out.trees.reserve(trees.size());
  for (const DiscussionTree& tree : trees) {
    LabeledTree lt{tree, compute_labels(tree, weights)};
    for (std::size_t i = 0; i < lt.labels.size(); ++i) {
      out.distribution.add(tree.community, lt.labels[i].cls);
    }
    out.trees.push_back(std::move(lt));
  }
  return out;
}

}  // namespace threadcast

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "threadcast/discussion_graph.h"

namespace threadcast {

inline constexpr int kNumClasses = 5;

// Weights of the context (parent), reaction (self) and influence (children)
// terms of the recursive hate label.
struct LabelWeights {
  double context = 0.25;
  double reaction = 0.25;
  double influence = 0.25;

  // "equal", "influence", "reaction", "context": the named term is weighted
  // 0.5 and the others 0.25. Also accepts "custom(wc,wr,wi)".
  static LabelWeights parse(std::string_view spec);
  void check() const;
};

// The four named sensitivity variants in report order.
struct NamedWeights {
  std::string name;  // display name, e.g. "Influence"
  std::string key;   // preset key, e.g. "influence"
  LabelWeights weights;
};
std::vector<NamedWeights> sensitivity_presets();

struct HateLabel {
  double value = 0.0;  // continuous recursive label
  int cls = 0;         // ordinal class in [0, 4]
};

// Affine map of a classifier probability onto [-0.7, 1.5].
double scale_hate(double hate_raw);

// Right-closed bins: (<0), [0,5], (5,20], (20,500], (>500).
int bucketize(double value);

// Labels indexed like tree.nodes. Every node needs hate_raw.
std::vector<HateLabel> compute_labels(const DiscussionTree& tree, const LabelWeights& weights);

struct LabeledTree {
  DiscussionTree tree;
  std::vector<HateLabel> labels;
};

// Per-community class histogram, communities in lexicographic order.
struct LabelDistribution {
  std::vector<std::string> communities;
  std::vector<std::array<std::size_t, kNumClasses>> counts;

  void add(const std::string& community, int cls);
  std::array<std::size_t, kNumClasses> total() const;
  std::string to_tsv() const;
};

struct LabeledDataset {
  std::vector<LabeledTree> trees;
  LabelDistribution distribution;
};

LabeledDataset label_dataset(const std::vector<DiscussionTree>& trees, const LabelWeights& weights);

}  // namespace threadcast

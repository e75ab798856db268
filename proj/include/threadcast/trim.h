#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "threadcast/hate_label.h"

namespace threadcast {

struct TrimConfig {
  int max_depth = 4;
  std::size_t min_descendants = 2;
  std::size_t min_nodes_after = 2;

  void check() const;
};

// Strict descendant counts for every node.
std::vector<std::size_t> descendant_counts(const DiscussionTree& tree);
std::size_t count_descendants(const DiscussionTree& tree, std::size_t node);

// Keeps the root, and each comment at depth <= max_depth with at least
// min_descendants descendants in the full tree whose parent is also kept.
// Labels are carried over from the full tree. Returns nullopt when fewer than
// min_nodes_after nodes remain.
std::optional<LabeledTree> trim_tree(const LabeledTree& tree, const TrimConfig& cfg);

struct TrimReport {
  struct Row {
    std::string community;
    std::size_t trees = 0;
    std::size_t trees_kept = 0;
    std::size_t nodes = 0;
    std::size_t nodes_after = 0;
  };
  std::vector<Row> rows;  // lexicographic by community

  Row& row(const std::string& community);
  std::size_t dropped() const;
  // community, nodes, nodes after filtering, trees, trees kept
  std::string to_tsv() const;
};

struct TrimResult {
  std::vector<LabeledTree> trees;
  TrimReport report;
};

TrimResult trim_dataset(const std::vector<LabeledTree>& trees, const TrimConfig& cfg);

}  // namespace threadcast

#pragma once

// Slow, obviously-correct reference implementations used only by tests. They
// share no code with the library beyond the plain data types.

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "threadcast/discussion_graph.h"
#include "threadcast/hate_label.h"

namespace oracle {

// Random tree over `n` nodes: node i > 0 attaches to a uniformly chosen
// earlier node. Scores in [-50, 50], hate_raw uniform in [0, 1]. Node order is
// shuffled so nothing depends on parents preceding children.
threadcast::DiscussionTree random_tree(std::uint64_t seed, std::size_t n, const std::string& community = "c");

// The recursive label evaluated by plain recursion, finding parents
// and children by scanning parent ids.
double label_value(const threadcast::DiscussionTree& tree, std::size_t v, const threadcast::LabelWeights& w);
std::vector<double> label_values(const threadcast::DiscussionTree& tree, const threadcast::LabelWeights& w);
int label_class(double value);

// Node ids that survive trimming, by direct set filtering: a comment survives
// when it and every ancestor up to the root pass depth and descendant tests.
std::set<std::string> trim_ids(const threadcast::DiscussionTree& tree, int max_depth, std::size_t min_desc);

// All-pairs hop distances by Floyd-Warshall over the undirected tree.
std::vector<int> floyd_warshall(const threadcast::DiscussionTree& tree);

// Depth of every node by walking parent ids.
std::vector<int> depths(const threadcast::DiscussionTree& tree);

// Central difference of f at x along every coordinate.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h = 1e-4);

// max |a - b| / max(floor, |a|, |b|) over coordinates.
double max_rel_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1.0);

}  // namespace oracle

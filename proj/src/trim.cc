#include "threadcast/trim.h"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace threadcast {

void TrimConfig::check() const {
  if (max_depth < 0) throw std::invalid_argument("trim: max_depth must be >= 0");
}

std::vector<std::size_t> descendant_counts(const DiscussionTree& tree) {
  std::vector<std::size_t> order{tree.root_index};
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (std::size_t c : tree.children[order[k]]) order.push_back(c);
  }
  std::vector<std::size_t> count(tree.size(), 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    for (std::size_t c : tree.children[*it]) count[*it] += 1 + count[c];
  }
  return count;
}

std::size_t count_descendants(const DiscussionTree& tree, std::size_t node) {
  return descendant_counts(tree).at(node);
}

std::optional<LabeledTree> trim_tree(const LabeledTree& in, const TrimConfig& cfg) {
  cfg.check();
  const DiscussionTree& tree = in.tree;
  const std::vector<std::size_t> desc = descendant_counts(tree);

  std::vector<bool> keep(tree.size(), false);
  keep[tree.root_index] = true;
  std::vector<std::size_t> stack{tree.root_index};
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t c : tree.children[u]) {
      if (tree.nodes[c].depth <= cfg.max_depth && desc[c] >= cfg.min_descendants) {
        keep[c] = true;
        stack.push_back(c);
      }
    }
  }

  const auto kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
  if (kept < cfg.min_nodes_after) return std::nullopt;

  std::vector<CommentNode> nodes;
  std::vector<HateLabel> labels;
  nodes.reserve(kept);
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (!keep[i]) continue;
    nodes.push_back(tree.nodes[i]);
    if (!in.labels.empty()) labels.push_back(in.labels[i]);
  }
  return LabeledTree{make_tree(tree.community, std::move(nodes)), std::move(labels)};
}

TrimReport::Row& TrimReport::row(const std::string& community) {
  auto it = std::lower_bound(rows.begin(), rows.end(), community,
                             [](const Row& r, const std::string& c) { return r.community < c; });
  if (it == rows.end() || it->community != community) it = rows.insert(it, Row{community});
  return *it;
}

std::size_t TrimReport::dropped() const {
  std::size_t d = 0;
  for (const Row& r : rows) d += r.trees - r.trees_kept;
  return d;
}

std::string TrimReport::to_tsv() const {
  std::ostringstream out;
  out << "community\tnodes\tnodes_after_filtering\ttrees\ttrees_kept\n";
  for (const Row& r : rows) {
    out << r.community << '\t' << r.nodes << '\t' << r.nodes_after << '\t' << r.trees << '\t' << r.trees_kept
        << '\n';
  }
  return out.str();
}

TrimResult trim_dataset(const std::vector<LabeledTree>& trees, const TrimConfig& cfg) {
  TrimResult out;
  for (const LabeledTree& t : trees) {
    TrimReport::Row& row = out.report.row(t.tree.community);
    row.trees += 1;
    row.nodes += t.tree.size();
    auto trimmed = trim_tree(t, cfg);
    if (!trimmed) continue;
    row.trees_kept += 1;
    row.nodes_after += trimmed->tree.size();
    out.trees.push_back(std::move(*trimmed));
  }
  return out;
}

}  // namespace threadcast

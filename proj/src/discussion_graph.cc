#include "threadcast/discussion_graph.h"

#include <deque>
#include <istream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace threadcast {

using nlohmann::json;

std::string strip_kind_prefix(const std::string& id) {
  if (id.size() > 3 && id[0] == 't' && (id[1] == '1' || id[1] == '3') && id[2] == '_') {
    return id.substr(3);
  }
  return id;
}

DiscussionTree make_tree(std::string community, std::vector<CommentNode> nodes) {
  if (nodes.empty()) throw std::invalid_argument("make_tree: empty node list");
  DiscussionTree tree;
  tree.community = std::move(community);
  tree.children.resize(nodes.size());

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!index.emplace(nodes[i].id, i).second) {
      throw std::invalid_argument("make_tree: duplicate id '" + nodes[i].id + "'");
    }
  }

  std::optional<std::size_t> root;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!nodes[i].parent_id) {
      if (root) throw std::invalid_argument("make_tree: more than one root");
      root = i;
      continue;
    }
    auto it = index.find(*nodes[i].parent_id);
    if (it == index.end()) {
      throw std::invalid_argument("make_tree: parent '" + *nodes[i].parent_id + "' of '" +
                                  nodes[i].id + "' not in tree");
    }
    if (it->second == i) throw std::invalid_argument("make_tree: '" + nodes[i].id + "' is its own parent");
    tree.children[it->second].push_back(i);
  }
  if (!root) throw std::invalid_argument("make_tree: no root");
  tree.root_index = *root;

  std::vector<bool> seen(nodes.size(), false);
  std::deque<std::size_t> queue{*root};
  seen[*root] = true;
  nodes[*root].depth = 0;
  std::size_t visited = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    ++visited;
    for (std::size_t c : tree.children[u]) {
      seen[c] = true;
      nodes[c].depth = nodes[u].depth + 1;
      queue.push_back(c);
    }
  }
  if (visited != nodes.size()) throw std::invalid_argument("make_tree: links contain a cycle");

  for (auto& n : nodes) {
    if (n.community.empty()) n.community = tree.community;
  }
  tree.nodes = std::move(nodes);
  return tree;
}

std::vector<int> parent_indices(const DiscussionTree& tree) {
  std::vector<int> parent(tree.size(), -1);
  for (std::size_t u = 0; u < tree.children.size(); ++u) {
    for (std::size_t c : tree.children[u]) parent[c] = static_cast<int>(u);
  }
  return parent;
}

namespace {

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw std::runtime_error(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

RawRecord record_from_json(const json& obj) {
  if (!obj.is_object()) throw std::runtime_error("record is not a JSON object");
  RawRecord rec;

  auto id = optional_string(obj, "id");
  if (!id || id->empty()) throw std::runtime_error("missing field 'id'");
  rec.id = strip_kind_prefix(*id);

  auto score = obj.find("score");
  if (score == obj.end() || score->is_null()) throw std::runtime_error("missing field 'score'");
  if (!score->is_number()) throw std::runtime_error("field 'score' is not a number");
  rec.score = score->is_number_integer() ? score->get<std::int64_t>()
                                         : static_cast<std::int64_t>(score->get<double>());

  if (auto parent = optional_string(obj, "parent_id")) rec.parent_id = strip_kind_prefix(*parent);
  if (auto link = optional_string(obj, "link_id")) rec.link_id = strip_kind_prefix(*link);
  // A comment with only a link marker is a top-level reply to the submission.
  if (!rec.parent_id && rec.link_id && *rec.link_id != rec.id) rec.parent_id = rec.link_id;

  if (auto body = optional_string(obj, "body")) {
    rec.text = *body;
  } else {
    auto title = optional_string(obj, "title");
    auto selftext = optional_string(obj, "selftext");
    if (!title && !selftext) throw std::runtime_error("missing text field (body or title/selftext)");
    rec.text = title.value_or("");
    if (selftext && !selftext->empty()) {
      if (!rec.text.empty()) rec.text += "\n";
      rec.text += *selftext;
    }
  }
  rec.community = optional_string(obj, "subreddit").value_or("");
  return rec;
}

}  // namespace

ParseResult parse_records(std::istream& in, bool strict) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++result.lines_read;
    try {
      RawRecord rec = record_from_json(json::parse(line));
      rec.line = line_no;
      result.records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      if (strict) throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
      result.diagnostics.push_back({line_no, e.what()});
    }
  }
  return result;
}

BuildResult build_trees(const std::vector<RawRecord>& records) {
  BuildResult result;
  result.report.records = records.size();

  std::unordered_map<std::string, std::vector<std::size_t>> replies;  // parent id -> record indices
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].is_submission()) replies[*records[i].parent_id].push_back(i);
  }

  std::unordered_map<std::string, std::size_t> id_count;
  for (const RawRecord& rec : records) ++id_count[rec.id];

  std::vector<bool> assigned(records.size(), false);
  for (std::size_t s = 0; s < records.size(); ++s) {
    if (!records[s].is_submission() || assigned[s]) continue;

    // Any record whose id occurs more than once makes its tree ambiguous.
    std::vector<std::size_t> members;
    bool duplicate = false;
    std::deque<std::size_t> queue{s};
    while (!queue.empty()) {
      const std::size_t r = queue.front();
      queue.pop_front();
      if (assigned[r]) {
        duplicate = true;
        continue;
      }
      assigned[r] = true;
      members.push_back(r);
      if (id_count[records[r].id] > 1) duplicate = true;
      auto it = replies.find(records[r].id);
      if (it == replies.end()) continue;
      for (std::size_t c : it->second) queue.push_back(c);
    }

    if (duplicate) {
      ++result.report.trees_rejected;
      result.report.records_rejected += members.size();
      result.report.messages.push_back("submission '" + records[s].id +
                                       "': duplicate comment id, tree rejected");
      continue;
    }

    std::vector<CommentNode> nodes;
    nodes.reserve(members.size());
    for (std::size_t r : members) {
      const RawRecord& rec = records[r];
      CommentNode node;
      node.id = rec.id;
      if (r != s) node.parent_id = rec.parent_id;
      node.text = rec.text;
      node.score = rec.score;
      node.community = rec.community.empty() ? records[s].community : rec.community;
      nodes.push_back(std::move(node));
    }
    result.report.nodes += nodes.size();
    result.trees.push_back(make_tree(records[s].community, std::move(nodes)));
  }
  result.report.trees = result.trees.size();

  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!assigned[i]) ++result.report.orphans_dropped;
  }
  if (result.report.orphans_dropped > 0) {
    result.report.messages.push_back(std::to_string(result.report.orphans_dropped) +
                                     " comment(s) without a reachable submission dropped");
  }
  return result;
}

const char* violation_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kEmpty: return "empty";
    case ViolationKind::kRootIndex: return "root-index";
    case ViolationKind::kRootHasParent: return "root-has-parent";
    case ViolationKind::kMultipleRoots: return "multiple-roots";
    case ViolationKind::kDanglingParent: return "dangling-parent";
    case ViolationKind::kDuplicateId: return "duplicate-id";
    case ViolationKind::kCycle: return "cycle";
    case ViolationKind::kDisconnected: return "disconnected";
    case ViolationKind::kChildrenMismatch: return "children-mismatch";
    case ViolationKind::kDepthMismatch: return "depth-mismatch";
  }
  return "unknown";
}

std::vector<Violation> validate(const DiscussionTree& tree) {
  std::vector<Violation> out;
  const std::size_t n = tree.nodes.size();
  if (n == 0) {
    out.push_back({ViolationKind::kEmpty, 0, "tree has no nodes"});
    return out;
  }
  if (tree.root_index >= n) {
    out.push_back({ViolationKind::kRootIndex, tree.root_index, "root index out of range"});
    return out;
  }

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    if (!index.emplace(tree.nodes[i].id, i).second) {
      out.push_back({ViolationKind::kDuplicateId, i, "duplicate id '" + tree.nodes[i].id + "'"});
    }
  }

  // Parent links as declared by parent_id.
  std::vector<long> parent(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const CommentNode& node = tree.nodes[i];
    if (i == tree.root_index) {
      if (node.parent_id) out.push_back({ViolationKind::kRootHasParent, i, "root has a parent_id"});
      continue;
    }
    if (!node.parent_id) {
      out.push_back({ViolationKind::kMultipleRoots, i, "non-root node '" + node.id + "' has no parent"});
      continue;
    }
    auto it = index.find(*node.parent_id);
    if (it == index.end()) {
      out.push_back({ViolationKind::kDanglingParent, i,
                     "parent '" + *node.parent_id + "' of '" + node.id + "' not in tree"});
      continue;
    }
    if (it->second == i) {
      out.push_back({ViolationKind::kCycle, i, "node '" + node.id + "' is its own parent"});
      continue;
    }
    parent[i] = static_cast<long>(it->second);
  }

  // Adjacency must mirror the parent links exactly.
  if (tree.children.size() != n) {
    out.push_back({ViolationKind::kChildrenMismatch, 0, "children table size differs from node count"});
  } else {
    std::vector<long> from_children(n, -1);
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t c : tree.children[u]) {
        if (c >= n) {
          out.push_back({ViolationKind::kChildrenMismatch, u, "child index out of range"});
          continue;
        }
        if (from_children[c] != -1) {
          out.push_back({ViolationKind::kChildrenMismatch, c, "node listed as child more than once"});
        }
        from_children[c] = static_cast<long>(u);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (parent[i] != -1 && from_children[i] != parent[i]) {
        out.push_back({ViolationKind::kChildrenMismatch, i,
                       "children adjacency disagrees with parent_id of '" + tree.nodes[i].id + "'"});
      }
    }
  }

  // Walk up from each node; a walk that revisits a node without reaching the
  // root is a cycle, one that stops elsewhere is disconnected.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t steps = 0;
    long u = static_cast<long>(i);
    while (u != -1 && static_cast<std::size_t>(u) != tree.root_index && steps <= n) {
      u = parent[u];
      ++steps;
    }
    if (steps > n) {
      out.push_back({ViolationKind::kCycle, i, "parent chain of '" + tree.nodes[i].id + "' loops"});
    } else if (u == -1 && i != tree.root_index && parent[i] != -1) {
      out.push_back({ViolationKind::kDisconnected, i, "'" + tree.nodes[i].id + "' does not reach the root"});
    } else if (u != -1 && tree.nodes[i].depth != static_cast<int>(steps)) {
      out.push_back({ViolationKind::kDepthMismatch, i,
                     "depth of '" + tree.nodes[i].id + "' is " + std::to_string(tree.nodes[i].depth) +
                         ", expected " + std::to_string(steps)});
    }
  }
  return out;
}

}  // namespace threadcast

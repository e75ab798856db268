#include "threadcast/tree_io.h"

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace threadcast {

using nlohmann::json;

json tree_to_json(const DiscussionTree& tree, std::span<const HateLabel> labels) {
  if (!labels.empty() && labels.size() != tree.size()) {
    throw std::invalid_argument("tree_to_json: label count does not match node count");
  }
  json nodes = json::array();
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const CommentNode& n = tree.nodes[i];
    json node = {{"id", n.id},
                 {"parent", n.parent_id ? json(*n.parent_id) : json(nullptr)},
                 {"text", n.text},
                 {"score", n.score}};
    if (n.hate_raw) node["hate_raw"] = *n.hate_raw;
    if (!labels.empty()) {
      node["L"] = labels[i].value;
      node["class"] = labels[i].cls;
    }
    nodes.push_back(std::move(node));
  }
  return json{{"community", tree.community}, {"nodes", std::move(nodes)}};
}

LabeledTree tree_from_json(const json& obj) {
  if (!obj.is_object() || !obj.contains("nodes") || !obj["nodes"].is_array()) {
    throw std::runtime_error("tree JSON: expected an object with a 'nodes' array");
  }
  const std::string community = obj.value("community", std::string{});
  std::vector<CommentNode> nodes;
  std::vector<HateLabel> labels;
  std::size_t labeled = 0;
  for (const json& jn : obj["nodes"]) {
    CommentNode n;
    n.id = jn.at("id").get<std::string>();
    if (jn.contains("parent") && !jn["parent"].is_null()) n.parent_id = jn["parent"].get<std::string>();
    n.text = jn.value("text", std::string{});
    n.score = jn.at("score").get<std::int64_t>();
    if (jn.contains("hate_raw") && !jn["hate_raw"].is_null()) n.hate_raw = jn["hate_raw"].get<double>();
    n.community = community;
    HateLabel label;
    if (jn.contains("L") && jn.contains("class")) {
      label.value = jn["L"].get<double>();
      label.cls = jn["class"].get<int>();
      ++labeled;
    }
    labels.push_back(label);
    nodes.push_back(std::move(n));
  }
  if (labeled != 0 && labeled != nodes.size()) {
    throw std::runtime_error("tree JSON: only some nodes carry labels");
  }
  LabeledTree out{make_tree(community, std::move(nodes)), {}};
  if (labeled != 0) out.labels = std::move(labels);
  return out;
}

void write_trees_jsonl(std::ostream& out, const std::vector<LabeledTree>& trees) {
  for (const LabeledTree& t : trees) out << tree_to_json(t.tree, t.labels).dump() << '\n';
}

void write_trees_jsonl(std::ostream& out, const std::vector<DiscussionTree>& trees) {
  for (const DiscussionTree& t : trees) out << tree_to_json(t).dump() << '\n';
}

std::vector<LabeledTree> read_trees_jsonl(std::istream& in) {
  std::vector<LabeledTree> trees;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      trees.push_back(tree_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("tree file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trees;
}

std::vector<DiscussionTree> strip_labels(std::vector<LabeledTree> trees) {
  std::vector<DiscussionTree> out;
  out.reserve(trees.size());
  for (auto& t : trees) out.push_back(std::move(t.tree));
  return out;
}

}  // namespace threadcast

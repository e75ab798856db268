#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"
#include "threadcast/discussion_graph.h"
#include "threadcast/hate_label.h"

namespace threadcast {

// Canonical tree JSON:
//   {"community": str,
//    "nodes": [{"id": str, "parent": str|null, "text": str, "score": int,
//               "hate_raw"?: num, "L"?: num, "class"?: int}, ...]}
// A corpus file holds one tree object per line.
nlohmann::json tree_to_json(const DiscussionTree& tree, std::span<const HateLabel> labels = {});

// Labels are returned only when every node carries both "L" and "class".
LabeledTree tree_from_json(const nlohmann::json& obj);

void write_trees_jsonl(std::ostream& out, const std::vector<LabeledTree>& trees);
void write_trees_jsonl(std::ostream& out, const std::vector<DiscussionTree>& trees);
std::vector<LabeledTree> read_trees_jsonl(std::istream& in);

std::vector<DiscussionTree> strip_labels(std::vector<LabeledTree> trees);

}  // namespace threadcast

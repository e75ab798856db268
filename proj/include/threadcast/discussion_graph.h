#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace threadcast {

struct CommentNode {
  std::string id;
  std::optional<std::string> parent_id;  // absent for the submission
  std::string text;
  std::int64_t score = 0;                // net votes as provided
  std::optional<double> hate_raw;        // classifier probability in [0, 1]
  std::string community;
  int depth = 0;
};

// A rooted reply tree. Node order is breadth-first from the root for trees
// produced by this library, but nothing downstream relies on it.
struct DiscussionTree {
  std::string community;
  std::vector<CommentNode> nodes;
  std::size_t root_index = 0;
  std::vector<std::vector<std::size_t>> children;

  const std::string& id() const { return nodes.at(root_index).id; }
  std::size_t size() const { return nodes.size(); }
};

// Builds adjacency, root and depths from the parent_id links of `nodes`.
// Throws std::invalid_argument if the links do not form a single tree.
DiscussionTree make_tree(std::string community, std::vector<CommentNode> nodes);

// Parent index per node, -1 for the root.
std::vector<int> parent_indices(const DiscussionTree& tree);

// Removes the "t1_" / "t3_" kind prefixes Reddit puts on fullnames.
std::string strip_kind_prefix(const std::string& id);

struct RawRecord {
  std::string id;
  std::optional<std::string> parent_id;
  std::optional<std::string> link_id;
  std::string text;
  std::int64_t score = 0;
  std::string community;
  std::size_t line = 0;

  bool is_submission() const { return !parent_id.has_value(); }
};

struct ParseDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct ParseResult {
  std::vector<RawRecord> records;
  std::vector<ParseDiagnostic> diagnostics;
  std::size_t lines_read = 0;  // non-blank lines
};

// Line-delimited JSON. Blank lines are ignored. Malformed lines are reported
// and skipped, or rethrown as std::runtime_error when `strict` is set.
ParseResult parse_records(std::istream& in, bool strict = false);

struct IngestReport {
  std::size_t records = 0;
  std::size_t trees = 0;
  std::size_t nodes = 0;
  std::size_t orphans_dropped = 0;
  std::size_t trees_rejected = 0;
  std::size_t records_rejected = 0;  // records inside rejected trees
  std::vector<std::string> messages;
};

struct BuildResult {
  std::vector<DiscussionTree> trees;
  IngestReport report;
};

// One tree per submission. Comments whose parent chain does not reach a
// submission are dropped together with their descendants. A tree that would
// contain a duplicated id is rejected whole.
BuildResult build_trees(const std::vector<RawRecord>& records);

enum class ViolationKind {
  kEmpty,
  kRootIndex,
  kRootHasParent,
  kMultipleRoots,
  kDanglingParent,
  kDuplicateId,
  kCycle,
  kDisconnected,
  kChildrenMismatch,
  kDepthMismatch,
};

struct Violation {
  ViolationKind kind;
  std::size_t node = 0;
  std::string message;
};

const char* violation_name(ViolationKind kind);

// Every invariant of DiscussionTree that fails, in node order. Empty when the
// tree is well formed.
std::vector<Violation> validate(const DiscussionTree& tree);

}  // namespace threadcast

#include <gtest/gtest.h>

#include <random>

#include "oracles.h"
#include "threadcast/trim.h"

namespace threadcast {
namespace {

LabeledTree labeled(DiscussionTree t) {
  for (auto& n : t.nodes) {
    if (!n.hate_raw) n.hate_raw = 0.5;
  }
  auto labels = compute_labels(t, LabelWeights{});
  return {std::move(t), std::move(labels)};
}

DiscussionTree chain(int n) {
  std::vector<CommentNode> nodes(n);
  for (int i = 0; i < n; ++i) {
    nodes[i].id = "v" + std::to_string(i);
    if (i > 0) nodes[i].parent_id = "v" + std::to_string(i - 1);
    nodes[i].score = 1;
  }
  return make_tree("c", nodes);
}

DiscussionTree star(int leaves) {
  std::vector<CommentNode> nodes(leaves + 1);
  nodes[0].id = "r";
  for (int i = 1; i <= leaves; ++i) {
    nodes[i].id = "l" + std::to_string(i);
    nodes[i].parent_id = "r";
  }
  return make_tree("c", nodes);
}

TEST(CountDescendants, Examples) {
  EXPECT_EQ(count_descendants(chain(3), 0), 2u);
  EXPECT_EQ(count_descendants(chain(3), 2), 0u);
  std::vector<CommentNode> n(5);
  n[0].id = "r";
  n[1].id = "a", n[1].parent_id = "r";
  n[2].id = "b", n[2].parent_id = "r";
  n[3].id = "c", n[3].parent_id = "a";
  n[4].id = "d", n[4].parent_id = "b";
  EXPECT_EQ(count_descendants(make_tree("c", n), 0), 4u);
}

TEST(TrimTree, DeepChainKeepsFiveNodes) {
  const LabeledTree full = labeled(chain(7));
  auto trimmed = trim_tree(full, TrimConfig{});
  ASSERT_TRUE(trimmed);
  ASSERT_EQ(trimmed->tree.size(), 5u);
  // The depth-4 node keeps the label computed with its two hidden replies.
  EXPECT_EQ(trimmed->labels[4].value, full.labels[4].value);
  EXPECT_EQ(count_descendants(full.tree, 4), 2u);
}

TEST(TrimTree, StarAndSingletonAreDropped) {
  EXPECT_FALSE(trim_tree(labeled(star(3)), TrimConfig{}));
  EXPECT_FALSE(trim_tree(labeled(chain(1)), TrimConfig{}));
}

TEST(TrimTree, MatchesBruteForceFilter) {
  std::mt19937_64 gen(21);
  for (int i = 0; i < 300; ++i) {
    const LabeledTree full = labeled(oracle::random_tree(gen(), 1 + gen() % 120));
    const auto expect = oracle::trim_ids(full.tree, 4, 2);
    const auto got = trim_tree(full, TrimConfig{});
    if (expect.size() < 2) {
      EXPECT_FALSE(got);
      continue;
    }
    ASSERT_TRUE(got);
    std::set<std::string> ids;
    for (std::size_t v = 0; v < got->tree.size(); ++v) {
      ids.insert(got->tree.nodes[v].id);
      std::size_t src = 0;
      while (full.tree.nodes[src].id != got->tree.nodes[v].id) ++src;
      EXPECT_EQ(got->labels[v].value, full.labels[src].value);
      EXPECT_EQ(got->labels[v].cls, full.labels[src].cls);
      if (v != got->tree.root_index) {
        EXPECT_LE(got->tree.nodes[v].depth, 4);
        EXPECT_GE(count_descendants(full.tree, src), 2u);
      }
    }
    EXPECT_EQ(ids, expect);
    EXPECT_TRUE(validate(got->tree).empty());
  }
}

TEST(TrimDataset, ReportCountsDrops) {
  const TrimResult r = trim_dataset({labeled(chain(7)), labeled(star(3))}, TrimConfig{});
  EXPECT_EQ(r.trees.size(), 1u);
  EXPECT_EQ(r.report.dropped(), 1u);
  ASSERT_EQ(r.report.rows.size(), 1u);
  EXPECT_EQ(r.report.rows[0].nodes, 11u);
  EXPECT_EQ(r.report.rows[0].nodes_after, 5u);
}

}  // namespace
}  // namespace threadcast

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.h"
#include "threadcast/struct_encode.h"

namespace threadcast {
namespace {

LabeledTree labeled(DiscussionTree t) {
  for (auto& n : t.nodes) {
    if (!n.hate_raw) n.hate_raw = 0.25;
  }
  auto labels = compute_labels(t, LabelWeights{});
  return {std::move(t), std::move(labels)};
}

DiscussionTree from_parents(const std::vector<int>& parents) {
  std::vector<CommentNode> nodes(parents.size());
  for (std::size_t i = 0; i < parents.size(); ++i) {
    nodes[i].id = "n" + std::to_string(i);
    if (parents[i] >= 0) nodes[i].parent_id = "n" + std::to_string(parents[i]);
    nodes[i].text = "w" + std::to_string(i);
    nodes[i].score = static_cast<std::int64_t>(i);
  }
  return make_tree("c", nodes);
}

TEST(ComputeSpd, SmallCases) {
  // root -> (a, b), a -> c
  DiscussionTree t = from_parents({-1, 0, 0, 1});
  const auto d = compute_spd(t);
  auto at = [&](int i, int j) { return d[i * 4 + j]; };
  EXPECT_EQ(at(2, 2), 0);
  EXPECT_EQ(at(0, 1), 1);
  EXPECT_EQ(at(1, 2), 2);
  EXPECT_EQ(at(3, 2), 3);
}

TEST(ComputeSpd, MatchesFloydWarshall) {
  std::mt19937_64 gen(8);
  for (int i = 0; i < 200; ++i) {
    DiscussionTree t = oracle::random_tree(gen(), 1 + gen() % 50);
    const auto d = compute_spd(t);
    ASSERT_EQ(d, oracle::floyd_warshall(t));
    const std::size_t n = t.size();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        ASSERT_EQ(d[a * n + b], d[b * n + a]);
        for (std::size_t c = 0; c < n; ++c) ASSERT_LE(d[a * n + c], d[a * n + b] + d[b * n + c]);
      }
    }
  }
}

TEST(ComputeDegrees, Examples) {
  Degrees star = compute_degrees(from_parents({-1, 0, 0}));
  EXPECT_EQ(star.in, (std::vector<int>{0, 1, 1}));
  EXPECT_EQ(star.out, (std::vector<int>{2, 0, 0}));
  Degrees chain = compute_degrees(from_parents({-1, 0, 1}));
  EXPECT_EQ(chain.in[1], 1);
  EXPECT_EQ(chain.out[1], 1);
}

TEST(EncodeGraph, ClampsDegreeAndDistance) {
  std::vector<int> parents = {-1};
  for (int i = 0; i < 100; ++i) parents.push_back(0);
  HashedFeatureProvider provider(8, {});
  EncodedGraph g = encode_graph(labeled(from_parents(parents)), provider, EncodeConfig{});
  EXPECT_EQ(g.out_degree[0], 64);
  std::vector<int> chain = {-1};
  for (int i = 0; i < 30; ++i) chain.push_back(i);
  EncodedGraph c = encode_graph(labeled(from_parents(chain)), provider, EncodeConfig{});
  EXPECT_EQ(c.spd_at(0, 30), 16);
  EXPECT_EQ(c.feature_dim, 9u);
  EXPECT_EQ(c.features[3 * 9 + 8], 3.0);
}

TEST(EncodeGraph, RelabelingPermutesConsistently) {
  HashedFeatureProvider provider(8, {"w3"});
  DiscussionTree t = oracle::random_tree(5, 15);
  EncodedGraph a = encode_graph(labeled(t), provider, EncodeConfig{});
  DiscussionTree shuffled = t;
  std::mt19937_64 gen(2);
  std::shuffle(shuffled.nodes.begin(), shuffled.nodes.end(), gen);
  shuffled = make_tree("c", shuffled.nodes);
  EncodedGraph b = encode_graph(labeled(shuffled), provider, EncodeConfig{});
  const std::size_t n = a.num_nodes;
  std::vector<std::size_t> map(n);
  for (std::size_t i = 0; i < n; ++i) {
    map[i] = std::find(b.node_ids.begin(), b.node_ids.end(), a.node_ids[i]) - b.node_ids.begin();
  }
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(a.in_degree[i], b.in_degree[map[i]]);
    EXPECT_EQ(a.out_degree[i], b.out_degree[map[i]]);
    EXPECT_EQ(a.labels[i], b.labels[map[i]]);
    for (std::size_t f = 0; f < a.feature_dim; ++f) {
      EXPECT_EQ(a.features[i * a.feature_dim + f], b.features[map[i] * b.feature_dim + f]);
    }
    for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(a.spd_at(i, j), b.spd_at(map[i], map[j]));
  }
}

EncodedGraph blank_graph(const std::string& id, std::size_t n) {
  EncodedGraph g;
  g.graph_id = id;
  g.num_nodes = n;
  g.feature_dim = 2;
  for (std::size_t i = 0; i < n; ++i) g.node_ids.push_back(id + "_" + std::to_string(i));
  g.features.assign(n * 2, 1.0);
  g.in_degree.assign(n, 1);
  g.out_degree.assign(n, 0);
  g.spd.assign(n * n, 1);
  g.labels.assign(n, 1);
  g.label_values.assign(n, 1.0);
  g.split.assign(n, Split::kTrain);
  return g;
}

TEST(AssignSplits, FractionsAndDeterminism) {
  std::vector<EncodedGraph> graphs;
  for (int i = 0; i < 100; ++i) graphs.push_back(blank_graph("g" + std::to_string(i), 100));
  assign_splits(graphs, SplitFractions{1.0, 0.0, 0.0}, 3);
  for (const auto& g : graphs) {
    for (Split s : g.split) ASSERT_EQ(s, Split::kTrain);
  }
  assign_splits(graphs, SplitFractions{}, 3);
  std::size_t val = 0, total = 0;
  for (const auto& g : graphs) {
    for (Split s : g.split) {
      val += s == Split::kVal;
      ++total;
    }
  }
  EXPECT_EQ(total, 10000u);
  EXPECT_NEAR(static_cast<double>(val) / total, 0.10, 0.01);
  auto again = graphs;
  assign_splits(again, SplitFractions{}, 3);
  for (std::size_t i = 0; i < graphs.size(); ++i) EXPECT_EQ(graphs[i].split, again[i].split);
  EXPECT_EQ(split_for("g1", "n1", SplitFractions{}, 3), split_for("g1", "n1", SplitFractions{}, 3));
  EXPECT_THROW(assign_splits(graphs, SplitFractions{0.5, 0.1, 0.1}, 3), std::invalid_argument);
}

TEST(MakeBatches, SizesAndPadding) {
  std::vector<EncodedGraph> graphs;
  for (int i = 0; i < 33; ++i) graphs.push_back(blank_graph("g" + std::to_string(i), 3));
  const auto batches = make_batches(graphs, 16, 1);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].graphs.size(), 16u);
  EXPECT_EQ(batches[2].graphs.size(), 1u);
  EXPECT_EQ(make_batches(graphs, 16, 1)[0].graphs[0].graph_index, batches[0].graphs[0].graph_index);

  const auto mixed = make_batches({blank_graph("a", 3), blank_graph("b", 5)}, 16, 0, false);
  ASSERT_EQ(mixed.size(), 1u);
  EXPECT_EQ(mixed[0].max_nodes, 5u);
  std::size_t padded = 0;
  for (auto m : mixed[0].padding_mask) padded += m;
  EXPECT_EQ(padded, 2u);
  const ModelInput& small = mixed[0].graphs[0];
  EXPECT_EQ(small.num_nodes, 5u);
  EXPECT_EQ(small.real_nodes, 3u);
  EXPECT_EQ(small.features[4 * 2], 0.0);
  EXPECT_EQ(small.spd[4 * 5 + 0], 0);
}

TEST(Dataset, BinaryRoundTrip) {
  HashedFeatureProvider provider(6, {"w1"});
  EncodedDataset ds;
  ds.feature_dim = 7;
  ds.seed = 77;
  for (std::uint64_t s = 0; s < 5; ++s) {
    ds.graphs.push_back(encode_graph(labeled(oracle::random_tree(s, 9)), provider, EncodeConfig{}));
  }
  assign_splits(ds.graphs, SplitFractions{}, 4);
  std::stringstream buf;
  save_dataset(buf, ds);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 8), "TCDATA01");
  EncodedDataset back = load_dataset(buf);
  ASSERT_EQ(back.graphs.size(), 5u);
  EXPECT_EQ(back.seed, 77u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(back.graphs[i].features, ds.graphs[i].features);
    EXPECT_EQ(back.graphs[i].spd, ds.graphs[i].spd);
    EXPECT_EQ(back.graphs[i].split, ds.graphs[i].split);
    EXPECT_EQ(back.graphs[i].node_ids, ds.graphs[i].node_ids);
  }
  std::stringstream again;
  save_dataset(again, back);
  EXPECT_EQ(again.str(), bytes);
  std::istringstream bad("TCDATA99");
  EXPECT_THROW(load_dataset(bad), std::runtime_error);
}

}  // namespace
}  // namespace threadcast

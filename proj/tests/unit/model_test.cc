#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fixtures.h"
#include "gradcheck.h"
#include "oracles.h"
#include "threadcast/gat.h"
#include "threadcast/graphormer.h"
#include "threadcast/model.h"

namespace threadcast {
namespace {

EncodedGraph chain_graph(std::size_t n, std::size_t d_text = 6) {
  std::vector<CommentNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].id = "n" + std::to_string(i);
    if (i > 0) nodes[i].parent_id = "n" + std::to_string(i - 1);
    nodes[i].text = "token" + std::to_string(i * 7) + " other" + std::to_string(i);
    nodes[i].score = static_cast<std::int64_t>(i) - 2;
    nodes[i].hate_raw = 0.3;
  }
  DiscussionTree t = make_tree("c", nodes);
  auto labels = compute_labels(t, LabelWeights{});
  HashedFeatureProvider provider(d_text, {});
  return encode_graph(LabeledTree{std::move(t), std::move(labels)}, provider, EncodeConfig{});
}

ModelConfig config_for(ModelKind kind, std::size_t input_dim) {
  ModelConfig c = ModelConfig::from_preset("desk", kind);
  c.input_dim = input_dim;
  return c;
}

template <typename T>
std::unique_ptr<NodeRegressor<T>> built(ModelKind kind, std::size_t input_dim, std::uint64_t seed = 3) {
  auto m = make_model<T>(config_for(kind, input_dim));
  m->initialize(seed);
  // Non-zero spatial bias so distance actually matters.
  if (auto* b = m->params().find("spatial.bias")) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> d(0.0, 0.5);
    auto& table = m->params().at("spatial.bias");
    for (auto& v : table.data) v = static_cast<T>(d(gen));
    (void)b;
  }
  return m;
}

class BothModels : public ::testing::TestWithParam<ModelKind> {};

TEST_P(BothModels, OutputShape) {
  for (std::size_t n : {1u, 5u, 17u}) {
    const EncodedGraph g = oracle::fixture_graph(n, n, 6);
    auto m = built<double>(GetParam(), g.feature_dim);
    Tape<double> tape;
    auto out = m->forward(tape, pad_graph(g, n + 2));
    EXPECT_EQ(out.shape(), (Shape{n + 2, 1}));
  }
}

TEST_P(BothModels, PermutationEquivariant32) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 5; ++trial) {
    const EncodedGraph g = oracle::fixture_graph(gen(), 20, 6);
    auto m = built<float>(GetParam(), g.feature_dim);
    const ModelInput in = pad_graph(g, 24);
    std::vector<std::size_t> perm(g.num_nodes);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    for (std::size_t i = g.num_nodes; i < 24; ++i) perm.push_back(i);
    const auto base = m->predict(in);
    const auto moved = m->predict(oracle::permuted(in, perm));
    for (std::size_t k = 0; k < g.num_nodes; ++k) ASSERT_NEAR(moved[k], base[perm[k]], 1e-5);
  }
}

TEST_P(BothModels, PaddingNeutral) {
  const EncodedGraph g = oracle::fixture_graph(4, 12, 6);
  auto m32 = built<float>(GetParam(), g.feature_dim);
  auto m64 = built<double>(GetParam(), g.feature_dim);
  const auto a32 = m32->predict(pad_graph(g, 12)), b32 = m32->predict(pad_graph(g, 31));
  const auto a64 = m64->predict(pad_graph(g, 12)), b64 = m64->predict(pad_graph(g, 31));
  ASSERT_EQ(a32.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_NEAR(a32[i], b32[i], 1e-6);
    EXPECT_NEAR(a64[i], b64[i], 1e-12);
  }
}

TEST_P(BothModels, AttentionRowsNormalisedOverRealColumns) {
  const EncodedGraph g = oracle::fixture_graph(6, 9, 6);
  auto m = built<double>(GetParam(), g.feature_dim);
  const ModelInput in = pad_graph(g, 12);
  Tape<double> tape;
  std::vector<Var<double>> att;
  m->forward_traced(tape, in, {}, att);
  ASSERT_FALSE(att.empty());
  for (const auto& a : att) {
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      double row = 0;
      for (std::size_t j = 0; j < 12; ++j) {
        const double w = a.value()[i * 12 + j];
        if (j >= g.num_nodes) { ASSERT_EQ(w, 0.0); }
        if (GetParam() == ModelKind::kGat && in.spd[i * 12 + j] > 1) { ASSERT_EQ(w, 0.0); }
        row += w;
      }
      ASSERT_NEAR(row, 1.0, 1e-6);
    }
  }
}

TEST_P(BothModels, GradientsMatchFiniteDifferences) {
  ModelConfig c = config_for(GetParam(), 0);
  const EncodedGraph g = oracle::fixture_graph(21, 5, 3);
  c.input_dim = g.feature_dim;
  c.num_layers = 2;
  c.hidden_dim = 8;
  c.num_heads = 2;
  c.ffn_dim = 16;
  c.max_spd = 4;
  c.max_degree = 4;
  auto m = make_model<double>(c);
  m->initialize(5);
  const auto r = oracle::check_model_gradients(*m, pad_graph(g, 6), 9);
  EXPECT_LE(r.max_rel_error, 1e-5);
  EXPECT_EQ(r.coords, m->params().numel());
}

TEST_P(BothModels, SameSeedSameOutputs) {
  const EncodedGraph g = oracle::fixture_graph(8, 15, 6);
  auto a = built<float>(GetParam(), g.feature_dim, 4);
  auto b = built<float>(GetParam(), g.feature_dim, 4);
  EXPECT_EQ(a->predict(pad_graph(g, 15)), b->predict(pad_graph(g, 15)));
}

INSTANTIATE_TEST_SUITE_P(Models, BothModels, ::testing::Values(ModelKind::kGraphormer, ModelKind::kGat),
                         [](const auto& info) { return std::string(model_kind_name(info.param)); });

// Perturbs node `src` and reports |delta| at every node.
template <typename T>
std::vector<double> sensitivity(const NodeRegressor<T>& m, const EncodedGraph& g, std::size_t src) {
  ModelInput in = pad_graph(g, g.num_nodes);
  const auto before = m.predict(in);
  for (std::size_t f = 0; f < in.feature_dim; ++f) in.features[src * in.feature_dim + f] += 0.5 + 0.1 * f;
  const auto after = m.predict(in);
  std::vector<double> d(before.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(after[i] - before[i]);
  return d;
}

TEST(Gat, ReceptiveFieldIsTwoHops) {
  const EncodedGraph g = chain_graph(7);
  auto m = built<double>(ModelKind::kGat, g.feature_dim);
  const auto d = sensitivity(*m, g, 0);
  for (std::size_t i = 0; i < 7; ++i) {
    if (i <= 2) {
      EXPECT_GT(d[i], 0.0) << i;
    } else {
      EXPECT_EQ(d[i], 0.0) << i;
    }
  }
  auto m32 = built<float>(ModelKind::kGat, g.feature_dim);
  const auto d32 = sensitivity(*m32, g, 6);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(d32[i], 0.0);
}

TEST(Gat, ReceptiveFieldOnRandomTrees) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const EncodedGraph g = oracle::fixture_graph(100 + s, 25, 6);
    auto m = built<double>(ModelKind::kGat, g.feature_dim, s);
    const std::size_t src = s % g.num_nodes;
    const auto d = sensitivity(*m, g, src);
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      if (g.spd_at(i, src) >= 3) { ASSERT_EQ(d[i], 0.0); }
    }
  }
}

TEST(Gat, IsolatedNodeDependsOnItselfOnly) {
  const EncodedGraph g = chain_graph(1);
  auto m = built<double>(ModelKind::kGat, g.feature_dim);
  const auto a = m->predict(pad_graph(g, 1));
  const auto b = m->predict(pad_graph(g, 4));
  EXPECT_EQ(a.size(), 1u);
  EXPECT_NEAR(a[0], b[0], 1e-12);
}

TEST(Graphormer, FullReceptiveField) {
  const EncodedGraph chain = chain_graph(7);
  auto m = built<double>(ModelKind::kGraphormer, chain.feature_dim);
  const auto d = sensitivity(*m, chain, 0);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_GT(d[i], 0.0) << i;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const EncodedGraph g = oracle::fixture_graph(200 + s, 25, 6);
    auto r = built<double>(ModelKind::kGraphormer, g.feature_dim, s);
    const auto ds = sensitivity(*r, g, 0);
    for (std::size_t i = 0; i < g.num_nodes; ++i) EXPECT_GT(ds[i], 0.0);
  }
}

TEST(Graphormer, ZeroLayersIgnoreDistances) {
  const EncodedGraph g = oracle::fixture_graph(3, 10, 6);
  ModelConfig c = config_for(ModelKind::kGraphormer, g.feature_dim);
  c.num_layers = 0;
  auto m = make_model<double>(c);
  m->initialize(1);
  ModelInput in = pad_graph(g, 10);
  const auto a = m->predict(in);
  for (auto& s : in.spd) s = (s * 3 + 1) % 5;
  EXPECT_EQ(m->predict(in), a);
}

TEST(Graphormer, HugeNegativeBiasGivesSelfAttention) {
  const EncodedGraph g = oracle::fixture_graph(12, 8, 6);
  auto m = built<double>(ModelKind::kGraphormer, g.feature_dim);
  auto& bias = m->params().at("spatial.bias");
  for (std::size_t r = 1; r < bias.rows(); ++r) {
    for (std::size_t h = 0; h < bias.cols(); ++h) bias.at(r, h) = -1e9;
  }
  const ModelInput in = pad_graph(g, 8);
  Tape<double> tape;
  std::vector<Var<double>> att;
  const auto out = m->forward_traced(tape, in, {}, att);
  for (const auto& a : att) {
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(a.value()[i * 8 + i], 1.0, 1e-12);
  }
  // Reference: each node alone in a one-node graph, where attention is
  // trivially self-only.
  for (std::size_t i = 0; i < 8; ++i) {
    ModelInput single = pad_graph(g, 8);
    single.num_nodes = single.real_nodes = 1;
    single.features.assign(in.features.begin() + i * in.feature_dim,
                           in.features.begin() + (i + 1) * in.feature_dim);
    single.in_degree = {in.in_degree[i]};
    single.out_degree = {in.out_degree[i]};
    single.spd = {0};
    single.labels = {in.labels[i]};
    single.split = {in.split[i]};
    EXPECT_NEAR(out.value()[i], m->predict(single)[0], 1e-9);
  }
}

TEST(Graphormer, EqualNodesEmbedEqually) {
  ModelInput in;
  in.num_nodes = in.real_nodes = 3;
  in.feature_dim = 4;
  in.features = {1, 2, 3, 4, 1, 2, 3, 4, 0, 0, 0, 1};
  in.in_degree = {1, 1, 1};
  in.out_degree = {0, 0, 2};
  in.spd = {0, 2, 1, 2, 0, 1, 1, 1, 0};
  in.labels = {0, 0, 0};
  in.split.assign(3, Split::kTrain);
  Graphormer<double> m(config_for(ModelKind::kGraphormer, 4));
  m.initialize(2);
  Tape<double> tape;
  const auto h = m.embed_inputs(tape, in);
  const std::size_t d = h.cols();
  for (std::size_t k = 0; k < d; ++k) EXPECT_EQ(h.value()[k], h.value()[d + k]);

  // Perturbing z_out row 2 moves only the node with out-degree 2.
  const std::vector<double> before(h.value().begin(), h.value().end());
  m.params().at("centrality.out").at(2, 5) += 1.0;
  Tape<double> tape2;
  const auto h2 = m.embed_inputs(tape2, in);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t k = 0; k < d; ++k) {
      const bool moved = h2.value()[r * d + k] != before[r * d + k];
      EXPECT_EQ(moved, r == 2 && k == 5);
    }
  }

  Graphormer<double> zero(config_for(ModelKind::kGraphormer, 4));
  ModelInput blank = in;
  std::fill(blank.features.begin(), blank.features.end(), 0.0);
  Tape<double> tape3;
  for (double v : zero.embed_inputs(tape3, blank).value()) EXPECT_EQ(v, 0.0);

  in.feature_dim = 5;
  Tape<double> tape4;
  EXPECT_THROW(m.embed_inputs(tape4, in), std::invalid_argument);
}

TEST(Graphormer, TwoIdenticalNodesSplitAttentionEvenly) {
  ModelInput in;
  in.num_nodes = in.real_nodes = 2;
  in.feature_dim = 3;
  in.features = {0.5, -1, 2, 0.5, -1, 2};
  in.in_degree = {1, 1};
  in.out_degree = {1, 1};
  in.spd = {0, 0, 0, 0};
  in.labels = {0, 0};
  in.split.assign(2, Split::kTrain);
  Graphormer<double> m(config_for(ModelKind::kGraphormer, 3));
  m.initialize(1);
  Tape<double> tape;
  std::vector<Var<double>> att;
  m.forward_traced(tape, in, {}, att);
  for (const auto& a : att) {
    for (double w : a.value()) EXPECT_NEAR(w, 0.5, 1e-12);
  }
}

TEST(Graphormer, SpatialBiasSeesEdgeChanges) {
  // Same nodes and degrees; one edge rewired changes distances only.
  const EncodedGraph g = chain_graph(5);
  auto m = built<double>(ModelKind::kGraphormer, g.feature_dim);
  ModelInput a = pad_graph(g, 5);
  ModelInput b = a;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) b.spd[i * 5 + j] = std::min(a.spd[i * 5 + j], 2);
  }
  Tape<double> ta, tb;
  std::vector<Var<double>> att_a, att_b;
  m->forward_traced(ta, a, {}, att_a);
  m->forward_traced(tb, b, {}, att_b);
  EXPECT_NE(att_a[0].value()[4], att_b[0].value()[4]);
}

TEST(ModelConfig, PresetsAndJson) {
  const auto desk = ModelConfig::from_preset("desk", ModelKind::kGraphormer);
  EXPECT_EQ(desk.num_layers, 4u);
  EXPECT_EQ(desk.hidden_dim, 64u);
  EXPECT_EQ(desk.num_heads, 4u);
  const auto base = ModelConfig::from_preset("base", ModelKind::kGraphormer);
  EXPECT_EQ(base.num_layers, 10u);
  EXPECT_EQ(base.hidden_dim, 769u);
  EXPECT_EQ(base.hidden_dim % base.num_heads, 0u);
  EXPECT_EQ(ModelConfig::from_preset("base", ModelKind::kGat).num_layers, 2u);
  EXPECT_EQ(ModelConfig::from_preset("desk", ModelKind::kGat).num_layers, 2u);
  EXPECT_THROW(ModelConfig::from_preset("huge", ModelKind::kGat), std::invalid_argument);

  ModelConfig c = desk;
  c.input_dim = 65;
  c.dropout = 0.25;
  const auto back = ModelConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  c.num_heads = 5;
  EXPECT_THROW(c.check(), std::invalid_argument);
}

TEST(Model, PredictedClassRounding) {
  EXPECT_EQ(predicted_class(-3.0), 0);
  EXPECT_EQ(predicted_class(0.49), 0);
  EXPECT_EQ(predicted_class(1.51), 2);
  EXPECT_EQ(predicted_class(3.2), 3);
  EXPECT_EQ(predicted_class(9.0), 4);
  EXPECT_EQ(predicted_class(std::nan("")), 0);
}

TEST(Checkpoint, RoundTrip) {
  auto m = built<float>(ModelKind::kGraphormer, 7);
  std::stringstream buf;
  save_checkpoint(buf, m->params(), "{\"k\":1}");
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 8), "TCCKPT01");
  Checkpoint ck = load_checkpoint(buf);
  EXPECT_EQ(ck.meta, "{\"k\":1}");
  EXPECT_EQ(ck.scalar_bytes, 4);
  auto fresh = make_model<float>(m->config());
  fresh->params().assign_from(ck.params);
  for (std::size_t i = 0; i < m->params().size(); ++i) EXPECT_EQ(fresh->params()[i].data, m->params()[i].data);
  std::stringstream again;
  save_checkpoint(again, fresh->params(), "{\"k\":1}");
  EXPECT_EQ(again.str(), bytes);

  auto gat = make_model<float>(config_for(ModelKind::kGat, 7));
  EXPECT_THROW(gat->params().assign_from(ck.params), std::invalid_argument);
  std::istringstream junk("TCCKPT0");
  EXPECT_THROW(load_checkpoint(junk), std::runtime_error);
}

}  // namespace
}  // namespace threadcast

#include "threadcast/struct_encode.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "threadcast/binary_io.h"
#include "threadcast/hash.h"
#include "threadcast/kernels.h"
#include "threadcast/rng.h"

namespace threadcast {

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + name + "' (train|val|test)");
}

std::vector<int> compute_spd(const DiscussionTree& tree) {
  std::vector<std::vector<int>> adjacency(tree.size());
  for (std::size_t u = 0; u < tree.size(); ++u) {
    for (std::size_t c : tree.children[u]) {
      adjacency[u].push_back(static_cast<int>(c));
      adjacency[c].push_back(static_cast<int>(u));
    }
  }
  return kernels::all_pairs_bfs(adjacency);
}

Degrees compute_degrees(const DiscussionTree& tree) {
  Degrees d{std::vector<int>(tree.size(), 0), std::vector<int>(tree.size(), 0)};
  for (std::size_t u = 0; u < tree.size(); ++u) {
    d.out[u] = static_cast<int>(tree.children[u].size());
    for (std::size_t c : tree.children[u]) d.in[c] += 1;
  }
  return d;
}

EncodedGraph encode_graph(const LabeledTree& lt, const FeatureProvider& provider, const EncodeConfig& cfg) {
  const DiscussionTree& tree = lt.tree;
  if (cfg.max_spd < 1 || cfg.max_degree < 1) throw std::invalid_argument("encode: clamps must be >= 1");
  if (lt.labels.size() != tree.size()) {
    throw std::invalid_argument("encode: tree '" + tree.id() + "' is not labeled");
  }

  EncodedGraph g;
  g.graph_id = tree.id();
  g.community = tree.community;
  g.num_nodes = tree.size();
  g.feature_dim = provider.d_text() + 1;
  g.features.reserve(g.num_nodes * g.feature_dim);
  for (const CommentNode& node : tree.nodes) {
    g.node_ids.push_back(node.id);
    const std::vector<double> x = assemble_input(provider.features(node), node.score, cfg.score_transform);
    g.features.insert(g.features.end(), x.begin(), x.end());
  }

  const Degrees deg = compute_degrees(tree);
  g.in_degree.resize(g.num_nodes);
  g.out_degree.resize(g.num_nodes);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    g.in_degree[i] = std::min(deg.in[i], cfg.max_degree);
    g.out_degree[i] = std::min(deg.out[i], cfg.max_degree);
  }

  g.spd = compute_spd(tree);
  for (int& d : g.spd) d = std::min(d, cfg.max_spd);

  for (const HateLabel& l : lt.labels) {
    g.labels.push_back(l.cls);
    g.label_values.push_back(l.value);
  }
  g.split.assign(g.num_nodes, Split::kTrain);
  return g;
}

void SplitFractions::check() const {
  if (train < 0 || val < 0 || test < 0 || std::fabs(train + val + test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  }
}

Split split_for(const std::string& graph_id, const std::string& node_id, const SplitFractions& fractions,
                std::uint64_t seed) {
  std::string key = graph_id;
  key.push_back('\x1f');
  key += node_id;
  const double u = hash_to_unit(xxhash64(key, seed));
  if (u < fractions.train) return Split::kTrain;
  if (u < fractions.train + fractions.val) return Split::kVal;
  // Guard the (1, 0, 0) case against u rounding up to train.
  return fractions.test > 0.0 ? Split::kTest : (fractions.val > 0.0 ? Split::kVal : Split::kTrain);
}

void assign_splits(std::vector<EncodedGraph>& graphs, const SplitFractions& fractions, std::uint64_t seed) {
  fractions.check();
  for (EncodedGraph& g : graphs) {
    for (std::size_t i = 0; i < g.num_nodes; ++i) g.split[i] = split_for(g.graph_id, g.node_ids[i], fractions, seed);
  }
}

namespace {

constexpr char kDatasetMagic[8] = {'T', 'C', 'D', 'A', 'T', 'A', '0', '1'};
constexpr std::uint32_t kDatasetVersion = 1;

}  // namespace

void save_dataset(std::ostream& out, const EncodedDataset& data) {
  BinaryWriter w(out);
  w.bytes(kDatasetMagic, 8);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(data.graphs.size()));
  w.u32(static_cast<std::uint32_t>(data.feature_dim));
  w.u32(static_cast<std::uint32_t>(data.max_spd));
  w.u32(static_cast<std::uint32_t>(data.max_degree));
  w.u64(data.seed);
  for (const EncodedGraph& g : data.graphs) {
    if (g.feature_dim != data.feature_dim) throw std::invalid_argument("save_dataset: mixed feature widths");
    w.str(g.graph_id);
    w.str(g.community);
    w.u32(static_cast<std::uint32_t>(g.num_nodes));
    for (const std::string& id : g.node_ids) w.str(id);
    for (double v : g.features) w.f64(v);
    for (int v : g.in_degree) w.i32(v);
    for (int v : g.out_degree) w.i32(v);
    for (int v : g.spd) w.i32(v);
    for (int v : g.labels) w.i32(v);
    for (double v : g.label_values) w.f64(v);
    for (Split s : g.split) w.u8(static_cast<std::uint8_t>(s));
  }
  if (!out) throw std::runtime_error("save_dataset: write failed");
}

EncodedDataset load_dataset(std::istream& in) {
  BinaryReader r(in);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kDatasetMagic, 8) != 0) throw std::runtime_error("load_dataset: bad magic");
  if (r.u32() != kDatasetVersion) throw std::runtime_error("load_dataset: unsupported version");
  EncodedDataset data;
  const std::uint32_t count = r.u32();
  data.feature_dim = r.u32();
  data.max_spd = static_cast<int>(r.u32());
  data.max_degree = static_cast<int>(r.u32());
  data.seed = r.u64();
  data.graphs.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    EncodedGraph g;
    g.graph_id = r.str();
    g.community = r.str();
    g.num_nodes = r.u32();
    g.feature_dim = data.feature_dim;
    const std::size_t n = g.num_nodes;
    if (n == 0 || n > (1u << 16)) throw std::runtime_error("load_dataset: node count out of range");
    g.node_ids.resize(n);
    for (auto& id : g.node_ids) id = r.str();
    g.features.resize(n * g.feature_dim);
    for (double& v : g.features) v = r.f64();
    g.in_degree.resize(n);
    for (int& v : g.in_degree) v = r.i32();
    g.out_degree.resize(n);
    for (int& v : g.out_degree) v = r.i32();
    g.spd.resize(n * n);
    for (int& v : g.spd) v = r.i32();
    g.labels.resize(n);
    for (int& v : g.labels) v = r.i32();
    g.label_values.resize(n);
    for (double& v : g.label_values) v = r.f64();
    g.split.resize(n);
    for (Split& s : g.split) {
      const std::uint8_t v = r.u8();
      if (v > 2) throw std::runtime_error("load_dataset: bad split code");
      s = static_cast<Split>(v);
    }
    data.graphs.push_back(std::move(g));
  }
  return data;
}

ModelInput pad_graph(const EncodedGraph& g, std::size_t num_nodes, std::size_t graph_index) {
  if (num_nodes < g.num_nodes) throw std::invalid_argument("pad_graph: target smaller than graph");
  ModelInput m;
  m.num_nodes = num_nodes;
  m.real_nodes = g.num_nodes;
  m.feature_dim = g.feature_dim;
  m.graph_index = graph_index;
  m.features = g.features;
  m.features.resize(num_nodes * g.feature_dim, 0.0);
  m.in_degree = g.in_degree;
  m.in_degree.resize(num_nodes, 0);
  m.out_degree = g.out_degree;
  m.out_degree.resize(num_nodes, 0);
  m.spd.assign(num_nodes * num_nodes, 0);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    std::copy_n(g.spd.begin() + static_cast<long>(i * g.num_nodes), g.num_nodes,
                m.spd.begin() + static_cast<long>(i * num_nodes));
  }
  m.labels = g.labels;
  m.labels.resize(num_nodes, 0);
  m.split = g.split;
  m.split.resize(num_nodes, Split::kTrain);
  return m;
}

std::vector<Batch> make_batches(const std::vector<EncodedGraph>& graphs, std::size_t batch_size,
                                std::uint64_t shuffle_seed, bool shuffle) {
  if (batch_size == 0) throw std::invalid_argument("make_batches: batch size must be positive");
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) {
    Rng rng(shuffle_seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    Batch b;
    for (std::size_t k = start; k < end; ++k) b.max_nodes = std::max(b.max_nodes, graphs[order[k]].num_nodes);
    for (std::size_t k = start; k < end; ++k) {
      const EncodedGraph& g = graphs[order[k]];
      b.graphs.push_back(pad_graph(g, b.max_nodes, order[k]));
      for (std::size_t i = 0; i < b.max_nodes; ++i) b.padding_mask.push_back(i >= g.num_nodes ? 1 : 0);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace threadcast

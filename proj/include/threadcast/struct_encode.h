#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "threadcast/featurize.h"
#include "threadcast/hate_label.h"

namespace threadcast {

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };
const char* split_name(Split s);
Split parse_split(const std::string& name);

struct EncodeConfig {
  int max_spd = 16;
  int max_degree = 64;
  ScoreTransform score_transform = ScoreTransform::kNone;
};

// Model-ready arrays for one trimmed tree, rows in tree node order.
struct EncodedGraph {
  std::string graph_id;
  std::string community;
  std::size_t num_nodes = 0;
  std::size_t feature_dim = 0;
  std::vector<std::string> node_ids;
  std::vector<double> features;    // num_nodes x feature_dim
  std::vector<int> in_degree;      // clamped to max_degree
  std::vector<int> out_degree;     // clamped to max_degree
  std::vector<int> spd;            // num_nodes x num_nodes, clamped to max_spd
  std::vector<int> labels;         // ordinal class
  std::vector<double> label_values;
  std::vector<Split> split;

  int spd_at(std::size_t i, std::size_t j) const { return spd[i * num_nodes + j]; }
};

// Unclamped hop distances over the undirected tree, row-major N x N.
std::vector<int> compute_spd(const DiscussionTree& tree);

// Parent -> child orientation: out-degree is the reply count.
struct Degrees {
  std::vector<int> in;
  std::vector<int> out;
};
Degrees compute_degrees(const DiscussionTree& tree);

// Splits are left as kTrain; see assign_splits.
EncodedGraph encode_graph(const LabeledTree& tree, const FeatureProvider& provider, const EncodeConfig& cfg);

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;

  void check() const;
};

// Pure function of (graph id, node id, seed).
Split split_for(const std::string& graph_id, const std::string& node_id, const SplitFractions& fractions,
                std::uint64_t seed);
void assign_splits(std::vector<EncodedGraph>& graphs, const SplitFractions& fractions, std::uint64_t seed);

struct EncodedDataset {
  std::size_t feature_dim = 0;
  int max_spd = 16;
  int max_degree = 64;
  std::uint64_t seed = 0;
  std::vector<EncodedGraph> graphs;
};

// Binary container, all values little-endian:
//   "TCDATA01" u32 version u32 graphs u32 feature_dim u32 max_spd
//   u32 max_degree u64 seed, then per graph:
//   str graph_id, str community, u32 N, N x str node_id,
//   f64[N*F] features, i32[N] in_degree, i32[N] out_degree, i32[N*N] spd,
//   i32[N] labels, f64[N] label_values, u8[N] split
// where str is u32 length + bytes.
void save_dataset(std::ostream& out, const EncodedDataset& data);
EncodedDataset load_dataset(std::istream& in);

// One graph padded to `num_nodes` rows. Rows >= real_nodes are padding:
// zero features, zero degrees, zero distances.
struct ModelInput {
  std::size_t num_nodes = 0;
  std::size_t real_nodes = 0;
  std::size_t feature_dim = 0;
  std::vector<double> features;
  std::vector<int> in_degree;
  std::vector<int> out_degree;
  std::vector<int> spd;
  std::vector<int> labels;
  std::vector<Split> split;
  std::size_t graph_index = 0;  // position in the source list

  bool is_padding(std::size_t i) const { return i >= real_nodes; }
};

ModelInput pad_graph(const EncodedGraph& graph, std::size_t num_nodes, std::size_t graph_index = 0);

struct Batch {
  std::vector<ModelInput> graphs;
  std::size_t max_nodes = 0;
  std::vector<std::uint8_t> padding_mask;  // graphs.size() x max_nodes, 1 = padded
};

// Consecutive batches over a seeded shuffle (or the given order when
// shuffle is false); the last batch may be short.
std::vector<Batch> make_batches(const std::vector<EncodedGraph>& graphs, std::size_t batch_size,
                                std::uint64_t shuffle_seed, bool shuffle = true);

}  // namespace threadcast

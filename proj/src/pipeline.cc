#include "threadcast/pipeline.h"

#include <stdexcept>

#include "threadcast/parallel.h"

namespace threadcast {

using nlohmann::json;

json PipelineConfig::to_json() const {
  return json{{"d_text", d_text},
              {"weights", {{"context", weights.context}, {"reaction", weights.reaction}, {"influence", weights.influence}}},
              {"trim",
               {{"max_depth", trim.max_depth},
                {"min_descendants", trim.min_descendants},
                {"min_nodes_after", trim.min_nodes_after}}},
              {"max_spd", encode.max_spd},
              {"max_degree", encode.max_degree},
              {"score_transform", score_transform_name(encode.score_transform)},
              {"fractions", {fractions.train, fractions.val, fractions.test}},
              {"split_seed", split_seed}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  c.d_text = j.value("d_text", c.d_text);
  if (j.contains("weights")) {
    const json& w = j["weights"];
    if (w.is_string()) {
      c.weights = LabelWeights::parse(w.get<std::string>());
    } else {
      c.weights.context = w.value("context", c.weights.context);
      c.weights.reaction = w.value("reaction", c.weights.reaction);
      c.weights.influence = w.value("influence", c.weights.influence);
    }
  }
  if (j.contains("trim")) {
    const json& t = j["trim"];
    c.trim.max_depth = t.value("max_depth", c.trim.max_depth);
    c.trim.min_descendants = t.value("min_descendants", c.trim.min_descendants);
    c.trim.min_nodes_after = t.value("min_nodes_after", c.trim.min_nodes_after);
  }
  c.encode.max_spd = j.value("max_spd", c.encode.max_spd);
  c.encode.max_degree = j.value("max_degree", c.encode.max_degree);
  if (j.contains("score_transform")) {
    c.encode.score_transform = parse_score_transform(j["score_transform"].get<std::string>());
  }
  if (j.contains("fractions")) {
    c.fractions.train = j["fractions"].at(0).get<double>();
    c.fractions.val = j["fractions"].at(1).get<double>();
    c.fractions.test = j["fractions"].at(2).get<double>();
  }
  c.split_seed = j.value("split_seed", c.split_seed);
  c.weights.check();
  c.trim.check();
  c.fractions.check();
  if (c.d_text == 0) throw std::invalid_argument("pipeline: d_text must be positive");
  return c;
}

void attach_hate_raw(std::vector<DiscussionTree>& trees, const FeatureProvider& provider) {
  for (DiscussionTree& tree : trees) {
    for (CommentNode& node : tree.nodes) {
      if (!node.hate_raw) node.hate_raw = provider.features(node).hate_raw;
    }
  }
}

PreparedData prepare_dataset(std::vector<DiscussionTree> trees, const FeatureProvider& provider,
                             const PipelineConfig& cfg) {
  if (provider.d_text() != cfg.d_text) throw std::invalid_argument("pipeline: provider width differs from d_text");
  attach_hate_raw(trees, provider);
  PreparedData out;
  out.labeled = label_dataset(trees, cfg.weights);
  out.trimmed = trim_dataset(out.labeled.trees, cfg.trim);
  EncodedDataset& enc = out.encoded;
  enc.feature_dim = cfg.d_text + 1;
  enc.max_spd = cfg.encode.max_spd;
  enc.max_degree = cfg.encode.max_degree;
  enc.seed = cfg.split_seed;
  enc.graphs.resize(out.trimmed.trees.size());
  parallel_for(out.trimmed.trees.size(),
               [&](std::size_t i) { enc.graphs[i] = encode_graph(out.trimmed.trees[i], provider, cfg.encode); });
  assign_splits(enc.graphs, cfg.fractions, cfg.split_seed);
  return out;
}

std::vector<EncodedGraph> select_community(const std::vector<EncodedGraph>& graphs, const std::string& community) {
  std::vector<EncodedGraph> out;
  for (const EncodedGraph& g : graphs) {
    if (g.community == community) out.push_back(g);
  }
  return out;
}

}  // namespace threadcast

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "threadcast/discussion_graph.h"

namespace threadcast {

// Built-in lexicon tokens used for hateful text; data/lexicon_demo.txt holds
// the same list for the featurizer.
const std::vector<std::string>& synth_lexicon();

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t num_trees = 200;
  std::string community = "synthetic";
  double branching = 1.6;        // mean replies per comment, Poisson
  int max_depth = 7;
  std::size_t max_nodes = 200;   // per tree
  double escalation = 0.5;       // P(hateful | hateful parent)
  double base_hate = 0.1;        // P(hateful) otherwise, and at the root
  double community_norm = 0.5;   // > 0 rewards hateful content with votes
  double score_scale = 20.0;
  double score_baseline = 10.0;
  double score_noise = 3.0;      // additive normal
  double popularity_sigma = 1.2; // log-normal multiplier on the mean score
  double benign_min = 0.0;       // hate_raw range of benign text
  double benign_max = 0.2;
  double hateful_min = 0.6;      // hate_raw range of hateful text, up to 1
  std::size_t tokens_per_comment = 12;
  std::size_t neutral_vocab = 400;

  void check() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

// Trees sampled from a truncated branching process. Every node carries text
// whose lexicon hit rate equals its stored hate_raw, and an integer score
// drawn around community_norm * (2 hate_raw - 1) * score_scale + baseline.
std::vector<DiscussionTree> generate(const SynthConfig& cfg);

struct LongRangeConfig {
  std::uint64_t seed = 0;
  std::size_t num_trees = 2000;
  std::string community = "longrange";
  double planted_rate = 0.5;  // P(root carries the planted tokens)
  int max_depth = 5;          // hidden replies sit one level below depth 4
  std::size_t tokens_per_comment = 12;
  std::size_t neutral_vocab = 400;

  void check() const;
  nlohmann::json to_json() const;
  static LongRangeConfig from_json(const nlohmann::json& j);
};

struct LongRangeFixture {
  std::vector<DiscussionTree> trees;
  std::vector<std::uint8_t> planted;  // per tree
};

// Trees whose depth-4 comments are labelled class 3 when the root carries
// lexicon tokens and class 0 otherwise. The deciding evidence lives in the
// replies below depth 4, which trimming hides, so after trimming only the
// root four hops away reveals it. Comments at depths 1 to 4 are distractors
// drawn independently of the root.
LongRangeFixture generate_longrange_fixture(const LongRangeConfig& cfg);

}  // namespace threadcast

#include "threadcast/synth.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "threadcast/parallel.h"
#include "threadcast/rng.h"

namespace threadcast {

using nlohmann::json;

const std::vector<std::string>& synth_lexicon() {
  static const std::vector<std::string> words = {
      "idiot",   "moron",   "scum",    "trash",  "vermin",  "loser",     "clown",  "degenerate",
      "parasite", "subhuman", "filth",  "lowlife", "imbecile", "cretin",  "pathetic", "disgusting",
  };
  return words;
}

namespace {

void require_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string("synth: ") + name + " must lie in [0, 1]");
}

// Text of `tokens` words, `hits` of them from the lexicon, in shuffled order.
std::string make_text(Rng& rng, std::size_t tokens, std::size_t hits, std::size_t vocab) {
  const auto& lex = synth_lexicon();
  std::vector<std::string> words;
  words.reserve(tokens);
  for (std::size_t i = 0; i < hits; ++i) words.push_back(lex[rng.below(lex.size())]);
  for (std::size_t i = hits; i < tokens; ++i) words.push_back("w" + std::to_string(rng.below(vocab)));
  for (std::size_t i = words.size(); i > 1; --i) std::swap(words[i - 1], words[rng.below(i)]);
  std::string text;
  for (const std::string& w : words) {
    if (!text.empty()) text.push_back(' ');
    text += w;
  }
  return text;
}

// Draws hate_raw uniformly from [lo, hi], snapped to k / tokens so the text
// reproduces it exactly.
std::size_t draw_hits(Rng& rng, double lo, double hi, std::size_t tokens) {
  const double h = rng.uniform(lo, hi);
  return std::min(tokens, static_cast<std::size_t>(std::lround(h * static_cast<double>(tokens))));
}

std::string node_id(std::size_t tree, std::size_t node) {
  return "s" + std::to_string(tree) + "_" + std::to_string(node);
}

}  // namespace

void SynthConfig::check() const {
  require_unit(escalation, "escalation");
  require_unit(base_hate, "base_hate");
  require_unit(benign_min, "benign_min");
  require_unit(benign_max, "benign_max");
  if (benign_min > benign_max) throw std::invalid_argument("synth: benign_min exceeds benign_max");
  require_unit(hateful_min, "hateful_min");
  if (!(community_norm >= -1.0 && community_norm <= 1.0)) {
    throw std::invalid_argument("synth: community_norm must lie in [-1, 1]");
  }
  if (max_depth < 1) throw std::invalid_argument("synth: max_depth must be >= 1");
  if (max_nodes < 1 || tokens_per_comment < 1 || neutral_vocab < 1) {
    throw std::invalid_argument("synth: max_nodes, tokens_per_comment and neutral_vocab must be positive");
  }
  if (!(branching >= 0.0) || !(score_noise >= 0.0) || !(popularity_sigma >= 0.0)) {
    throw std::invalid_argument("synth: branching, score_noise and popularity_sigma must be >= 0");
  }
}

json SynthConfig::to_json() const {
  return json{{"seed", seed},
              {"num_trees", num_trees},
              {"community", community},
              {"branching", branching},
              {"max_depth", max_depth},
              {"max_nodes", max_nodes},
              {"escalation", escalation},
              {"base_hate", base_hate},
              {"community_norm", community_norm},
              {"score_scale", score_scale},
              {"score_baseline", score_baseline},
              {"score_noise", score_noise},
              {"popularity_sigma", popularity_sigma},
              {"benign_min", benign_min},
              {"benign_max", benign_max},
              {"hateful_min", hateful_min},
              {"tokens_per_comment", tokens_per_comment},
              {"neutral_vocab", neutral_vocab}};
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig c;
  c.seed = j.value("seed", c.seed);
  c.num_trees = j.value("num_trees", c.num_trees);
  c.community = j.value("community", c.community);
  c.branching = j.value("branching", c.branching);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.max_nodes = j.value("max_nodes", c.max_nodes);
  c.escalation = j.value("escalation", c.escalation);
  c.base_hate = j.value("base_hate", c.base_hate);
  c.community_norm = j.value("community_norm", c.community_norm);
  c.score_scale = j.value("score_scale", c.score_scale);
  c.score_baseline = j.value("score_baseline", c.score_baseline);
  c.score_noise = j.value("score_noise", c.score_noise);
  c.popularity_sigma = j.value("popularity_sigma", c.popularity_sigma);
  c.benign_min = j.value("benign_min", c.benign_min);
  c.benign_max = j.value("benign_max", c.benign_max);
  c.hateful_min = j.value("hateful_min", c.hateful_min);
  c.tokens_per_comment = j.value("tokens_per_comment", c.tokens_per_comment);
  c.neutral_vocab = j.value("neutral_vocab", c.neutral_vocab);
  c.check();
  return c;
}

std::vector<DiscussionTree> generate(const SynthConfig& cfg) {
  cfg.check();
  std::vector<DiscussionTree> trees(cfg.num_trees);
  parallel_for(cfg.num_trees, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t));
    std::vector<CommentNode> nodes;
    std::vector<bool> hateful;
    struct Pending {
      std::size_t parent;
      int depth;
    };
    std::deque<Pending> queue;
    auto add = [&](std::optional<std::size_t> parent, int depth) {
      const bool parent_hateful = parent && hateful[*parent];
      const bool h = rng.bernoulli(parent_hateful ? cfg.escalation : cfg.base_hate);
      const std::size_t hits = h ? draw_hits(rng, cfg.hateful_min, 1.0, cfg.tokens_per_comment)
                                 : draw_hits(rng, cfg.benign_min, cfg.benign_max, cfg.tokens_per_comment);
      CommentNode n;
      n.id = node_id(t, nodes.size());
      if (parent) n.parent_id = nodes[*parent].id;
      n.text = make_text(rng, cfg.tokens_per_comment, hits, cfg.neutral_vocab);
      const double hate_raw = static_cast<double>(hits) / static_cast<double>(cfg.tokens_per_comment);
      n.hate_raw = hate_raw;
      const double mean = cfg.community_norm * (2.0 * hate_raw - 1.0) * cfg.score_scale + cfg.score_baseline;
      const double popularity = std::exp(cfg.popularity_sigma * rng.normal());
      n.score = std::llround(mean * popularity + cfg.score_noise * rng.normal());
      n.community = cfg.community;
      n.depth = depth;
      nodes.push_back(std::move(n));
      hateful.push_back(h);
      const int replies = depth < cfg.max_depth ? rng.poisson(cfg.branching) : 0;
      for (int r = 0; r < replies; ++r) queue.push_back({nodes.size() - 1, depth + 1});
    };
    add(std::nullopt, 0);
    while (!queue.empty() && nodes.size() < cfg.max_nodes) {
      const Pending p = queue.front();
      queue.pop_front();
      add(p.parent, p.depth);
    }
    trees[t] = make_tree(cfg.community, std::move(nodes));
  });
  return trees;
}

void LongRangeConfig::check() const {
  require_unit(planted_rate, "planted_rate");
  if (max_depth < 5) throw std::invalid_argument("longrange: max_depth must be >= 5");
  if (tokens_per_comment < 8 || neutral_vocab < 1) {
    throw std::invalid_argument("longrange: tokens_per_comment must be >= 8 and neutral_vocab positive");
  }
}

json LongRangeConfig::to_json() const {
  return json{{"seed", seed},         {"num_trees", num_trees},
              {"community", community}, {"planted_rate", planted_rate},
              {"max_depth", max_depth}, {"tokens_per_comment", tokens_per_comment},
              {"neutral_vocab", neutral_vocab}};
}

LongRangeConfig LongRangeConfig::from_json(const json& j) {
  LongRangeConfig c;
  c.seed = j.value("seed", c.seed);
  c.num_trees = j.value("num_trees", c.num_trees);
  c.community = j.value("community", c.community);
  c.planted_rate = j.value("planted_rate", c.planted_rate);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.tokens_per_comment = j.value("tokens_per_comment", c.tokens_per_comment);
  c.neutral_vocab = j.value("neutral_vocab", c.neutral_vocab);
  c.check();
  return c;
}

LongRangeFixture generate_longrange_fixture(const LongRangeConfig& cfg) {
  cfg.check();
  LongRangeFixture out;
  out.trees.resize(cfg.num_trees);
  out.planted.resize(cfg.num_trees);
  const std::size_t T = cfg.tokens_per_comment;
  // Distractors stay at or below a quarter lexicon tokens, so their scaled
  // hate is negative and, with positive scores, they never raise a label.
  const std::size_t distractor_hits = T / 4;
  parallel_for(cfg.num_trees, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t));
    const bool bit = rng.bernoulli(cfg.planted_rate);
    std::vector<CommentNode> nodes;
    auto add = [&](std::optional<std::size_t> parent, int depth, std::size_t hits, std::int64_t score) {
      CommentNode n;
      n.id = node_id(t, nodes.size());
      if (parent) n.parent_id = nodes[*parent].id;
      n.text = make_text(rng, T, hits, cfg.neutral_vocab);
      n.hate_raw = static_cast<double>(hits) / static_cast<double>(T);
      n.score = score;
      n.community = cfg.community;
      n.depth = depth;
      nodes.push_back(std::move(n));
      return nodes.size() - 1;
    };
    auto distractor_score = [&] { return static_cast<std::int64_t>(1 + rng.below(10)); };

    add(std::nullopt, 0, bit ? T / 2 : 0, distractor_score());
    std::vector<std::size_t> frontier = {0};
    for (int depth = 1; depth <= 4; ++depth) {
      std::vector<std::size_t> next;
      for (std::size_t parent : frontier) {
        const int replies = depth == 1 ? 2 : 1 + static_cast<int>(rng.below(2));
        for (int r = 0; r < replies; ++r) {
          next.push_back(add(parent, depth, rng.below(distractor_hits + 1), distractor_score()));
        }
      }
      frontier = std::move(next);
    }
    // Hidden replies: hateful and heavily upvoted under a planted root,
    // benign and mildly upvoted otherwise.
    for (std::size_t parent : frontier) {
      const int replies = 2 + static_cast<int>(rng.below(2));
      for (int r = 0; r < replies; ++r) {
        if (bit) {
          add(parent, 5, T - rng.below(2), static_cast<std::int64_t>(160 + rng.below(81)));
        } else {
          add(parent, 5, rng.below(2), static_cast<std::int64_t>(5 + rng.below(26)));
        }
      }
    }
    out.trees[t] = make_tree(cfg.community, std::move(nodes));
    out.planted[t] = bit ? 1 : 0;
  });
  return out;
}

}  // namespace threadcast

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace oracle {

using threadcast::CommentNode;
using threadcast::DiscussionTree;

DiscussionTree random_tree(std::uint64_t seed, std::size_t n, const std::string& community) {
  std::mt19937_64 gen(seed);
  std::vector<CommentNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].id = "n" + std::to_string(i);
    if (i > 0) nodes[i].parent_id = "n" + std::to_string(gen() % i);
    nodes[i].score = static_cast<std::int64_t>(gen() % 101) - 50;
    nodes[i].hate_raw = static_cast<double>(gen() % 1000001) / 1e6;
    nodes[i].text = "t" + std::to_string(i);
    nodes[i].community = community;
  }
  std::shuffle(nodes.begin(), nodes.end(), gen);
  return threadcast::make_tree(community, std::move(nodes));
}

namespace {

long find(const DiscussionTree& t, const std::string& id) {
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    if (t.nodes[i].id == id) return static_cast<long>(i);
  }
  return -1;
}

long parent_of(const DiscussionTree& t, std::size_t v) {
  return t.nodes[v].parent_id ? find(t, *t.nodes[v].parent_id) : -1;
}

double scaled(const CommentNode& n) { return (22.0 * *n.hate_raw - 7.0) / 10.0; }

}  // namespace

double label_value(const DiscussionTree& t, std::size_t v, const threadcast::LabelWeights& w) {
  const long p = parent_of(t, v);
  const double context = p < 0 ? 0.0 : w.context * scaled(t.nodes[p]) * static_cast<double>(t.nodes[p].score);
  const double reaction = w.reaction * scaled(t.nodes[v]) * static_cast<double>(t.nodes[v].score);
  double influence = 0.0;
  for (std::size_t c = 0; c < t.nodes.size(); ++c) {
    if (t.nodes[c].parent_id && *t.nodes[c].parent_id == t.nodes[v].id) influence += w.influence * label_value(t, c, w);
  }
  return context + reaction + influence;
}

std::vector<double> label_values(const DiscussionTree& t, const threadcast::LabelWeights& w) {
  std::vector<double> out(t.nodes.size());
  for (std::size_t v = 0; v < t.nodes.size(); ++v) out[v] = label_value(t, v, w);
  return out;
}

int label_class(double v) {
  if (v < 0) return 0;
  if (v <= 5) return 1;
  if (v <= 20) return 2;
  if (v <= 500) return 3;
  return 4;
}

std::vector<int> depths(const DiscussionTree& t) {
  std::vector<int> d(t.nodes.size(), 0);
  for (std::size_t v = 0; v < t.nodes.size(); ++v) {
    long u = static_cast<long>(v);
    while ((u = parent_of(t, static_cast<std::size_t>(u))) >= 0) ++d[v];
  }
  return d;
}

std::set<std::string> trim_ids(const DiscussionTree& t, int max_depth, std::size_t min_desc) {
  const std::vector<int> d = depths(t);
  auto is_ancestor = [&](std::size_t a, std::size_t v) {
    long u = static_cast<long>(v);
    while ((u = parent_of(t, static_cast<std::size_t>(u))) >= 0) {
      if (static_cast<std::size_t>(u) == a) return true;
    }
    return false;
  };
  auto passes = [&](std::size_t v) {
    if (d[v] == 0) return true;
    std::size_t desc = 0;
    for (std::size_t u = 0; u < t.nodes.size(); ++u) desc += is_ancestor(v, u) ? 1 : 0;
    return d[v] <= max_depth && desc >= min_desc;
  };
  std::set<std::string> kept;
  for (std::size_t v = 0; v < t.nodes.size(); ++v) {
    bool ok = passes(v);
    long u = static_cast<long>(v);
    while (ok && (u = parent_of(t, static_cast<std::size_t>(u))) >= 0) ok = passes(static_cast<std::size_t>(u));
    if (ok) kept.insert(t.nodes[v].id);
  }
  return kept;
}

std::vector<int> floyd_warshall(const DiscussionTree& t) {
  const std::size_t n = t.nodes.size();
  const int inf = std::numeric_limits<int>::max() / 4;
  std::vector<int> d(n * n, inf);
  for (std::size_t i = 0; i < n; ++i) {
    d[i * n + i] = 0;
    const long p = parent_of(t, i);
    if (p >= 0) d[i * n + p] = d[p * n + i] = 1;
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
    }
  }
  return d;
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({floor, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace oracle

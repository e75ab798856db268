// Acceptance runner. With no arguments every criterion runs; otherwise only
// the numbered ones. One PASS/FAIL line per criterion, exit status 1 if any
// failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "fixtures.h"
#include "gradcheck.h"
#include "oracles.h"
#include "threadcast/experiment.h"
#include "threadcast/hate_label.h"
#include "threadcast/struct_encode.h"
#include "threadcast/trim.h"

using namespace threadcast;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "FAILED " + what;
    }
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string source_path(const std::string& rel) { return std::string(THREADCAST_SOURCE_DIR) + "/" + rel; }

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

// 1 -------------------------------------------------------------------------

DiscussionTree hand_chain() {
  // Scaled hate 0.4, 1.5, 1.5 with scores 2, 10, 4.
  const double raw[] = {(4.0 + 7.0) / 22.0, 1.0, 1.0};
  const std::int64_t score[] = {2, 10, 4};
  std::vector<CommentNode> nodes(3);
  for (int i = 0; i < 3; ++i) {
    nodes[i].id = "v" + std::to_string(i);
    if (i > 0) nodes[i].parent_id = "v" + std::to_string(i - 1);
    nodes[i].hate_raw = raw[i];
    nodes[i].score = score[i];
  }
  return make_tree("c", nodes);
}

Outcome labeling_oracle() {
  Outcome o;
  std::mt19937_64 gen(101);
  double worst = 0.0;
  std::size_t class_mismatch = 0;
  const LabelWeights w;
  for (int i = 0; i < 1000; ++i) {
    const DiscussionTree t = oracle::random_tree(gen(), 1 + gen() % 200);
    const auto got = compute_labels(t, w);
    const auto ref = oracle::label_values(t, w);
    for (std::size_t v = 0; v < ref.size(); ++v) {
      worst = std::max(worst, std::abs(got[v].value - ref[v]));
      if (got[v].cls != oracle::label_class(ref[v])) ++class_mismatch;
    }
  }
  o.require(worst <= 1e-9, "max|d| <= 1e-9");
  o.require(class_mismatch == 0, "classes agree");
  const auto chain = compute_labels(hand_chain(), w);
  o.require(chain[0].value == 1.515625 && chain[1].value == 5.2625 && chain[2].value == 5.25,
            "hand chain exact");
  o.note("1000 trees, max|d|=" + num(worst) + ", chain " + num(chain[0].value) + "/" + num(chain[1].value) + "/" +
         num(chain[2].value));
  return o;
}

// 2 -------------------------------------------------------------------------

Outcome trimming() {
  Outcome o;
  std::mt19937_64 gen(202);
  std::size_t kept = 0, bad_node = 0, bad_set = 0;
  for (int i = 0; i < 500; ++i) {
    DiscussionTree t = oracle::random_tree(gen(), 1 + gen() % 150);
    auto labels = compute_labels(t, LabelWeights{});
    const LabeledTree full{t, labels};
    const auto expect = oracle::trim_ids(t, 4, 2);
    const auto got = trim_tree(full, TrimConfig{});
    if (!got) {
      if (expect.size() >= 2) ++bad_set;
      continue;
    }
    ++kept;
    std::set<std::string> ids;
    for (std::size_t v = 0; v < got->tree.size(); ++v) {
      const auto& node = got->tree.nodes[v];
      ids.insert(node.id);
      if (v == got->tree.root_index) continue;
      std::size_t src = 0;
      while (t.nodes[src].id != node.id) ++src;
      if (node.depth > 4 || count_descendants(t, src) < 2) ++bad_node;
    }
    if (ids != expect) ++bad_set;
  }
  o.require(bad_node == 0, "depth <= 4 and >= 2 descendants");
  o.require(bad_set == 0, "equals brute-force filter");
  o.note("500 trees, " + std::to_string(kept) + " kept");
  return o;
}

// 3 -------------------------------------------------------------------------

Outcome spd() {
  Outcome o;
  std::mt19937_64 gen(303);
  std::size_t mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const DiscussionTree t = oracle::random_tree(gen(), 1 + gen() % 50);
    if (compute_spd(t) != oracle::floyd_warshall(t)) ++mismatches;
  }
  o.require(mismatches == 0, "spd equals Floyd-Warshall");
  o.note("200 trees, " + std::to_string(mismatches) + " mismatches");
  return o;
}

// 4 -------------------------------------------------------------------------

Outcome gradients() {
  Outcome o;
  double worst_op = 0.0;
  std::string worst_name;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (auto& c : oracle::op_cases(seed)) {
      const auto r = oracle::check_op(c);
      if (r.max_rel_error > worst_op) {
        worst_op = r.max_rel_error;
        worst_name = c.name;
      }
    }
  }
  double worst_model = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const EncodedGraph g = oracle::fixture_graph(40 + seed, 4 + 2 * seed, 4);
    ModelConfig c = ModelConfig::from_preset("desk", ModelKind::kGraphormer);
    c.input_dim = g.feature_dim;
    c.num_layers = 2;
    c.hidden_dim = 8;
    c.num_heads = 2;
    c.ffn_dim = 16;
    c.max_spd = 4;
    c.max_degree = 4;
    auto m = make_model<double>(c);
    m->initialize(seed);
    const auto r = oracle::check_model_gradients(*m, pad_graph(g, g.num_nodes + 2), seed);
    worst_model = std::max(worst_model, r.max_rel_error);
    o.require(r.coords == m->params().numel(), "every parameter checked");
  }
  o.require(worst_op <= 1e-5, "ops rel err <= 1e-5");
  o.require(worst_model <= 1e-5, "graphormer loss rel err <= 1e-5");
  o.note("ops max " + num(worst_op) + " (" + worst_name + "), graphormer 2x8 max " + num(worst_model));
  return o;
}

// 5 -------------------------------------------------------------------------

template <typename T>
std::unique_ptr<NodeRegressor<T>> random_model(ModelKind kind, std::size_t input_dim, std::uint64_t seed) {
  ModelConfig c = ModelConfig::from_preset("desk", kind);
  c.input_dim = input_dim;
  auto m = make_model<T>(c);
  m->initialize(seed);
  if (m->params().find("spatial.bias")) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> d(0.0, 0.5);
    for (auto& v : m->params().at("spatial.bias").data) v = static_cast<T>(d(gen));
  }
  return m;
}

template <typename T>
std::vector<double> perturbation_response(const NodeRegressor<T>& m, const EncodedGraph& g, std::size_t src) {
  ModelInput in = pad_graph(g, g.num_nodes);
  const auto before = m.predict(in);
  for (std::size_t f = 0; f < in.feature_dim; ++f) in.features[src * in.feature_dim + f] += 0.5 + 0.1 * f;
  const auto after = m.predict(in);
  std::vector<double> d(before.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(after[i] - before[i]);
  return d;
}

Outcome equivariance_masking() {
  Outcome o;
  std::mt19937_64 gen(505);
  double equiv = 0.0, pad = 0.0;
  for (ModelKind kind : {ModelKind::kGraphormer, ModelKind::kGat}) {
    for (int trial = 0; trial < 10; ++trial) {
      const EncodedGraph g = oracle::fixture_graph(gen(), 5 + gen() % 30, 8);
      auto m = random_model<float>(kind, g.feature_dim, gen());
      const std::size_t padded = g.num_nodes + 3;
      const ModelInput in = pad_graph(g, padded);
      std::vector<std::size_t> perm(g.num_nodes);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), gen);
      for (std::size_t i = g.num_nodes; i < padded; ++i) perm.push_back(i);
      const auto base = m->predict(in);
      const auto moved = m->predict(oracle::permuted(in, perm));
      for (std::size_t k = 0; k < g.num_nodes; ++k) equiv = std::max(equiv, std::abs(moved[k] - base[perm[k]]));
      const auto tight = m->predict(pad_graph(g, g.num_nodes));
      const auto loose = m->predict(pad_graph(g, g.num_nodes + 17));
      for (std::size_t k = 0; k < g.num_nodes; ++k) pad = std::max(pad, std::abs(tight[k] - loose[k]));
    }
  }
  double gat_far = 0.0, graphormer_far_min = INFINITY;
  std::size_t far_pairs = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const EncodedGraph g = oracle::fixture_graph(900 + s, 10 + s, 8);
    const std::size_t src = gen() % g.num_nodes;
    auto gat = random_model<double>(ModelKind::kGat, g.feature_dim, s);
    auto gr = random_model<double>(ModelKind::kGraphormer, g.feature_dim, s);
    const auto dg = perturbation_response(*gat, g, src);
    const auto dr = perturbation_response(*gr, g, src);
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      if (g.spd_at(i, src) < 3) continue;
      ++far_pairs;
      gat_far = std::max(gat_far, dg[i]);
      graphormer_far_min = std::min(graphormer_far_min, dr[i]);
    }
  }
  o.require(equiv <= 1e-5, "permutation equivariance <= 1e-5");
  o.require(gat_far == 0.0, "GAT response beyond 2 hops is 0");
  o.require(far_pairs > 0 && graphormer_far_min > 0.0, "Graphormer response at distance >= 3 nonzero");
  o.require(pad <= 1e-6, "padding neutrality <= 1e-6");
  o.note("equiv " + num(equiv) + ", pad " + num(pad) + ", GAT far max " + num(gat_far) + ", Graphormer far min " +
         num(graphormer_far_min) + " over " + std::to_string(far_pairs) + " pairs");
  return o;
}

// 6 -------------------------------------------------------------------------

Outcome overfit() {
  Outcome o;
  std::string mses;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto a = oracle::run_overfit(seed);
    const auto b = oracle::run_overfit(seed);
    o.require(a.steps <= 500, "within 500 steps");
    o.require(a.train_mse < 0.05, "train MSE < 0.05 (seed " + std::to_string(seed) + ")");
    o.require(a.step_losses == b.step_losses && a.train_mse == b.train_mse, "deterministic per seed");
    mses += (mses.empty() ? "" : ", ") + num(a.train_mse);
  }
  o.note("train MSE " + mses + " after 500 steps, reruns identical");
  return o;
}

// 7 -------------------------------------------------------------------------

double class_gap_mean(const EvalReport& gr, const EvalReport& gat, int lo, int hi) {
  double s = 0.0;
  int n = 0;
  for (int c = lo; c < hi; ++c) {
    if (std::isnan(gr.per_class_l2[c]) || std::isnan(gat.per_class_l2[c])) continue;
    s += gat.per_class_l2[c] - gr.per_class_l2[c];
    ++n;
  }
  return n ? s / n : NAN;
}

Outcome context_ab() {
  Outcome o;
  const ExperimentSpec spec = ExperimentSpec::from_json(read_json(source_path("data/configs/experiment_context_ab.json")));
  o.require(spec.seeds.size() >= 3 && spec.longrange && spec.longrange->num_trees >= 2000, "3 seeds, >= 2000 trees");
  const ContextAbResult r = run_context_ab(spec, experiment_trees(spec));
  std::string per;
  for (std::size_t s = 0; s < r.seeds.size(); ++s) {
    const double rel = 1.0 - r.graphormer[s].overall_l2 / r.gat[s].overall_l2;
    o.require(rel >= 0.2, "seed " + std::to_string(r.seeds[s]) + " relative gain >= 20%");
    per += (per.empty() ? "" : "/") + num(100 * rel) + "%";
  }
  const double rel = 1.0 - r.mean_graphormer.overall_l2 / r.mean_gat.overall_l2;
  const double hi = class_gap_mean(r.mean_graphormer, r.mean_gat, 2, kNumClasses);
  const double lo = class_gap_mean(r.mean_graphormer, r.mean_gat, 0, 2);
  o.require(rel >= 0.2, "mean relative gain >= 20%");
  o.require(hi > lo, "gap concentrated in classes >= 2");
  o.note("test MSE Graphormer " + num(r.mean_graphormer.overall_l2) + " vs GAT " + num(r.mean_gat.overall_l2) +
         " (gain " + num(100 * rel) + "%, per seed " + per + "), mean class gap >=2: " + num(hi) + ", <2: " + num(lo));
  std::cout << r.to_tsv();
  return o;
}

// 8 -------------------------------------------------------------------------

Outcome community() {
  Outcome o;
  const ExperimentSpec spec = ExperimentSpec::from_json(read_json(source_path("data/configs/experiment_community.json")));
  o.require(spec.seeds.size() >= 3 && spec.communities.size() == 2, "3 seeds, 2 communities");
  o.require(spec.communities[0].community_norm * spec.communities[1].community_norm < 0, "opposite norms");
  const CommunityResult r = run_community(spec, experiment_trees(spec));
  std::size_t wins = 0, total = 0;
  for (std::size_t s = 0; s < r.per_seed.size(); ++s) {
    for (const CommunityRow& row : r.per_seed[s]) {
      if (row.community == "All") continue;
      ++total;
      if (row.test < row.pooled_test) {
        ++wins;
      } else {
        o.require(false, row.community + " seed " + std::to_string(r.seeds[s]) + " specific < pooled");
      }
    }
  }
  o.require(total == 6, "6 community-seed pairs");
  std::string margins;
  for (const CommunityRow& row : r.mean) {
    if (row.community == "All") continue;
    margins += (margins.empty() ? "" : ", ") + row.community + " " + num(row.test) + " vs pooled " + num(row.pooled_test);
  }
  o.note(std::to_string(wins) + "/" + std::to_string(total) + " specific wins; mean " + margins);
  std::cout << r.to_tsv();
  return o;
}

// 9 -------------------------------------------------------------------------

Outcome sensitivity() {
  Outcome o;
  const ExperimentSpec spec =
      ExperimentSpec::from_json(read_json(source_path("data/configs/experiment_sensitivity.json")));
  const auto trees = experiment_trees(spec);
  const SensitivityResult r = run_sensitivity(spec, trees);
  const auto presets = sensitivity_presets();
  const std::vector<std::string> names = {"Equal", "Influence", "Reaction", "Context"};
  o.require(r.mean.size() == 4, "four presets");
  for (std::size_t i = 0; i < std::min<std::size_t>(4, r.mean.size()); ++i) {
    o.require(r.mean[i].name == names[i], "preset order");
    o.require(std::isfinite(r.mean[i].train) && std::isfinite(r.mean[i].test), "finite losses");
  }
  const std::string tsv = r.to_tsv();
  o.require(tsv.rfind("Labeling Weight Variant\tTrain L2\tTest L2\n", 0) == 0, "report header");
  std::size_t mismatches = 0, nodes = 0;
  for (std::size_t p = 0; p < presets.size(); ++p) {
    for (std::size_t t = 0; t < trees.size(); ++t) {
      const auto ref = oracle::label_values(trees[t], presets[p].weights);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        ++nodes;
        if (r.labels[p][t][i].value != ref[i] || r.labels[p][t][i].cls != oracle::label_class(ref[i])) ++mismatches;
      }
    }
  }
  o.require(mismatches == 0, "relabeling equals oracle");
  o.note(std::to_string(nodes) + " node labels checked, " + std::to_string(mismatches) + " mismatches");
  std::cout << tsv;
  return o;
}

// 10 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "threadcast_acceptance_chain";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  std::ofstream(dir / "train.json")
      << R"({"model":{"num_layers":2,"hidden_dim":16,"num_heads":2,"ffn_dim":16},"train":{"epochs":2,"batch_size":8}})";
  std::ofstream(dir / "experiment.json") << R"({"kind":"context-ab","seeds":[1],
    "model":{"num_layers":1,"hidden_dim":8,"num_heads":2,"ffn_dim":8},"train":{"max_steps":4,"batch_size":8},
    "pipeline":{"d_text":16},"longrange":{"seed":3,"num_trees":30}})";
  const std::vector<std::vector<std::string>> steps = {
      {"synth", "--config", source_path("data/configs/synth_small.json"), "--out", p("synth")},
      {"featurize", "--trees", p("synth/trees.jsonl"), "--hashed", "--dim", "32", "--lexicon",
       source_path("data/lexicon_demo.txt"), "--out", p("feat.jsonl")},
      {"label", "--trees", p("synth/trees.jsonl"), "--features", p("feat.jsonl"), "--out", p("labeled.jsonl"), "--report",
       p("label_report.json")},
      {"trim", "--in", p("labeled.jsonl"), "--out", p("trimmed.jsonl"), "--report", p("trim_report.json")},
      {"encode", "--in", p("trimmed.jsonl"), "--features", p("feat.jsonl"), "--out", p("data.tcd"), "--seed", "3"},
      {"train", "--data", p("data.tcd"), "--config", p("train.json"), "--seed", "5", "--out", p("model.ckpt"),
       "--history", p("history.jsonl")},
      {"eval", "--checkpoint", p("model.ckpt"), "--data", p("data.tcd"), "--out", p("eval.json"), "--tsv",
       p("eval.tsv")},
      {"experiment", "--spec", p("experiment.json"), "--out", p("experiment.json.out"), "--tsv", p("experiment.tsv")},
      {"report", p("eval.tsv"), p("experiment.tsv"), "--out", p("report.txt")},
  };
  for (const auto& s : steps) {
    std::ostringstream out, err;
    const int code = cli::run(s, out, err);
    o.require(code == 0, s[0] + " exits 0 (" + err.str() + ")");
    if (code != 0) return o;
  }
  std::vector<std::string> manifests;
  std::vector<std::pair<fs::path, std::string>> before;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (e.path().string().ends_with(".manifest.json")) manifests.push_back(e.path().string());
    before.emplace_back(e.path(), slurp(e.path()));
  }
  std::sort(manifests.begin(), manifests.end());
  o.require(manifests.size() >= steps.size(), "a manifest per stage");
  for (const char* threads : {"1", "3"}) {
    std::vector<std::string> args = {"--threads", threads, "replay"};
    args.insert(args.end(), manifests.begin(), manifests.end());
    std::ostringstream out, err;
    o.require(cli::run(args, out, err) == 0, std::string("replay at ") + threads + " threads");
    o.require(out.str().find("DIFFERENT") == std::string::npos, "no replay differences");
    std::size_t changed = 0;
    for (const auto& [path, bytes] : before) changed += slurp(path) != bytes;
    o.require(changed == 0, "artifacts byte-identical after replay");
  }
  o.note(std::to_string(manifests.size()) + " manifests replayed at 1 and 3 threads, all artifacts byte-identical");
  fs::remove_all(dir);
  return o;
}

struct Criterion {
  int id;
  std::string name;
  double limit_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "labeling-oracle", 30, labeling_oracle},
      {2, "trimming", 30, trimming},
      {3, "spd", 10, spd},
      {4, "gradients", 120, gradients},
      {5, "equivariance-masking", 0, equivariance_masking},
      {6, "overfit", 180, overfit},
      {7, "context-ab", 900, context_ab},
      {8, "community", 900, community},
      {9, "sensitivity", 1200, sensitivity},
      {10, "determinism", 0, determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::stoi(argv[i]));
  bool ok = true;
  for (const Criterion& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = num(secs) + " s";
    if (c.limit_s > 0) {
      timing += " of " + num(c.limit_s) + " s";
      o.require(secs < c.limit_s, "runtime");
    }
    ok = ok && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << " " << c.name << "  [" << timing << "]  " << o.detail
              << std::endl;
  }
  return ok ? 0 : 1;
}

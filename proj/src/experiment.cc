#include "threadcast/experiment.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "threadcast/rng.h"
#include "threadcast/tree_io.h"

namespace threadcast {

using nlohmann::json;

const char* experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kContextAb: return "context-ab";
    case ExperimentKind::kCommunity: return "community";
    case ExperimentKind::kSensitivity: return "sensitivity";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "context-ab") return ExperimentKind::kContextAb;
  if (name == "community") return ExperimentKind::kCommunity;
  if (name == "sensitivity") return ExperimentKind::kSensitivity;
  throw std::invalid_argument("unknown experiment '" + name + "' (context-ab|community|sensitivity)");
}

json ExperimentSpec::to_json() const {
  json j{{"kind", experiment_kind_name(kind)}, {"seeds", seeds},       {"preset", preset},
         {"model", model_overrides},           {"train", train.to_json()}, {"pipeline", pipeline.to_json()}};
  if (longrange) j["longrange"] = longrange->to_json();
  if (!communities.empty()) {
    j["communities"] = json::array();
    for (const SynthConfig& c : communities) j["communities"].push_back(c.to_json());
  }
  if (!trees_path.empty()) j["trees"] = trees_path;
  if (!lexicon_path.empty()) j["lexicon"] = lexicon_path;
  return j;
}

ExperimentSpec ExperimentSpec::from_json(const json& j) {
  ExperimentSpec s;
  s.kind = parse_experiment_kind(j.at("kind").get<std::string>());
  if (j.contains("seeds")) s.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  s.preset = j.value("preset", s.preset);
  if (j.contains("model")) s.model_overrides = j["model"];
  if (j.contains("train")) s.train = TrainConfig::from_json(j["train"]);
  if (j.contains("pipeline")) s.pipeline = PipelineConfig::from_json(j["pipeline"]);
  if (j.contains("longrange")) s.longrange = LongRangeConfig::from_json(j["longrange"]);
  if (j.contains("communities")) {
    for (const json& c : j["communities"]) s.communities.push_back(SynthConfig::from_json(c));
  }
  s.trees_path = j.value("trees", std::string());
  s.lexicon_path = j.value("lexicon", std::string());
  const int sources = (s.longrange ? 1 : 0) + (s.communities.empty() ? 0 : 1) + (s.trees_path.empty() ? 0 : 1);
  if (sources != 1) throw std::invalid_argument("experiment: give exactly one of longrange, communities, trees");
  if (s.seeds.empty()) throw std::invalid_argument("experiment: at least one seed is required");
  if (s.kind == ExperimentKind::kCommunity && s.communities.size() < 2 && s.trees_path.empty()) {
    throw std::invalid_argument("experiment: community needs at least two communities");
  }
  return s;
}

ModelConfig experiment_model_config(const ExperimentSpec& spec, ModelKind kind, std::size_t input_dim,
                                    const EncodedDataset& data) {
  json j = ModelConfig::from_preset(spec.preset, kind).to_json();
  for (auto it = spec.model_overrides.begin(); it != spec.model_overrides.end(); ++it) j[it.key()] = it.value();
  j["model"] = model_kind_name(kind);
  j["input_dim"] = input_dim;
  j["max_spd"] = data.max_spd;
  j["max_degree"] = data.max_degree;
  ModelConfig c = ModelConfig::from_json(j);
  if (kind == ModelKind::kGat) c.num_layers = spec.model_overrides.value("gat_layers", std::size_t{2});
  c.check();
  return c;
}

std::vector<DiscussionTree> experiment_trees(const ExperimentSpec& spec, const std::vector<DiscussionTree>* trees) {
  if (spec.longrange) return generate_longrange_fixture(*spec.longrange).trees;
  if (!spec.communities.empty()) {
    std::vector<DiscussionTree> all;
    for (const SynthConfig& c : spec.communities) {
      std::vector<DiscussionTree> part = generate(c);
      all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return all;
  }
  if (trees) return *trees;
  std::ifstream in(spec.trees_path);
  if (!in) throw std::runtime_error("experiment: cannot open " + spec.trees_path);
  return strip_labels(read_trees_jsonl(in));
}

namespace {

Lexicon experiment_lexicon(const ExperimentSpec& spec) {
  if (spec.lexicon_path.empty()) return Lexicon(synth_lexicon().begin(), synth_lexicon().end());
  std::ifstream in(spec.lexicon_path);
  if (!in) throw std::runtime_error("experiment: cannot open lexicon " + spec.lexicon_path);
  return load_lexicon(in);
}

void say(const ExperimentLog& log, const std::string& msg) {
  if (log) log(msg);
}

template <typename T>
std::vector<std::vector<double>> fit_predict_t(const ModelConfig& mc, TrainConfig tc, std::uint64_t seed,
                                               const std::vector<EncodedGraph>& train_set,
                                               const std::vector<EncodedGraph>& eval_set) {
  auto model = make_model<T>(mc);
  model->initialize(derive_seed(seed, 1));
  tc.seed = seed;
  train(*model, train_set, tc);
  return predict_all(*model, eval_set);
}

// Trains on `train_set` and returns predictions for `eval_set`.
std::vector<std::vector<double>> fit_predict(const ModelConfig& mc, const TrainConfig& tc, std::uint64_t seed,
                                             const std::vector<EncodedGraph>& train_set,
                                             const std::vector<EncodedGraph>& eval_set) {
  if (tc.precision == 64) return fit_predict_t<double>(mc, tc, seed, train_set, eval_set);
  return fit_predict_t<float>(mc, tc, seed, train_set, eval_set);
}

PreparedData prepare(const ExperimentSpec& spec, std::vector<DiscussionTree> trees, const PipelineConfig& pipeline) {
  HashedFeatureProvider provider(pipeline.d_text, experiment_lexicon(spec));
  return prepare_dataset(std::move(trees), provider, pipeline);
}

EvalReport mean_report(const std::vector<EvalReport>& reports) {
  EvalReport m = reports.front();
  const double k = static_cast<double>(reports.size());
  m.overall_l2 = 0.0;
  m.per_class_l2.fill(0.0);
  for (const EvalReport& r : reports) {
    m.overall_l2 += r.overall_l2 / k;
    for (std::size_t c = 0; c < kClasses; ++c) m.per_class_l2[c] += r.per_class_l2[c] / k;
  }
  return m;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "-";
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(6);
  out << v;
  return out.str();
}

std::vector<std::string> distinct_communities(const std::vector<EncodedGraph>& graphs) {
  std::vector<std::string> out;
  for (const EncodedGraph& g : graphs) {
    if (std::find(out.begin(), out.end(), g.community) == out.end()) out.push_back(g.community);
  }
  return out;
}

}  // namespace

std::string ContextAbResult::to_tsv() const { return eval_table_tsv({mean_graphormer, mean_gat}); }

std::string CommunityResult::to_tsv() const {
  std::string out = "Target Communities\tTrain\tTest\tPooled Test\n";
  for (const CommunityRow& r : mean) {
    out += r.community + "\t" + fmt(r.train) + "\t" + fmt(r.test) + "\t" + fmt(r.pooled_test) + "\n";
  }
  return out;
}

std::string SensitivityResult::to_tsv() const {
  std::string out = "Labeling Weight Variant\tTrain L2\tTest L2\n";
  for (const SensitivityRow& r : mean) out += r.name + "\t" + fmt(r.train) + "\t" + fmt(r.test) + "\n";
  return out;
}

ContextAbResult run_context_ab(const ExperimentSpec& spec, std::vector<DiscussionTree> trees,
                               const ExperimentLog& log) {
  const PreparedData data = prepare(spec, std::move(trees), spec.pipeline);
  const auto& graphs = data.encoded.graphs;
  say(log, "context-ab: " + std::to_string(graphs.size()) + " graphs after trimming");
  const ModelConfig gph = experiment_model_config(spec, ModelKind::kGraphormer, data.encoded.feature_dim, data.encoded);
  const ModelConfig gat = experiment_model_config(spec, ModelKind::kGat, data.encoded.feature_dim, data.encoded);
  ContextAbResult r;
  r.seeds = spec.seeds;
  for (std::uint64_t seed : spec.seeds) {
    EvalReport a = evaluate_predictions(fit_predict(gph, spec.train, seed, graphs, graphs), graphs);
    a.name = "Graphormer";
    a.config = gph.to_json();
    say(log, "seed " + std::to_string(seed) + " graphormer test L2 " + fmt(a.overall_l2));
    EvalReport b = evaluate_predictions(fit_predict(gat, spec.train, seed, graphs, graphs), graphs);
    b.name = "GAT";
    b.config = gat.to_json();
    say(log, "seed " + std::to_string(seed) + " gat test L2 " + fmt(b.overall_l2));
    r.graphormer.push_back(std::move(a));
    r.gat.push_back(std::move(b));
  }
  r.mean_graphormer = mean_report(r.graphormer);
  r.mean_gat = mean_report(r.gat);
  return r;
}

CommunityResult run_community(const ExperimentSpec& spec, std::vector<DiscussionTree> trees,
                              const ExperimentLog& log) {
  const PreparedData data = prepare(spec, std::move(trees), spec.pipeline);
  const auto& graphs = data.encoded.graphs;
  const std::vector<std::string> names = distinct_communities(graphs);
  if (names.size() < 2) throw std::invalid_argument("community experiment: need at least two communities");
  const ModelConfig mc = experiment_model_config(spec, ModelKind::kGraphormer, data.encoded.feature_dim, data.encoded);

  CommunityResult r;
  r.seeds = spec.seeds;
  for (std::uint64_t seed : spec.seeds) {
    std::vector<CommunityRow> rows;
    const auto pooled = fit_predict(mc, spec.train, seed, graphs, graphs);
    CommunityRow all{"All", masked_l2(pooled, graphs, SplitSel::kTrain), masked_l2(pooled, graphs, SplitSel::kTest),
                     0.0};
    all.pooled_test = all.test;
    rows.push_back(all);
    say(log, "seed " + std::to_string(seed) + " pooled test L2 " + fmt(all.test));
    for (const std::string& name : names) {
      std::vector<EncodedGraph> own;
      std::vector<std::vector<double>> pooled_own;
      for (std::size_t g = 0; g < graphs.size(); ++g) {
        if (graphs[g].community != name) continue;
        own.push_back(graphs[g]);
        pooled_own.push_back(pooled[g]);
      }
      const auto specific = fit_predict(mc, spec.train, seed, own, own);
      CommunityRow row{name, masked_l2(specific, own, SplitSel::kTrain), masked_l2(specific, own, SplitSel::kTest),
                       masked_l2(pooled_own, own, SplitSel::kTest)};
      say(log, "seed " + std::to_string(seed) + " " + name + " specific " + fmt(row.test) + " pooled " +
                   fmt(row.pooled_test));
      rows.push_back(row);
    }
    r.per_seed.push_back(std::move(rows));
  }
  r.mean = r.per_seed.front();
  const double k = static_cast<double>(r.per_seed.size());
  for (std::size_t i = 0; i < r.mean.size(); ++i) {
    r.mean[i].train = r.mean[i].test = r.mean[i].pooled_test = 0.0;
    for (const auto& rows : r.per_seed) {
      r.mean[i].train += rows[i].train / k;
      r.mean[i].test += rows[i].test / k;
      r.mean[i].pooled_test += rows[i].pooled_test / k;
    }
  }
  return r;
}

SensitivityResult run_sensitivity(const ExperimentSpec& spec, std::vector<DiscussionTree> trees,
                                  const ExperimentLog& log) {
  SensitivityResult r;
  r.seeds = spec.seeds;
  r.per_seed.assign(spec.seeds.size(), {});
  for (const NamedWeights& preset : sensitivity_presets()) {
    PipelineConfig pipeline = spec.pipeline;
    pipeline.weights = preset.weights;
    const PreparedData data = prepare(spec, trees, pipeline);
    const auto& graphs = data.encoded.graphs;
    std::vector<std::vector<HateLabel>> labels;
    for (const LabeledTree& t : data.labeled.trees) labels.push_back(t.labels);
    r.labels.push_back(std::move(labels));

    SensitivityRow base{preset.name, preset.weights, 0.0, 0.0, {}};
    for (const EncodedGraph& g : graphs) {
      for (int c : g.labels) ++base.class_counts[c];
    }
    const ModelConfig mc = experiment_model_config(spec, ModelKind::kGraphormer, data.encoded.feature_dim, data.encoded);
    for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
      const auto pred = fit_predict(mc, spec.train, spec.seeds[s], graphs, graphs);
      SensitivityRow row = base;
      row.train = masked_l2(pred, graphs, SplitSel::kTrain);
      row.test = masked_l2(pred, graphs, SplitSel::kTest);
      say(log, preset.name + " seed " + std::to_string(spec.seeds[s]) + " test L2 " + fmt(row.test));
      r.per_seed[s].push_back(row);
    }
  }
  r.mean = r.per_seed.front();
  const double k = static_cast<double>(r.per_seed.size());
  for (std::size_t i = 0; i < r.mean.size(); ++i) {
    r.mean[i].train = r.mean[i].test = 0.0;
    for (const auto& rows : r.per_seed) {
      r.mean[i].train += rows[i].train / k;
      r.mean[i].test += rows[i].test / k;
    }
  }
  return r;
}

ExperimentOutput run_experiment(const ExperimentSpec& spec, std::vector<DiscussionTree> trees,
                                const ExperimentLog& log) {
  ExperimentOutput out;
  out.result = json{{"kind", experiment_kind_name(spec.kind)}, {"spec", spec.to_json()}};
  switch (spec.kind) {
    case ExperimentKind::kContextAb: {
      const ContextAbResult r = run_context_ab(spec, std::move(trees), log);
      json per = json::array();
      for (std::size_t i = 0; i < r.seeds.size(); ++i) {
        per.push_back({{"seed", r.seeds[i]}, {"graphormer", r.graphormer[i].to_json()}, {"gat", r.gat[i].to_json()}});
      }
      out.result["per_seed"] = per;
      out.result["mean"] = {{"graphormer", r.mean_graphormer.to_json()}, {"gat", r.mean_gat.to_json()}};
      out.table_tsv = r.to_tsv();
      break;
    }
    case ExperimentKind::kCommunity: {
      const CommunityResult r = run_community(spec, std::move(trees), log);
      auto rows_json = [](const std::vector<CommunityRow>& rows) {
        json a = json::array();
        for (const CommunityRow& row : rows) {
          a.push_back({{"community", row.community},
                       {"train", row.train},
                       {"test", row.test},
                       {"pooled_test", row.pooled_test}});
        }
        return a;
      };
      json per = json::array();
      for (std::size_t i = 0; i < r.seeds.size(); ++i) per.push_back({{"seed", r.seeds[i]}, {"rows", rows_json(r.per_seed[i])}});
      out.result["per_seed"] = per;
      out.result["mean"] = rows_json(r.mean);
      out.table_tsv = r.to_tsv();
      break;
    }
    case ExperimentKind::kSensitivity: {
      const SensitivityResult r = run_sensitivity(spec, std::move(trees), log);
      auto rows_json = [](const std::vector<SensitivityRow>& rows) {
        json a = json::array();
        for (const SensitivityRow& row : rows) {
          a.push_back({{"variant", row.name},
                       {"weights", {row.weights.context, row.weights.reaction, row.weights.influence}},
                       {"train", row.train},
                       {"test", row.test},
                       {"class_counts", row.class_counts}});
        }
        return a;
      };
      json per = json::array();
      for (std::size_t i = 0; i < r.seeds.size(); ++i) per.push_back({{"seed", r.seeds[i]}, {"rows", rows_json(r.per_seed[i])}});
      out.result["per_seed"] = per;
      out.result["mean"] = rows_json(r.mean);
      out.table_tsv = r.to_tsv();
      break;
    }
  }
  return out;
}

}  // namespace threadcast

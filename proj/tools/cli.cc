#include "cli.h"

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "threadcast/discussion_graph.h"
#include "threadcast/experiment.h"
#include "threadcast/featurize.h"
#include "threadcast/hash.h"
#include "threadcast/hate_label.h"
#include "threadcast/model.h"
#include "threadcast/parallel.h"
#include "threadcast/params.h"
#include "threadcast/rng.h"
#include "threadcast/struct_encode.h"
#include "threadcast/synth.h"
#include "threadcast/train.h"
#include "threadcast/tree_io.h"
#include "threadcast/trim.h"

#ifndef THREADCAST_VERSION
#define THREADCAST_VERSION "dev"
#endif

namespace threadcast::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kFailure = 1;
constexpr int kUsage = 2;
constexpr int kMismatch = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string file_hash(const std::string& path) { return hex64(xxhash64(read_file(path))); }

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

// What one invocation read and wrote, echoed into a manifest next to every
// output. No timestamps or host details, so a replay reproduces it byte for
// byte.
struct Record {
  std::vector<std::string> argv;
  json config = json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

json hashes(const std::vector<std::string>& paths) {
  json j = json::object();
  for (const auto& p : paths) j[p] = file_hash(p);
  return j;
}

void write_manifests(const Record& r) {
  json m;
  m["tool"] = "threadcast";
  m["version"] = THREADCAST_VERSION;
  m["argv"] = r.argv;
  m["config"] = r.config;
  m["seed"] = r.seed ? json(*r.seed) : json(nullptr);
  m["inputs"] = hashes(r.inputs);
  m["outputs"] = hashes(r.outputs);
  const std::string text = m.dump(2) + "\n";
  for (const auto& p : r.outputs) open_out(manifest_path(p)) << text;
}

std::vector<DiscussionTree> read_plain_trees(const std::string& path) {
  auto in = open_in(path);
  return strip_labels(read_trees_jsonl(in));
}

FeatureTable read_features(const std::string& path) {
  auto in = open_in(path);
  FeatureTable t = FeatureTable::load(in);
  if (t.size() == 0) throw std::runtime_error(path + ": no feature rows");
  return t;
}

Lexicon read_lexicon(const std::string& path) {
  auto in = open_in(path);
  return load_lexicon(in);
}

SplitFractions parse_fractions(const std::string& text) {
  SplitFractions f;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> f.train >> c1 >> f.val >> c2 >> f.test) || c1 != ',' || c2 != ',' || !in.eof()) {
    throw std::invalid_argument("fractions must look like 0.7,0.1,0.2");
  }
  f.check();
  return f;
}

// ---- options ----------------------------------------------------------------

struct Options {
  std::string in, out, trees, features, lexicon, report, config, weights = "equal", data, model = "graphormer",
                                                              preset = "desk", checkpoint, split = "test", name, tsv,
                                                              history, spec, score_transform = "none",
                                                              fractions = "0.7,0.1,0.2";
  bool strict = false, hashed = false;
  std::size_t dim = 64;
  std::optional<std::uint64_t> seed;
  std::optional<int> precision;
  int max_depth = 4, max_spd = 16, max_degree = 64;
  std::size_t min_desc = 2;
  std::vector<std::string> inputs;
};

// ---- stages -----------------------------------------------------------------

void cmd_ingest(const Options& o, Record& r, std::ostream& out, std::ostream& err) {
  auto in = open_in(o.in);
  const ParseResult parsed = parse_records(in, o.strict);
  for (const auto& d : parsed.diagnostics) err << o.in << ":" << d.line << ": " << d.message << "\n";
  const BuildResult built = build_trees(parsed.records);
  for (const auto& m : built.report.messages) err << m << "\n";
  {
    auto f = open_out(o.out);
    write_trees_jsonl(f, built.trees);
  }
  const IngestReport& rep = built.report;
  json summary = {{"records", rep.records},
                  {"trees", rep.trees},
                  {"nodes", rep.nodes},
                  {"orphans_dropped", rep.orphans_dropped},
                  {"trees_rejected", rep.trees_rejected},
                  {"malformed_lines", parsed.diagnostics.size()}};
  r.inputs = {o.in};
  r.outputs = {o.out};
  r.config = {{"strict", o.strict}};
  if (!o.report.empty()) {
    open_out(o.report) << summary.dump(2) << "\n";
    r.outputs.push_back(o.report);
  }
  out << "ingested " << rep.trees << " trees, " << rep.nodes << " nodes (" << rep.orphans_dropped
      << " orphans dropped)\n";
}

void cmd_synth(const Options& o, Record& r, std::ostream& out) {
  json cfg = read_json(o.config);
  const std::string trees_path = (fs::path(o.out) / "trees.jsonl").string();
  r.inputs = {o.config};
  if (cfg.contains("longrange")) {
    LongRangeConfig c = LongRangeConfig::from_json(cfg["longrange"]);
    if (o.seed) c.seed = *o.seed;
    c.check();
    const LongRangeFixture fx = generate_longrange_fixture(c);
    {
      auto f = open_out(trees_path);
      write_trees_jsonl(f, fx.trees);
    }
    const std::string planted_path = (fs::path(o.out) / "planted.tsv").string();
    {
      auto f = open_out(planted_path);
      f << "tree_id\tplanted\n";
      for (std::size_t i = 0; i < fx.trees.size(); ++i) f << fx.trees[i].id() << "\t" << int(fx.planted[i]) << "\n";
    }
    r.config = {{"longrange", c.to_json()}};
    r.seed = c.seed;
    r.outputs = {trees_path, planted_path};
    out << "generated " << fx.trees.size() << " long-range trees\n";
    return;
  }
  std::vector<SynthConfig> communities;
  if (cfg.contains("communities")) {
    for (const auto& c : cfg["communities"]) communities.push_back(SynthConfig::from_json(c));
  } else {
    communities.push_back(SynthConfig::from_json(cfg));
  }
  std::vector<DiscussionTree> all;
  json echo = json::array();
  for (std::size_t i = 0; i < communities.size(); ++i) {
    SynthConfig& c = communities[i];
    if (o.seed) c.seed = derive_seed(*o.seed, i);
    c.check();
    auto part = generate(c);
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    echo.push_back(c.to_json());
  }
  {
    auto f = open_out(trees_path);
    write_trees_jsonl(f, all);
  }
  r.config = {{"communities", echo}};
  r.seed = o.seed ? *o.seed : communities.front().seed;
  r.outputs = {trees_path};
  out << "generated " << all.size() << " trees\n";
}

void cmd_featurize(const Options& o, Record& r, std::ostream& out) {
  if (o.hashed == !o.features.empty()) throw std::invalid_argument("featurize: give exactly one of --hashed or --features");
  const auto trees = read_plain_trees(o.trees);
  r.inputs = {o.trees};
  std::unique_ptr<FeatureProvider> provider;
  if (o.hashed) {
    if (o.lexicon.empty()) throw std::invalid_argument("featurize: --hashed needs --lexicon");
    provider = std::make_unique<HashedFeatureProvider>(o.dim, read_lexicon(o.lexicon));
    r.inputs.push_back(o.lexicon);
    r.config = {{"mode", "hashed"}, {"dim", o.dim}};
  } else {
    FeatureTable table = read_features(o.features);
    const std::size_t d = table.dim();
    provider = std::make_unique<FileFeatureProvider>(d, std::move(table));
    r.inputs.push_back(o.features);
    r.config = {{"mode", "file"}, {"dim", d}};
  }
  std::size_t rows = 0;
  {
    auto f = open_out(o.out);
    for (const auto& t : trees) {
      for (const auto& n : t.nodes) {
        write_feature_line(f, n.id, provider->features(n));
        ++rows;
      }
    }
  }
  r.outputs = {o.out};
  out << "featurized " << rows << " comments\n";
}

void cmd_label(const Options& o, Record& r, std::ostream& out) {
  auto trees = read_plain_trees(o.trees);
  r.inputs = {o.trees};
  if (!o.features.empty()) {
    FeatureTable table = read_features(o.features);
    const std::size_t d = table.dim();
    attach_hate_raw(trees, FileFeatureProvider(d, std::move(table)));
    r.inputs.push_back(o.features);
  }
  const LabelWeights w = LabelWeights::parse(o.weights);
  const LabeledDataset labeled = label_dataset(trees, w);
  {
    auto f = open_out(o.out);
    write_trees_jsonl(f, labeled.trees);
  }
  r.outputs = {o.out};
  r.config = {{"weights", o.weights}, {"context", w.context}, {"reaction", w.reaction}, {"influence", w.influence}};
  if (!o.report.empty()) {
    open_out(o.report) << labeled.distribution.to_tsv();
    r.outputs.push_back(o.report);
  }
  out << labeled.distribution.to_tsv();
}

void cmd_trim(const Options& o, Record& r, std::ostream& out) {
  auto in = open_in(o.in);
  const auto trees = read_trees_jsonl(in);
  TrimConfig cfg;
  cfg.max_depth = o.max_depth;
  cfg.min_descendants = o.min_desc;
  cfg.check();
  const TrimResult res = trim_dataset(trees, cfg);
  {
    auto f = open_out(o.out);
    write_trees_jsonl(f, res.trees);
  }
  r.inputs = {o.in};
  r.outputs = {o.out};
  r.config = {{"max_depth", cfg.max_depth}, {"min_desc", cfg.min_descendants}, {"min_nodes_after", cfg.min_nodes_after}};
  if (!o.report.empty()) {
    open_out(o.report) << res.report.to_tsv();
    r.outputs.push_back(o.report);
  }
  out << res.report.to_tsv();
}

void cmd_encode(const Options& o, Record& r, std::ostream& out) {
  auto in = open_in(o.in);
  const auto trees = read_trees_jsonl(in);
  FeatureTable table = read_features(o.features);
  const std::size_t d = table.dim();
  const FileFeatureProvider provider(d, std::move(table));
  EncodeConfig enc;
  enc.max_spd = o.max_spd;
  enc.max_degree = o.max_degree;
  enc.score_transform = parse_score_transform(o.score_transform);
  const SplitFractions fractions = parse_fractions(o.fractions);
  EncodedDataset data;
  data.feature_dim = d + 1;
  data.max_spd = enc.max_spd;
  data.max_degree = enc.max_degree;
  data.seed = o.seed.value_or(0);
  data.graphs.resize(trees.size());
  parallel_for(trees.size(), [&](std::size_t i) {
    if (trees[i].labels.size() != trees[i].tree.size()) {
      throw std::invalid_argument("encode: tree " + trees[i].tree.id() + " is not labeled (run label first)");
    }
    data.graphs[i] = encode_graph(trees[i], provider, enc);
  });
  assign_splits(data.graphs, fractions, data.seed);
  {
    auto f = open_out(o.out);
    save_dataset(f, data);
  }
  r.inputs = {o.in, o.features};
  r.outputs = {o.out};
  r.seed = data.seed;
  r.config = {{"max_spd", enc.max_spd},
              {"max_degree", enc.max_degree},
              {"score_transform", score_transform_name(enc.score_transform)},
              {"fractions", {fractions.train, fractions.val, fractions.test}},
              {"feature_dim", data.feature_dim}};
  std::size_t nodes = 0;
  for (const auto& g : data.graphs) nodes += g.num_nodes;
  out << "encoded " << data.graphs.size() << " graphs, " << nodes << " nodes, feature_dim " << data.feature_dim << "\n";
}

EncodedDataset read_dataset(const std::string& path) {
  auto in = open_in(path);
  return load_dataset(in);
}

template <typename T>
TrainResult train_and_save(const ModelConfig& mc, const TrainConfig& tc, const EncodedDataset& data,
                           const std::string& ckpt_path, std::ostream* history) {
  auto model = make_model<T>(mc);
  model->initialize(derive_seed(tc.seed, 1));
  const TrainResult res = train(*model, data.graphs, tc, [&](const EpochRecord& e) {
    if (history) *history << e.to_json().dump() << "\n";
  });
  const json meta = {{"model", mc.to_json()}, {"train", tc.to_json()}, {"precision", tc.precision}};
  auto f = open_out(ckpt_path);
  save_checkpoint(f, model->params(), meta.dump());
  return res;
}

void cmd_train(const Options& o, Record& r, std::ostream& out) {
  const EncodedDataset data = read_dataset(o.data);
  r.inputs = {o.data};
  json overrides = json::object();
  json train_json = json::object();
  if (!o.config.empty()) {
    const json cfg = read_json(o.config);
    overrides = cfg.value("model", json::object());
    train_json = cfg.value("train", json::object());
    r.inputs.push_back(o.config);
  }
  const ModelKind kind = parse_model_kind(o.model);
  json mj = ModelConfig::from_preset(o.preset, kind).to_json();
  for (auto it = overrides.begin(); it != overrides.end(); ++it) mj[it.key()] = it.value();
  mj["model"] = model_kind_name(kind);
  mj["input_dim"] = data.feature_dim;
  mj["max_spd"] = data.max_spd;
  mj["max_degree"] = data.max_degree;
  const ModelConfig mc = ModelConfig::from_json(mj);
  mc.check();
  TrainConfig tc = TrainConfig::from_json(train_json);
  if (o.seed) tc.seed = *o.seed;
  if (o.precision) tc.precision = *o.precision;
  tc.check();

  std::optional<std::ofstream> hist;
  if (!o.history.empty()) hist.emplace(open_out(o.history));
  const TrainResult res = tc.precision == 64
                              ? train_and_save<double>(mc, tc, data, o.out, hist ? &*hist : nullptr)
                              : train_and_save<float>(mc, tc, data, o.out, hist ? &*hist : nullptr);
  if (hist) hist->close();
  r.outputs = {o.out};
  if (!o.history.empty()) r.outputs.push_back(o.history);
  r.seed = tc.seed;
  r.config = {{"model", mc.to_json()}, {"train", tc.to_json()}};
  out << "trained " << model_kind_name(kind) << " for " << res.steps << " steps; best epoch " << res.best_epoch
      << ", final train loss " << (res.history.empty() ? 0.0 : res.history.back().train_loss) << "\n";
}

template <typename T>
EvalReport eval_with(const Checkpoint& ck, const ModelConfig& mc, const EncodedDataset& data, SplitSel which) {
  auto model = make_model<T>(mc);
  model->params().assign_from(ck.params);
  return evaluate(*model, data.graphs, which);
}

void cmd_eval(const Options& o, Record& r, std::ostream& out) {
  Checkpoint ck;
  {
    auto in = open_in(o.checkpoint);
    ck = load_checkpoint(in);
  }
  const json meta = json::parse(ck.meta);
  const ModelConfig mc = ModelConfig::from_json(meta.at("model"));
  const int precision = meta.value("precision", 32);
  const EncodedDataset data = read_dataset(o.data);
  const SplitSel which = parse_split_sel(o.split);
  EvalReport rep = precision == 64 ? eval_with<double>(ck, mc, data, which) : eval_with<float>(ck, mc, data, which);
  rep.name = o.name.empty() ? (mc.kind == ModelKind::kGat ? "GAT" : "Graphormer") : o.name;
  rep.split = o.split;
  open_out(o.out) << rep.to_json().dump(2) << "\n";
  r.inputs = {o.checkpoint, o.data};
  r.outputs = {o.out};
  r.config = {{"split", o.split}, {"name", rep.name}};
  const std::string table = eval_table_tsv({rep});
  if (!o.tsv.empty()) {
    open_out(o.tsv) << table;
    r.outputs.push_back(o.tsv);
  }
  out << table;
}

void cmd_experiment(const Options& o, Record& r, std::ostream& out, std::ostream& err) {
  const ExperimentSpec spec = ExperimentSpec::from_json(read_json(o.spec));
  r.inputs = {o.spec};
  if (!spec.trees_path.empty()) r.inputs.push_back(spec.trees_path);
  if (!spec.lexicon_path.empty()) r.inputs.push_back(spec.lexicon_path);
  const ExperimentOutput res =
      run_experiment(spec, experiment_trees(spec), [&](const std::string& msg) { err << msg << "\n"; });
  open_out(o.out) << res.result.dump(2) << "\n";
  r.outputs = {o.out};
  if (!o.tsv.empty()) {
    open_out(o.tsv) << res.table_tsv;
    r.outputs.push_back(o.tsv);
  }
  r.config = spec.to_json();
  out << res.table_tsv;
}

bool looks_numeric(const std::string& s) {
  if (s.empty() || s == "-") return s == "-";
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end && *end == '\0';
}

// Aligned plain-text rendering of a TSV table: first column left-aligned,
// numeric cells right-aligned.
std::string render_table(const std::string& tsv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(tsv);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      cells.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    rows.push_back(std::move(cells));
  }
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream o;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const std::string& cell = rows[r][c];
      const std::string pad(width[c] - cell.size(), ' ');
      if (c > 0) line += "  ";
      line += (c > 0 && looks_numeric(cell)) ? pad + cell : cell + pad;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    o << line << "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c > 0 ? 2 : 0);
      o << std::string(total, '-') << "\n";
    }
  }
  return o.str();
}

void cmd_report(const Options& o, Record& r, std::ostream& out) {
  std::ostringstream text;
  for (std::size_t i = 0; i < o.inputs.size(); ++i) {
    if (i > 0) text << "\n";
    text << fs::path(o.inputs[i]).filename().string() << "\n\n" << render_table(read_file(o.inputs[i]));
  }
  r.inputs = o.inputs;
  if (o.out.empty()) {
    out << text.str();
    return;
  }
  open_out(o.out) << text.str();
  r.outputs = {o.out};
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_replay(const std::vector<std::string>& manifests, std::ostream& out, std::ostream& err) {
  int status = 0;
  for (const auto& path : manifests) {
    const json m = read_json(path);
    for (const auto& [input, hash] : m.at("inputs").items()) {
      if (!fs::exists(input)) throw std::runtime_error(path + ": input " + input + " is missing");
      if (file_hash(input) != hash.get<std::string>()) {
        throw std::runtime_error(path + ": input " + input + " changed since the manifest was written");
      }
    }
    const auto argv = m.at("argv").get<std::vector<std::string>>();
    std::ostringstream quiet;
    const int code = dispatch(argv, quiet, err);
    if (code != 0) return code;
    bool same = true;
    for (const auto& [output, hash] : m.at("outputs").items()) {
      const std::string now = file_hash(output);
      if (now != hash.get<std::string>()) {
        err << "replay mismatch: " << output << " hashes to " << now << ", manifest says " << hash.get<std::string>()
            << "\n";
        same = false;
      }
    }
    out << (same ? "identical: " : "DIFFERENT: ") << path << "\n";
    if (!same) status = kMismatch;
  }
  return status;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  std::vector<std::string> manifests;
  CLI::App app{"Forecast hate intensity in discussion trees from conversational context.", "threadcast"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  app.footer("Environment: THREADCAST_THREADS sets the default OpenMP thread count.");

  auto* ingest = app.add_subcommand("ingest", "Build discussion trees from line-delimited post/comment records");
  ingest->add_option("--in", o.in, "Raw records (JSONL)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", o.out, "Canonical trees (JSONL)")->required();
  ingest->add_option("--report", o.report, "Ingest summary (JSON)");
  ingest->add_flag("--strict", o.strict, "Fail on the first malformed record");

  auto* synth = app.add_subcommand("synth", "Generate synthetic discussion trees");
  synth->add_option("--config", o.config, "Generator config (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--seed", o.seed, "Override the config seed");

  auto* feat = app.add_subcommand("featurize", "Per-comment text embeddings and hate scores");
  feat->add_option("--trees", o.trees, "Canonical trees (JSONL)")->required()->check(CLI::ExistingFile);
  feat->add_option("--out", o.out, "Feature rows (JSONL)")->required();
  feat->add_flag("--hashed", o.hashed, "Hashed bag of words");
  feat->add_option("--dim", o.dim, "Hashed embedding width")->capture_default_str();
  feat->add_option("--lexicon", o.lexicon, "Hate lexicon, one token per line")->check(CLI::ExistingFile);
  feat->add_option("--features", o.features, "Precomputed features (JSONL)")->check(CLI::ExistingFile);

  auto* label = app.add_subcommand("label", "Recursive hate-intensity labels");
  label->add_option("--trees", o.trees, "Canonical trees (JSONL)")->required()->check(CLI::ExistingFile);
  label->add_option("--features", o.features, "Feature rows supplying missing hate_raw")->check(CLI::ExistingFile);
  label->add_option("--weights", o.weights, "equal|influence|reaction|context|custom(wc,wr,wi)")->capture_default_str();
  label->add_option("--out", o.out, "Labeled trees (JSONL)")->required();
  label->add_option("--report", o.report, "Class distribution (TSV)");

  auto* trim = app.add_subcommand("trim", "Depth and descendant filtering");
  trim->add_option("--in", o.in, "Labeled trees (JSONL)")->required()->check(CLI::ExistingFile);
  trim->add_option("--out", o.out, "Trimmed trees (JSONL)")->required();
  trim->add_option("--report", o.report, "Before/after counts (TSV)");
  trim->add_option("--max-depth", o.max_depth, "Deepest kept comment")->capture_default_str();
  trim->add_option("--min-desc", o.min_desc, "Minimum full-tree descendants")->capture_default_str();

  auto* enc = app.add_subcommand("encode", "Structural encoding and splits");
  enc->add_option("--in", o.in, "Trimmed labeled trees (JSONL)")->required()->check(CLI::ExistingFile);
  enc->add_option("--features", o.features, "Feature rows (JSONL)")->required()->check(CLI::ExistingFile);
  enc->add_option("--out", o.out, "Encoded dataset (binary)")->required();
  enc->add_option("--seed", o.seed, "Split seed");
  enc->add_option("--max-spd", o.max_spd, "Distance clamp")->capture_default_str();
  enc->add_option("--max-degree", o.max_degree, "Degree clamp")->capture_default_str();
  enc->add_option("--score-transform", o.score_transform, "none|log1p_signed")->capture_default_str();
  enc->add_option("--fractions", o.fractions, "train,val,test")->capture_default_str();

  auto* tr = app.add_subcommand("train", "Train a node regressor");
  tr->add_option("--data", o.data, "Encoded dataset")->required()->check(CLI::ExistingFile);
  tr->add_option("--model", o.model, "graphormer|gat")->capture_default_str();
  tr->add_option("--preset", o.preset, "desk|base")->capture_default_str();
  tr->add_option("--config", o.config, "JSON with optional \"model\" and \"train\" objects")->check(CLI::ExistingFile);
  tr->add_option("--seed", o.seed, "Training seed");
  tr->add_option("--precision", o.precision, "32|64");
  tr->add_option("--out", o.out, "Checkpoint")->required();
  tr->add_option("--history", o.history, "Per-epoch history (JSONL)");

  auto* ev = app.add_subcommand("eval", "Overall and per-class L2 of a checkpoint");
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", o.data, "Encoded dataset")->required()->check(CLI::ExistingFile);
  ev->add_option("--split", o.split, "train|val|test|all")->capture_default_str();
  ev->add_option("--name", o.name, "Row name in the table");
  ev->add_option("--out", o.out, "EvalReport (JSON)")->required();
  ev->add_option("--tsv", o.tsv, "Table row (TSV)");

  auto* ex = app.add_subcommand("experiment", "Run a comparison harness");
  ex->add_option("--spec", o.spec, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  ex->add_option("--out", o.out, "Result (JSON)")->required();
  ex->add_option("--tsv", o.tsv, "Result table (TSV)");

  auto* rep = app.add_subcommand("report", "Render TSV tables as aligned text");
  rep->add_option("inputs", o.inputs, "TSV files")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", o.out, "Text file; stdout when omitted");

  auto* replay = app.add_subcommand("replay", "Re-run invocations from manifests and compare outputs");
  replay->add_option("manifests", manifests, "Manifest files, run in order")->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "threadcast: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  Record r;
  r.argv = args;
  try {
    if (name == "replay") return cmd_replay(manifests, out, err);
    if (name == "ingest") cmd_ingest(o, r, out, err);
    if (name == "synth") cmd_synth(o, r, out);
    if (name == "featurize") cmd_featurize(o, r, out);
    if (name == "label") cmd_label(o, r, out);
    if (name == "trim") cmd_trim(o, r, out);
    if (name == "encode") cmd_encode(o, r, out);
    if (name == "train") cmd_train(o, r, out);
    if (name == "eval") cmd_eval(o, r, out);
    if (name == "experiment") cmd_experiment(o, r, out, err);
    if (name == "report") cmd_report(o, r, out);
    if (!r.outputs.empty()) write_manifests(r);
  } catch (const std::exception& e) {
    err << "threadcast " << name << ": " << e.what() << "\n";
    return kFailure;
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> rest = args;
  if (rest.size() >= 2 && rest[0] == "--threads") {
    const int n = std::atoi(rest[1].c_str());
    if (n <= 0) {
      err << "threadcast: --threads needs a positive integer\n";
      return kUsage;
    }
    omp_set_num_threads(n);
    rest.erase(rest.begin(), rest.begin() + 2);
  }
  return dispatch(rest, out, err);
}

}  // namespace threadcast::cli

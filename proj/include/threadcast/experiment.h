#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "threadcast/model.h"
#include "threadcast/pipeline.h"
#include "threadcast/synth.h"
#include "threadcast/train.h"

namespace threadcast {

enum class ExperimentKind { kContextAb, kCommunity, kSensitivity };
const char* experiment_kind_name(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

// Everything an experiment needs. Data comes from exactly one source: a
// long-range fixture, one or more synthetic communities, or trees already on
// disk (passed in by the caller).
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kContextAb;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string preset = "desk";
  nlohmann::json model_overrides = nlohmann::json::object();  // applied to both architectures
  TrainConfig train;
  PipelineConfig pipeline;
  std::optional<LongRangeConfig> longrange;
  std::vector<SynthConfig> communities;
  std::string trees_path;    // canonical tree JSONL, when neither generator is set
  std::string lexicon_path;  // hashed featurizer lexicon; the synthetic lexicon when empty

  nlohmann::json to_json() const;
  static ExperimentSpec from_json(const nlohmann::json& j);
};

ModelConfig experiment_model_config(const ExperimentSpec& spec, ModelKind kind, std::size_t input_dim,
                                    const EncodedDataset& data);

struct ContextAbResult {
  std::vector<std::uint64_t> seeds;
  std::vector<EvalReport> graphormer;  // per seed, test split
  std::vector<EvalReport> gat;
  EvalReport mean_graphormer;
  EvalReport mean_gat;

  std::string to_tsv() const;  // Model / All / 0..4
};

struct CommunityRow {
  std::string community;  // "All" for the pooled model on everything
  double train = 0.0;     // community-specific model, train split
  double test = 0.0;      // community-specific model, test split
  double pooled_test = 0.0;
};

struct CommunityResult {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<CommunityRow>> per_seed;
  std::vector<CommunityRow> mean;

  std::string to_tsv() const;  // Target Communities / Train / Test / Pooled Test
};

struct SensitivityRow {
  std::string name;  // Equal, Influence, Reaction, Context
  LabelWeights weights;
  double train = 0.0;
  double test = 0.0;
  std::array<std::size_t, kNumClasses> class_counts{};  // trimmed nodes
};

struct SensitivityResult {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<SensitivityRow>> per_seed;
  std::vector<SensitivityRow> mean;
  // Full-tree labels per preset, in the order of sensitivity_presets().
  std::vector<std::vector<std::vector<HateLabel>>> labels;

  std::string to_tsv() const;  // Labeling Weight Variant / Train L2 / Test L2
};

using ExperimentLog = std::function<void(const std::string&)>;

// Trees for the spec's data source. `trees` is used only for trees_path specs.
std::vector<DiscussionTree> experiment_trees(const ExperimentSpec& spec,
                                             const std::vector<DiscussionTree>* trees = nullptr);

ContextAbResult run_context_ab(const ExperimentSpec& spec, std::vector<DiscussionTree> trees,
                               const ExperimentLog& log = {});
CommunityResult run_community(const ExperimentSpec& spec, std::vector<DiscussionTree> trees,
                              const ExperimentLog& log = {});
SensitivityResult run_sensitivity(const ExperimentSpec& spec, std::vector<DiscussionTree> trees,
                                  const ExperimentLog& log = {});

// Dispatches on spec.kind; returns the result as JSON plus its TSV table.
struct ExperimentOutput {
  nlohmann::json result;
  std::string table_tsv;
};
ExperimentOutput run_experiment(const ExperimentSpec& spec, std::vector<DiscussionTree> trees,
                                const ExperimentLog& log = {});

}  // namespace threadcast

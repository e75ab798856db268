#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "threadcast/featurize.h"
#include "threadcast/hate_label.h"
#include "threadcast/struct_encode.h"
#include "threadcast/trim.h"

namespace threadcast {

// In-memory featurize -> label -> trim -> encode -> split chain, used by the
// experiment harnesses. The CLI runs the same stages through files.
struct PipelineConfig {
  std::size_t d_text = 64;
  LabelWeights weights;
  TrimConfig trim;
  EncodeConfig encode;
  SplitFractions fractions;
  std::uint64_t split_seed = 0;

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

// Fills missing hate_raw values from the provider; present values are kept.
void attach_hate_raw(std::vector<DiscussionTree>& trees, const FeatureProvider& provider);

struct PreparedData {
  LabeledDataset labeled;  // full trees
  TrimResult trimmed;
  EncodedDataset encoded;
};

PreparedData prepare_dataset(std::vector<DiscussionTree> trees, const FeatureProvider& provider,
                             const PipelineConfig& cfg);

// Graphs of one community, in dataset order.
std::vector<EncodedGraph> select_community(const std::vector<EncodedGraph>& graphs, const std::string& community);

}  // namespace threadcast

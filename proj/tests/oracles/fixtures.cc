#include "fixtures.h"

#include <algorithm>

#include "threadcast/pipeline.h"
#include "threadcast/synth.h"

namespace oracle {

using namespace threadcast;

EncodedDataset overfit_fixture(std::uint64_t seed) {
  SynthConfig sc;
  sc.seed = seed;
  sc.num_trees = 32;
  sc.max_nodes = 40;
  sc.branching = 2.0;
  const Lexicon lexicon(synth_lexicon().begin(), synth_lexicon().end());
  HashedFeatureProvider provider(64, lexicon);
  PipelineConfig pc;
  pc.fractions = {1.0, 0.0, 0.0};
  EncodedDataset data = prepare_dataset(generate(sc), provider, pc).encoded;
  if (data.graphs.size() < 8) throw std::runtime_error("overfit fixture: too few graphs survive trimming");
  data.graphs.resize(8);
  return data;
}

OverfitRun run_overfit(std::uint64_t seed) {
  const EncodedDataset data = overfit_fixture(seed);
  ModelConfig mc = ModelConfig::from_preset("desk", ModelKind::kGraphormer);
  mc.input_dim = data.feature_dim;
  mc.max_spd = data.max_spd;
  mc.max_degree = data.max_degree;
  auto model = make_model<float>(mc);
  model->initialize(seed);
  TrainConfig tc;
  tc.seed = seed;
  tc.batch_size = 8;
  tc.max_steps = 500;
  tc.select_best = false;
  const TrainResult r = train(*model, data.graphs, tc);
  return {masked_l2(predict_all(*model, data.graphs), data.graphs, SplitSel::kTrain), r.steps, r.step_losses};
}

ModelInput permuted(const ModelInput& in, const std::vector<std::size_t>& perm) {
  ModelInput out = in;
  const std::size_t n = in.num_nodes, f = in.feature_dim;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t o = perm[k];
    std::copy_n(in.features.begin() + o * f, f, out.features.begin() + k * f);
    out.in_degree[k] = in.in_degree[o];
    out.out_degree[k] = in.out_degree[o];
    out.labels[k] = in.labels[o];
    out.split[k] = in.split[o];
    for (std::size_t l = 0; l < n; ++l) out.spd[k * n + l] = in.spd[o * n + perm[l]];
  }
  return out;
}

}  // namespace oracle

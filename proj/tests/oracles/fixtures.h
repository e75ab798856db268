#pragma once

// Small synthetic datasets shared by the unit and acceptance tests.

#include <cstdint>
#include <vector>

#include "threadcast/model.h"
#include "threadcast/struct_encode.h"
#include "threadcast/train.h"

namespace oracle {

// The first 8 graphs that survive trimming from a bushy synthetic sample,
// every node in the train split.
threadcast::EncodedDataset overfit_fixture(std::uint64_t seed);

struct OverfitRun {
  double train_mse = 0.0;
  std::size_t steps = 0;
  std::vector<double> step_losses;
};

// Desk-preset Graphormer on overfit_fixture(seed), default optimiser
// settings, 500 steps of one full batch.
OverfitRun run_overfit(std::uint64_t seed);

// Node k of the result is node perm[k] of `in`. `perm` covers padded slots too.
threadcast::ModelInput permuted(const threadcast::ModelInput& in, const std::vector<std::size_t>& perm);

}  // namespace oracle

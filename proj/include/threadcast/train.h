#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "threadcast/model.h"
#include "threadcast/struct_encode.h"

namespace threadcast {

struct TrainConfig {
  double peak_lr = 2e-4;
  std::optional<std::size_t> warmup_steps;  // default: 6% of total steps
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  int precision = 32;
  std::size_t max_steps = 0;  // when nonzero, overrides epochs x batches
  bool select_best = true;    // restore the lowest-validation-loss epoch

  void check() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct LrSchedule {
  double peak_lr = 2e-4;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 1;
};

// Schedule for `batches_per_epoch`, honouring epochs, max_steps and warmup.
LrSchedule make_schedule(const TrainConfig& cfg, std::size_t batches_per_epoch);

// 0 -> peak over warmup_steps, then linear decay to 0 at total_steps.
double lr_at(std::size_t step, const LrSchedule& schedule);

struct AdamWState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t t = 0;
};

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One decoupled-decay Adam update. grads[i] aligns with params[i]. Throws
// TrainingDiverged naming the parameter on a non-finite gradient, before any
// parameter is touched.
template <typename T>
void adamw_step(ParameterSet<T>& params, const std::vector<std::vector<T>>& grads, AdamWState& state, double lr,
                const AdamWHyper& hyper);

enum class SplitSel { kTrain, kVal, kTest, kAll };
SplitSel parse_split_sel(const std::string& name);
bool split_selected(Split s, SplitSel which);

// Mean squared error over entries whose split matches `which`. Throws
// std::invalid_argument when no entry matches.
double masked_l2(std::span<const double> predictions, std::span<const int> labels, std::span<const Split> split,
                 SplitSel which);

// Same reduction over several graphs at once.
double masked_l2(const std::vector<std::vector<double>>& predictions, const std::vector<EncodedGraph>& graphs,
                 SplitSel which);

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;  // optimizer steps taken so far
  double lr = 0.0;       // at the last step of the epoch
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when the validation split is empty
  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::vector<double> step_losses;
  std::size_t steps = 0;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
};

// Deterministic at fixed seed, precision and data regardless of thread
// count. Leaves the model at the selected checkpoint. On divergence the model
// is restored to the last good epoch and TrainingDiverged is thrown.
template <typename T>
TrainResult train(NodeRegressor<T>& model, const std::vector<EncodedGraph>& graphs, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// Per-node predictions for every graph (real nodes only).
template <typename T>
std::vector<std::vector<double>> predict_all(const NodeRegressor<T>& model, const std::vector<EncodedGraph>& graphs);

inline constexpr std::size_t kClasses = 5;

struct EvalReport {
  std::string name;
  std::string split = "test";
  double overall_l2 = 0.0;
  std::array<double, kClasses> per_class_l2{};  // NaN for an absent class
  std::array<std::size_t, kClasses> counts{};
  nlohmann::json config;

  std::size_t total() const;
  nlohmann::json to_json() const;
};

// Overall and per-true-class MSE restricted to one split.
EvalReport evaluate_predictions(const std::vector<std::vector<double>>& predictions,
                                const std::vector<EncodedGraph>& graphs, SplitSel which = SplitSel::kTest);

template <typename T>
EvalReport evaluate(const NodeRegressor<T>& model, const std::vector<EncodedGraph>& graphs,
                    SplitSel which = SplitSel::kTest);

// "Model\tAll\t0\t1\t2\t3\t4", one row per report.
std::string eval_table_tsv(const std::vector<EvalReport>& reports);

}  // namespace threadcast

#include "threadcast/train.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "threadcast/parallel.h"
#include "threadcast/rng.h"

namespace threadcast {

using nlohmann::json;

void TrainConfig::check() const {
  if (!(peak_lr >= 0.0)) throw std::invalid_argument("train: peak_lr must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
  if (epochs == 0 && max_steps == 0) throw std::invalid_argument("train: epochs must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("train: betas must lie in [0, 1)");
  }
  if (!(eps > 0.0) || !(weight_decay >= 0.0)) throw std::invalid_argument("train: eps > 0 and weight_decay >= 0");
  if (precision != 32 && precision != 64) throw std::invalid_argument("train: precision must be 32 or 64");
}

json TrainConfig::to_json() const {
  json j{{"peak_lr", peak_lr},
         {"epochs", epochs},
         {"batch_size", batch_size},
         {"weight_decay", weight_decay},
         {"betas", {beta1, beta2}},
         {"eps", eps},
         {"seed", seed},
         {"precision", precision},
         {"max_steps", max_steps},
         {"select_best", select_best}};
  j["warmup_steps"] = warmup_steps ? json(*warmup_steps) : json(nullptr);
  return j;
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.peak_lr = j.value("peak_lr", c.peak_lr);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  if (j.contains("betas")) {
    c.beta1 = j["betas"].at(0).get<double>();
    c.beta2 = j["betas"].at(1).get<double>();
  }
  c.eps = j.value("eps", c.eps);
  c.seed = j.value("seed", c.seed);
  c.precision = j.value("precision", c.precision);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.select_best = j.value("select_best", c.select_best);
  if (j.contains("warmup_steps") && !j["warmup_steps"].is_null()) c.warmup_steps = j["warmup_steps"].get<std::size_t>();
  c.check();
  return c;
}

LrSchedule make_schedule(const TrainConfig& cfg, std::size_t batches_per_epoch) {
  LrSchedule s;
  s.peak_lr = cfg.peak_lr;
  s.total_steps = cfg.max_steps > 0 ? cfg.max_steps : cfg.epochs * batches_per_epoch;
  if (s.total_steps == 0) throw std::invalid_argument("train: no optimizer steps to take");
  s.warmup_steps = cfg.warmup_steps ? *cfg.warmup_steps
                                    : static_cast<std::size_t>(std::floor(0.06 * static_cast<double>(s.total_steps)));
  if (s.warmup_steps >= s.total_steps) {
    throw std::invalid_argument("train: warmup_steps (" + std::to_string(s.warmup_steps) + ") must be below total steps (" +
                                std::to_string(s.total_steps) + ")");
  }
  return s;
}

double lr_at(std::size_t step, const LrSchedule& s) {
  if (step > s.total_steps) throw std::out_of_range("lr_at: step beyond schedule");
  if (step < s.warmup_steps) return s.peak_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  return s.peak_lr * static_cast<double>(s.total_steps - step) / static_cast<double>(s.total_steps - s.warmup_steps);
}

template <typename T>
void adamw_step(ParameterSet<T>& params, const std::vector<std::vector<T>>& grads, AdamWState& state, double lr,
                const AdamWHyper& h) {
  if (grads.size() != params.size()) throw std::invalid_argument("adamw_step: gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].size()) {
      throw std::invalid_argument("adamw_step: gradient size mismatch for " + params.name(i));
    }
    for (std::size_t j = 0; j < grads[i].size(); ++j) {
      if (!std::isfinite(static_cast<double>(grads[i][j]))) {
        throw TrainingDiverged("non-finite gradient in " + params.name(i) + "[" + std::to_string(j) + "]");
      }
    }
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].size(), 0.0);
      state.v[i].assign(params[i].size(), 0.0);
    }
    state.t = 0;
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<T>& p = params[i].data;
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = static_cast<double>(grads[i][j]);
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g;
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g * g;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      const double x = static_cast<double>(p[j]);
      p[j] = static_cast<T>(x - lr * h.weight_decay * x - lr * mhat / (std::sqrt(vhat) + h.eps));
    }
  }
}

SplitSel parse_split_sel(const std::string& name) {
  if (name == "train") return SplitSel::kTrain;
  if (name == "val") return SplitSel::kVal;
  if (name == "test") return SplitSel::kTest;
  if (name == "all") return SplitSel::kAll;
  throw std::invalid_argument("unknown split '" + name + "' (train|val|test|all)");
}

bool split_selected(Split s, SplitSel which) {
  switch (which) {
    case SplitSel::kTrain: return s == Split::kTrain;
    case SplitSel::kVal: return s == Split::kVal;
    case SplitSel::kTest: return s == Split::kTest;
    case SplitSel::kAll: return true;
  }
  return false;
}

namespace {

const char* sel_name(SplitSel which) {
  switch (which) {
    case SplitSel::kTrain: return "train";
    case SplitSel::kVal: return "val";
    case SplitSel::kTest: return "test";
    case SplitSel::kAll: return "all";
  }
  return "?";
}

struct SqAccum {
  double sum = 0.0;
  std::size_t count = 0;
};

void accumulate(SqAccum& acc, std::span<const double> pred, std::span<const int> labels, std::span<const Split> split,
                SplitSel which) {
  if (pred.size() != labels.size() || pred.size() != split.size()) {
    throw std::invalid_argument("masked_l2: predictions, labels and split differ in length");
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!split_selected(split[i], which)) continue;
    const double d = pred[i] - static_cast<double>(labels[i]);
    acc.sum += d * d;
    ++acc.count;
  }
}

}  // namespace

double masked_l2(std::span<const double> predictions, std::span<const int> labels, std::span<const Split> split,
                 SplitSel which) {
  SqAccum acc;
  accumulate(acc, predictions, labels, split, which);
  if (acc.count == 0) throw std::invalid_argument(std::string("masked_l2: empty ") + sel_name(which) + " split");
  return acc.sum / static_cast<double>(acc.count);
}

double masked_l2(const std::vector<std::vector<double>>& predictions, const std::vector<EncodedGraph>& graphs,
                 SplitSel which) {
  if (predictions.size() != graphs.size()) throw std::invalid_argument("masked_l2: graph count mismatch");
  SqAccum acc;
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    accumulate(acc, predictions[g], graphs[g].labels, graphs[g].split, which);
  }
  if (acc.count == 0) throw std::invalid_argument(std::string("masked_l2: empty ") + sel_name(which) + " split");
  return acc.sum / static_cast<double>(acc.count);
}

json EpochRecord::to_json() const {
  json j{{"epoch", epoch}, {"step", step}, {"lr", lr}, {"train_loss", train_loss}};
  j["val_loss"] = std::isnan(val_loss) ? json(nullptr) : json(val_loss);
  return j;
}

namespace {

template <typename T>
using Grads = std::vector<std::vector<T>>;

template <typename T>
Grads<T> zero_grads(const ParameterSet<T>& params) {
  Grads<T> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) g[i].assign(params[i].size(), T(0));
  return g;
}

template <typename T>
Grads<T> snapshot(const ParameterSet<T>& params) {
  Grads<T> s(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) s[i] = params[i].data;
  return s;
}

template <typename T>
void restore(ParameterSet<T>& params, const Grads<T>& s) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i].data = s[i];
}

std::size_t count_split(const EncodedGraph& g, Split s) {
  return static_cast<std::size_t>(std::count(g.split.begin(), g.split.end(), s));
}

// Loss and parameter gradients of one padded graph; `weight` scales every
// selected node's squared error.
template <typename T>
double element_gradients(const NodeRegressor<T>& model, const ModelInput& input, T weight, std::uint64_t dropout_seed,
                         const std::unordered_map<const T*, std::size_t>& index, Grads<T>& out) {
  Tape<T> tape;
  ForwardOptions opts;
  opts.training = true;
  opts.dropout_seed = dropout_seed;
  Var<T> pred = model.forward(tape, input, opts);
  const std::size_t n = input.num_nodes;
  Tensor<T> target({n, 1});
  std::vector<T> weights(n, T(0));
  for (std::size_t i = 0; i < input.real_nodes; ++i) {
    target.data[i] = static_cast<T>(input.labels[i]);
    if (input.split[i] == Split::kTrain) weights[i] = weight;
  }
  Var<T> loss = squared_error(pred, tape.constant(std::move(target)), std::span<const T>(weights));
  tape.backward(loss);
  for (std::size_t id = 0; id < tape.size(); ++id) {
    const T* p = tape.borrowed(static_cast<int>(id));
    if (!p) continue;
    auto g = tape.grad(static_cast<int>(id));
    if (g.empty()) continue;
    std::vector<T>& dst = out[index.at(p)];
    for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j];
  }
  return static_cast<double>(loss.item());
}

// Sums per-graph gradients in batch order. Graphs run in waves of one per
// thread and each wave is folded into `total` in index order, so the result
// does not depend on the thread count.
template <typename T>
double batch_gradients(const NodeRegressor<T>& model, const Batch& batch, std::uint64_t step_seed,
                       const std::unordered_map<const T*, std::size_t>& index, Grads<T>& total) {
  std::size_t train_nodes = 0;
  for (const ModelInput& in : batch.graphs) {
    for (std::size_t i = 0; i < in.real_nodes; ++i) train_nodes += in.split[i] == Split::kTrain ? 1 : 0;
  }
  const T weight = T(1) / static_cast<T>(train_nodes);
  const std::size_t n = batch.graphs.size();
  const std::size_t wave = std::max<std::size_t>(1, std::min<std::size_t>(n, omp_get_max_threads()));
  std::vector<Grads<T>> buffers(wave);
  std::vector<double> losses(n, 0.0);
  double loss = 0.0;
  for (std::size_t start = 0; start < n; start += wave) {
    const std::size_t count = std::min(wave, n - start);
    std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(static, 1) if (count > 1)
    for (std::size_t k = 0; k < count; ++k) {
      try {
        Grads<T>& buf = buffers[k];
        if (buf.empty()) {
          buf = zero_grads(model.params());
        } else {
          for (auto& v : buf) std::fill(v.begin(), v.end(), T(0));
        }
        losses[start + k] = element_gradients(model, batch.graphs[start + k], weight,
                                               derive_seed(step_seed, start + k), index, buf);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
    for (std::size_t k = 0; k < count; ++k) {
      if (errors[k]) std::rethrow_exception(errors[k]);
      for (std::size_t i = 0; i < total.size(); ++i) {
        for (std::size_t j = 0; j < total[i].size(); ++j) total[i][j] += buffers[k][i][j];
      }
      loss += losses[start + k];
    }
  }
  return loss;
}

}  // namespace

template <typename T>
TrainResult train(NodeRegressor<T>& model, const std::vector<EncodedGraph>& graphs, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.check();
  std::vector<EncodedGraph> train_graphs;
  bool has_val = false;
  for (const EncodedGraph& g : graphs) {
    if (count_split(g, Split::kTrain) > 0) train_graphs.push_back(g);
    has_val = has_val || count_split(g, Split::kVal) > 0;
  }
  if (train_graphs.empty()) throw std::invalid_argument("train: no training nodes");

  const std::size_t batches_per_epoch = (train_graphs.size() + cfg.batch_size - 1) / cfg.batch_size;
  const LrSchedule schedule = make_schedule(cfg, batches_per_epoch);
  const AdamWHyper hyper{cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay};

  ParameterSet<T>& params = model.params();
  std::unordered_map<const T*, std::size_t> index;
  for (std::size_t i = 0; i < params.size(); ++i) index[params[i].data.data()] = i;

  AdamWState state;
  TrainResult result;
  result.best_val = std::numeric_limits<double>::infinity();
  Grads<T> last_good = snapshot(params);
  Grads<T> best = last_good;
  bool have_best = false;

  std::size_t step = 0;
  for (std::size_t epoch = 0; step < schedule.total_steps; ++epoch) {
    const std::vector<Batch> batches =
        make_batches(train_graphs, cfg.batch_size, derive_seed(cfg.seed, 0x5eed0000ULL + epoch), true);
    double weighted = 0.0;
    std::size_t nodes = 0;
    double lr = 0.0;
    for (const Batch& batch : batches) {
      if (step >= schedule.total_steps) break;
      lr = lr_at(step, schedule);
      Grads<T> grads = zero_grads(params);
      std::size_t batch_nodes = 0;
      for (const ModelInput& in : batch.graphs) {
        for (std::size_t i = 0; i < in.real_nodes; ++i) batch_nodes += in.split[i] == Split::kTrain ? 1 : 0;
      }
      const double loss = batch_gradients(model, batch, derive_seed(cfg.seed, 0xd409000000ULL + step), index, grads);
      try {
        if (!std::isfinite(loss)) {
          throw TrainingDiverged("loss became " + std::to_string(loss) + " at step " + std::to_string(step));
        }
        adamw_step(params, grads, state, lr, hyper);
      } catch (const TrainingDiverged& e) {
        restore(params, last_good);
        throw TrainingDiverged(std::string(e.what()) + "; parameters restored to the end of epoch " +
                               std::to_string(epoch));
      }
      result.step_losses.push_back(loss);
      weighted += loss * static_cast<double>(batch_nodes);
      nodes += batch_nodes;
      ++step;
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.step = step;
    rec.lr = lr;
    rec.train_loss = nodes ? weighted / static_cast<double>(nodes) : std::numeric_limits<double>::quiet_NaN();
    rec.val_loss = has_val ? masked_l2(predict_all(model, graphs), graphs, SplitSel::kVal)
                           : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    last_good = snapshot(params);
    if (has_val && (!have_best || rec.val_loss < result.best_val)) {
      result.best_val = rec.val_loss;
      result.best_epoch = rec.epoch;
      best = last_good;
      have_best = true;
    }
  }
  result.steps = step;
  if (cfg.select_best && have_best) {
    restore(params, best);
  } else {
    result.best_epoch = result.history.empty() ? 0 : result.history.back().epoch;
    result.best_val = result.history.empty() ? 0.0 : result.history.back().val_loss;
  }
  return result;
}

template <typename T>
std::vector<std::vector<double>> predict_all(const NodeRegressor<T>& model, const std::vector<EncodedGraph>& graphs) {
  std::vector<std::vector<double>> out(graphs.size());
  parallel_for(graphs.size(), [&](std::size_t g) { out[g] = model.predict(pad_graph(graphs[g], graphs[g].num_nodes, g)); });
  return out;
}

std::size_t EvalReport::total() const {
  std::size_t t = 0;
  for (std::size_t c : counts) t += c;
  return t;
}

json EvalReport::to_json() const {
  json per = json::array();
  for (double v : per_class_l2) per.push_back(std::isnan(v) ? json(nullptr) : json(v));
  return json{{"name", name},           {"split", split},   {"overall_l2", overall_l2},
              {"per_class_l2", per},    {"counts", counts}, {"config", config}};
}

EvalReport evaluate_predictions(const std::vector<std::vector<double>>& predictions,
                                const std::vector<EncodedGraph>& graphs, SplitSel which) {
  if (predictions.size() != graphs.size()) throw std::invalid_argument("evaluate: graph count mismatch");
  std::array<double, kClasses> sums{};
  EvalReport r;
  r.split = sel_name(which);
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const EncodedGraph& graph = graphs[g];
    if (predictions[g].size() != graph.num_nodes) throw std::invalid_argument("evaluate: prediction length mismatch");
    for (std::size_t i = 0; i < graph.num_nodes; ++i) {
      if (!split_selected(graph.split[i], which)) continue;
      const int c = graph.labels[i];
      if (c < 0 || c >= static_cast<int>(kClasses)) throw std::invalid_argument("evaluate: label out of range");
      const double d = predictions[g][i] - static_cast<double>(c);
      sums[c] += d * d;
      ++r.counts[c];
    }
  }
  const std::size_t total = r.total();
  if (total == 0) throw std::invalid_argument(std::string("evaluate: empty ") + r.split + " split");
  double all = 0.0;
  for (std::size_t c = 0; c < kClasses; ++c) {
    all += sums[c];
    r.per_class_l2[c] = r.counts[c] ? sums[c] / static_cast<double>(r.counts[c])
                                    : std::numeric_limits<double>::quiet_NaN();
  }
  r.overall_l2 = all / static_cast<double>(total);
  return r;
}

template <typename T>
EvalReport evaluate(const NodeRegressor<T>& model, const std::vector<EncodedGraph>& graphs, SplitSel which) {
  EvalReport r = evaluate_predictions(predict_all(model, graphs), graphs, which);
  r.name = model_kind_name(model.config().kind);
  r.config = model.config().to_json();
  return r;
}

std::string eval_table_tsv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out.precision(6);
  out << "Model\tAll\t0\t1\t2\t3\t4\n";
  for (const EvalReport& r : reports) {
    out << r.name << '\t' << std::fixed << r.overall_l2;
    for (double v : r.per_class_l2) {
      out << '\t';
      if (std::isnan(v)) {
        out << '-';
      } else {
        out << v;
      }
    }
    out << '\n';
  }
  return out.str();
}

template void adamw_step<float>(ParameterSet<float>&, const std::vector<std::vector<float>>&, AdamWState&, double,
                                const AdamWHyper&);
template void adamw_step<double>(ParameterSet<double>&, const std::vector<std::vector<double>>&, AdamWState&, double,
                                 const AdamWHyper&);
template TrainResult train<float>(NodeRegressor<float>&, const std::vector<EncodedGraph>&, const TrainConfig&,
                                  const std::function<void(const EpochRecord&)>&);
template TrainResult train<double>(NodeRegressor<double>&, const std::vector<EncodedGraph>&, const TrainConfig&,
                                   const std::function<void(const EpochRecord&)>&);
template std::vector<std::vector<double>> predict_all<float>(const NodeRegressor<float>&,
                                                             const std::vector<EncodedGraph>&);
template std::vector<std::vector<double>> predict_all<double>(const NodeRegressor<double>&,
                                                              const std::vector<EncodedGraph>&);
template EvalReport evaluate<float>(const NodeRegressor<float>&, const std::vector<EncodedGraph>&, SplitSel);
template EvalReport evaluate<double>(const NodeRegressor<double>&, const std::vector<EncodedGraph>&, SplitSel);

}  // namespace threadcast

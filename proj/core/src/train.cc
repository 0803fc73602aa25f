/*
 * Copyright 2026 The IFENet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ifenet/train.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "ifenet/metrics.h"
#include "json.hpp"

namespace ifenet {
namespace {

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception thrown by any worker is rethrown.
void ParallelFor(size_t count, size_t threads, const std::function<void(size_t)>& body) {
  threads = std::max<size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void CheckCompatible(const IfeNetParams& params, const EncodedDataset& ds, const char* which) {
  if (ds.n() < 1) throw DataError(std::string("Train: empty ") + which + " split");
  if (ds.d() != static_cast<Eigen::Index>(params.d) || ds.num_classes != params.num_classes) {
    throw ShapeError(std::string("Train: ") + which + " split has d=" + std::to_string(ds.d()) +
                     ", C=" + std::to_string(ds.num_classes) + "; model has d=" +
                     std::to_string(params.d) + ", C=" + std::to_string(params.num_classes));
  }
}

}  // namespace

AdamState AdamState::For(std::span<const Matrix* const> params) {
  AdamState s;
  for (const Matrix* p : params) {
    s.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    s.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  return s;
}

void AdamStep(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
              double learning_rate, const AdamConfig& config) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ShapeError("AdamStep: " + std::to_string(params.size()) + " tensors, " +
                     std::to_string(grads.size()) + " gradients, " +
                     std::to_string(state.first_moment.size()) + " moment slots");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols() ||
        state.first_moment[i].rows() != grads[i].rows() ||
        state.first_moment[i].cols() != grads[i].cols()) {
      throw ShapeError("AdamStep: tensor " + std::to_string(i) + " is " +
                       ShapeString(*params[i]) + " but gradient is " + ShapeString(grads[i]));
    }
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    m = config.beta1 * m + (1.0 - config.beta1) * grads[i];
    v = config.beta2 * v + (1.0 - config.beta2) * grads[i].cwiseAbs2();
    const auto m_hat = m.array() / correction1;
    const auto v_hat = v.array() / correction2;
    params[i]->array() -= learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
  }
}

void TrainConfig::Validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("TrainConfig: learning_rate must be finite and >= 0");
  }
  if (batch_size < 2) throw InvalidArgument("TrainConfig: batch_size must be >= 2");
  if (max_epochs < 1) throw InvalidArgument("TrainConfig: max_epochs must be >= 1");
  if (patience < 1) throw InvalidArgument("TrainConfig: patience must be >= 1");
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("TrainConfig: r must be positive");
  if (hidden_size && *hidden_size < 1) throw InvalidArgument("TrainConfig: hidden_size must be >= 1");
}

std::string TrainConfig::ToJson() const {
  nlohmann::ordered_json doc;
  doc["model"] = ModelKindName(kind);
  doc["learning_rate"] = learning_rate;
  doc["batch_size"] = batch_size;
  doc["max_epochs"] = max_epochs;
  doc["patience"] = patience;
  doc["seed"] = seed;
  doc["r"] = r;
  doc["hidden_size"] = hidden_size ? nlohmann::ordered_json(*hidden_size) : nlohmann::ordered_json();
  doc["adam_beta1"] = adam.beta1;
  doc["adam_beta2"] = adam.beta2;
  doc["adam_epsilon"] = adam.epsilon;
  return doc.dump();
}

const char* StopReasonName(StopReason reason) {
  return reason == StopReason::kEarlyStop ? "early-stop" : "max-epochs";
}

double TrainHistory::best_validation_accuracy() const {
  if (best_epoch == 0 || best_epoch > epochs.size()) return 0.0;
  return epochs[best_epoch - 1].validation_accuracy;
}

std::string TrainHistory::ToCsv() const {
  std::string out = "epoch,train_loss,validation_accuracy\n";
  for (const EpochRecord& e : epochs) {
    out += std::to_string(e.epoch) + "," + FormatReal(e.train_loss) + "," +
           FormatReal(e.validation_accuracy) + "\n";
  }
  return out;
}

double BatchLoss(const IfeNetParams& params, const Matrix& x, std::span<const int> y) {
  Tape tape;
  const ForwardResult fwd = IfeNetForward(tape, x, params, Mode::kTrain);
  return tape.scalar(tape.CrossEntropyLoss(fwd.logits, y));
}

TrainResult Train(const IfeNetParams& initial, const EncodedDataset& train_set,
                  const EncodedDataset& validation_set, const TrainConfig& config) {
  config.Validate();
  initial.Validate();
  CheckCompatible(initial, train_set, "train");
  CheckCompatible(initial, validation_set, "validation");
  const auto n = static_cast<size_t>(train_set.n());
  if (n < 2) throw DataError("Train: need at least 2 training rows");

  TrainResult result{initial, {}};
  IfeNetParams params = initial;
  AdamState adam = AdamState::For(params.Trainable());
  Rng shuffle_rng(DeriveSeed(config.seed, "shuffle"));

  double best_accuracy = -1.0;
  size_t since_improvement = 0;
  Matrix batch_x;
  std::vector<int> batch_y;
  std::vector<Matrix> grads;

  for (size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const std::vector<size_t> order = RandomPermutation(n, shuffle_rng);
    double loss_sum = 0.0;
    size_t loss_rows = 0;
    for (size_t start = 0; start < n; start += config.batch_size) {
      const size_t size = std::min(config.batch_size, n - start);
      if (size < 2) continue;
      batch_x.resize(static_cast<Eigen::Index>(size), train_set.d());
      batch_y.resize(size);
      for (size_t i = 0; i < size; ++i) {
        batch_x.row(static_cast<Eigen::Index>(i)) =
            train_set.x.row(static_cast<Eigen::Index>(order[start + i]));
        batch_y[i] = train_set.y[order[start + i]];
      }

      Tape tape;
      const ParamHandles handles = RegisterParameters(tape, params);
      const ForwardResult fwd = ForwardOnTape(tape, batch_x, params, handles, Mode::kTrain);
      const ValueId loss = tape.CrossEntropyLoss(fwd.logits, batch_y);
      const GradientMap gm = tape.Backward(loss);
      if (fwd.ife) result.history.exp_clamps += fwd.ife->exp_clamps;

      grads.clear();
      for (const ValueId& id : handles.All()) grads.push_back(gm.at(id));
      UpdateRunningStats(params.bn, *fwd.moments);
      const std::vector<Matrix*> tensors = params.Trainable();
      AdamStep(tensors, grads, adam, config.learning_rate, config.adam);

      loss_sum += tape.scalar(loss) * static_cast<double>(size);
      loss_rows += size;
    }

    const double accuracy = Accuracy(params, validation_set);
    result.history.epochs.push_back(
        {epoch, loss_rows > 0 ? loss_sum / static_cast<double>(loss_rows) : 0.0, accuracy});
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      result.params = params;
      result.history.best_epoch = epoch;
      since_improvement = 0;
    } else if (++since_improvement >= config.patience) {
      result.history.stop_reason = StopReason::kEarlyStop;
      break;
    }
  }
  return result;
}

TrainResult TrainFromScratch(const EncodedDataset& train_set, const EncodedDataset& validation_set,
                             const TrainConfig& config) {
  config.Validate();
  const IfeNetParams init =
      InitParams(static_cast<size_t>(train_set.d()), train_set.num_classes, config.hidden_size,
                 config.r, config.seed, config.kind);
  return Train(init, train_set, validation_set, config);
}

void SearchSpace::Validate() const {
  if (domains.empty()) throw InvalidArgument("SearchSpace: empty space");
  for (const Domain& d : domains) {
    if (d.kind == Domain::Kind::kChoice) {
      if (d.choices.empty()) throw InvalidArgument("SearchSpace: empty choice set for " + d.name);
    } else if (d.lower > d.upper) {
      throw InvalidArgument("SearchSpace: lower > upper for " + d.name);
    } else if (d.kind == Domain::Kind::kLogUniform && !(d.lower > 0.0)) {
      throw InvalidArgument("SearchSpace: log-uniform bound must be positive for " + d.name);
    }
  }
}

std::map<std::string, double> SearchSpace::Sample(Rng& rng) const {
  std::map<std::string, double> values;
  for (const Domain& d : domains) {
    double v = 0.0;
    switch (d.kind) {
      case Domain::Kind::kChoice:
        v = d.choices[UniformIndex(rng, d.choices.size())];
        break;
      case Domain::Kind::kUniformReal:
        v = UniformReal(rng, d.lower, d.upper);
        break;
      case Domain::Kind::kUniformInt: {
        const auto lo = static_cast<long long>(std::llround(d.lower));
        const auto hi = static_cast<long long>(std::llround(d.upper));
        v = static_cast<double>(lo + static_cast<long long>(
                                         UniformIndex(rng, static_cast<uint64_t>(hi - lo + 1))));
        break;
      }
      case Domain::Kind::kLogUniform:
        v = std::exp(UniformReal(rng, std::log(d.lower), std::log(d.upper)));
        break;
    }
    values[d.name] = v;
  }
  return values;
}

SearchSpace SearchSpace::IfeNet() {
  using K = Domain::Kind;
  return SearchSpace{{
      {"learning_rate", K::kChoice, {0.01, 0.001, 0.0001}},
      {"batch_size", K::kChoice, {32, 64, 128}},
      {"hidden_size", K::kUniformInt, {}, 16, 128},
      {"r", K::kUniformReal, {}, 1.0, 5.0},
  }};
}

SearchSpace SearchSpace::XGBoostReference() {
  using K = Domain::Kind;
  return SearchSpace{{
      {"n_estimators", K::kUniformInt, {}, 50, 300},
      {"max_depth", K::kUniformInt, {}, 3, 10},
      {"min_child_weight", K::kUniformReal, {}, 1, 6},
      {"subsample", K::kUniformReal, {}, 0.5, 1},
      {"colsample_bytree", K::kUniformReal, {}, 0.5, 1},
      {"colsample_bylevel", K::kUniformReal, {}, 0.5, 1},
      {"alpha", K::kLogUniform, {}, 0.5, 1},
      {"gamma", K::kLogUniform, {}, 0.5, 1},
  }};
}

TrainConfig ApplySample(const TrainConfig& base, const std::map<std::string, double>& values) {
  TrainConfig c = base;
  if (auto it = values.find("learning_rate"); it != values.end()) c.learning_rate = it->second;
  if (auto it = values.find("batch_size"); it != values.end()) {
    c.batch_size = static_cast<size_t>(std::llround(it->second));
  }
  if (auto it = values.find("hidden_size"); it != values.end()) {
    c.hidden_size = static_cast<size_t>(std::llround(it->second));
  }
  if (auto it = values.find("r"); it != values.end()) c.r = it->second;
  return c;
}

std::string SearchResult::ToCsv() const {
  std::string out = "trial";
  if (!trials.empty()) {
    for (const auto& [name, value] : trials.front().sampled) out += "," + name;
  }
  out += ",validation_accuracy,best_epoch,epochs_run\n";
  for (const TrialRecord& t : trials) {
    out += std::to_string(t.index);
    for (const auto& [name, value] : t.sampled) out += "," + FormatReal(value);
    out += "," + FormatReal(t.validation_accuracy) + "," + std::to_string(t.best_epoch) + "," +
           std::to_string(t.epochs_run) + "\n";
  }
  return out;
}

SearchResult RandomSearch(const SearchSpace& space, size_t trials, const TrainConfig& base,
                          const EncodedDataset& train_set, const EncodedDataset& validation_set,
                          uint64_t seed, size_t threads) {
  space.Validate();
  if (trials < 1) throw InvalidArgument("RandomSearch: trials must be >= 1");
  SearchResult result;
  result.trials.resize(trials);
  ParallelFor(trials, threads, [&](size_t t) {
    Rng rng(DeriveSeed(seed, "search.sample", {t}));
    TrialRecord& rec = result.trials[t];
    rec.index = t;
    rec.sampled = space.Sample(rng);
    rec.config = ApplySample(base, rec.sampled);
    rec.config.seed = DeriveSeed(seed, "search.trial", {t});
    const TrainResult tr = TrainFromScratch(train_set, validation_set, rec.config);
    rec.validation_accuracy = tr.history.best_validation_accuracy();
    rec.best_epoch = tr.history.best_epoch;
    rec.epochs_run = tr.history.epochs.size();
  });
  for (size_t t = 1; t < trials; ++t) {
    if (result.trials[t].validation_accuracy > result.trials[result.best_index].validation_accuracy) {
      result.best_index = t;
    }
  }
  result.best_config = result.trials[result.best_index].config;
  return result;
}

std::vector<SweepRow> SweepAmplification(std::span<const double> r_values, const TrainConfig& base,
                                         const EncodedDataset& train_set,
                                         const EncodedDataset& validation_set,
                                         const EncodedDataset& test_set, size_t threads) {
  if (r_values.empty()) throw InvalidArgument("SweepAmplification: no r values");
  for (const double r : r_values) {
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("SweepAmplification: r must be positive");
  }
  std::vector<SweepRow> rows(r_values.size());
  ParallelFor(r_values.size(), threads, [&](size_t i) {
    TrainConfig config = base;
    config.r = r_values[i];
    const TrainResult tr = TrainFromScratch(train_set, validation_set, config);
    rows[i] = {r_values[i], Accuracy(tr.params, test_set), tr.history.best_validation_accuracy(),
               tr.history.best_epoch};
  });
  return rows;
}

std::string SweepToCsv(std::span<const SweepRow> rows) {
  std::string out = "r,test_accuracy\n";
  for (const SweepRow& row : rows) out += FormatReal(row.r) + "," + FormatReal(row.test_accuracy) + "\n";
  return out;
}

size_t DefaultThreadCount() {
  if (const char* env = std::getenv("IFE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace ifenet

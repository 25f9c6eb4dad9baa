// Copyright 2026 The scalecount Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scalecount/training.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

#include "scalecount/error.hpp"
#include "scalecount/evaluation.hpp"
#include "scalecount/ops.hpp"

namespace scalecount {

void TrainConfig::validate(const NetworkConfig& net) const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (patch < 1 || patch % net.stride() != 0) {
    throw ConfigError("patch size " + std::to_string(patch) +
                      " must be a positive multiple of the stride " +
                      std::to_string(net.stride()));
  }
}

Var loss_integrated(const Var& preds, const Tensor& gts) {
  return squared_error(preds, gts);
}

Var loss_averaged(const Var& preds, const Tensor& gts) {
  const double n = preds.shape().n;
  return scale(squared_error(preds, gts), 1.0 / (2.0 * n));
}

Var compute_loss(LossMode mode, const Var& preds, const Tensor& gts) {
  return mode == LossMode::kIntegrated ? loss_integrated(preds, gts)
                                       : loss_averaged(preds, gts);
}

Tensor align_targets(std::span<const DensityMap> gts, int stride) {
  if (gts.empty()) throw ArgumentError("no targets to align");
  const int rows = gts[0].rows();
  const int cols = gts[0].cols();
  Tensor stacked(Shape{static_cast<int>(gts.size()), 1, rows, cols});
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (gts[i].rows() != rows || gts[i].cols() != cols) {
      throw ShapeError("targets differ in size");
    }
    std::copy(gts[i].values().begin(), gts[i].values().end(),
              stacked.data() + i * gts[i].size());
  }
  return sum_pool(stacked, stride);
}

void adam_step(std::span<Parameter* const> params, AdamState& state, double lr) {
  for (const Parameter* p : params) {
    if (p->grad.shape() != p->value.shape()) {
      throw ShapeError("gradient of " + p->name + " has shape " +
                       p->grad.shape().str());
    }
    if (!p->grad.all_finite()) {
      throw NumericError("non-finite gradient in parameter " + p->name);
    }
  }
  if (state.m.empty()) {
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("Adam state tracks a different parameter set");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    double* m = state.m[k].data();
    double* v = state.v[k].data();
    const double* g = p.grad.data();
    double* w = p.value.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

TrainResult train(const TrainConfig& cfg, const NetworkConfig& net,
                  const Corpus& corpus, const TrainOptions& options) {
  cfg.validate(net);
  const auto train_split = corpus.split("train");
  if (train_split.empty()) throw ConfigError("corpus has no train split");
  const auto val_split = corpus.split("val");

  Rng init_rng = make_stream(net.seed, "init");
  Rng sampling_rng = make_stream(cfg.seed, "sampling");
  Rng mixer_rng = make_stream(cfg.seed, "mixer");

  TrainResult result{build_network(net, init_rng), {}};
  Model& model = result.model;
  if (options.out_dir) std::filesystem::create_directories(*options.out_dir);

  auto emit = [&](LogRow row, bool validate) {
    if (validate && !val_split.empty()) {
      const EvalReport report = evaluate(model, val_split);
      row.val_mae = report.mae;
      row.val_mse = report.mse;
    }
    result.log.push_back(row);
    if (options.on_row) options.on_row(row);
    if (validate && options.out_dir) {
      write_metrics_csv(result.log, *options.out_dir / "metrics.csv");
    }
  };

  emit(LogRow{0, std::nullopt, std::nullopt, std::nullopt}, true);

  const int stride = net.stride();
  AdamState adam;
  auto params = model.parameters();
  for (int it = 1; it <= cfg.iterations; ++it) {
    const PatchBatch batch = sample_patch_batch(train_split, cfg.batch, cfg.patch,
                                                sampling_rng, cfg.flip);
    const Tensor targets = align_targets(batch.gts, stride);

    model.set_phase(Phase::kTrain);
    model.zero_grad();
    Tape tape;
    const Var preds = model.forward(tape, batch.images, Phase::kTrain, mixer_rng);
    const Var loss = compute_loss(cfg.loss, preds, targets);
    const double loss_value = loss.value()[0];
    if (!std::isfinite(loss_value)) {
      throw NumericError("loss became non-finite at iteration " + std::to_string(it));
    }
    tape.backward(loss);
    adam_step(params, adam, cfg.lr);

    const bool checkpoint =
        (cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0) ||
        it == cfg.iterations;
    model.set_phase(Phase::kEval);
    emit(LogRow{it, loss_value, std::nullopt, std::nullopt}, checkpoint);
    if (checkpoint && options.out_dir) {
      save_checkpoint(model, *options.out_dir /
                                 ("checkpoint_" + std::to_string(it) + ".ckpt"));
    }
  }
  if (options.out_dir) save_checkpoint(model, *options.out_dir / "final.ckpt");
  model.set_phase(Phase::kEval);
  return result;
}

void write_metrics_csv(std::span<const LogRow> log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics " + path.string());
  out << std::setprecision(17) << "iter,loss,val_mae,val_mse\n";
  auto cell = [&out](const std::optional<double>& v) {
    if (v) out << *v;
  };
  for (const LogRow& row : log) {
    out << row.iter << ',';
    cell(row.loss);
    out << ',';
    cell(row.val_mae);
    out << ',';
    cell(row.val_mse);
    out << '\n';
  }
}

}  // namespace scalecount

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

#ifndef SCALECOUNT_TRAINING_HPP_
#define SCALECOUNT_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalecount/autodiff.hpp"
#include "scalecount/groundtruth.hpp"
#include "scalecount/network.hpp"
#include "scalecount/synth.hpp"

namespace scalecount {

enum class LossMode {
  kIntegrated,  // sum of per-patch squared errors
  kAveraged,    // the same sum divided by 2N
};

struct TrainConfig {
  double lr = 1e-4;
  int batch = 4;
  int patch = 48;
  int iterations = 0;
  LossMode loss = LossMode::kIntegrated;
  bool flip = true;
  std::uint64_t seed = 0;
  // Validation + checkpoint period in iterations; 0 means only at the end.
  int checkpoint_every = 0;
  GroundTruthConfig gt;

  void validate(const NetworkConfig& net) const;
};

// sum_i ||pred_i - gt_i||^2.
Var loss_integrated(const Var& preds, const Tensor& gts);
// (1 / 2N) sum_i ||pred_i - gt_i||^2.
Var loss_averaged(const Var& preds, const Tensor& gts);
Var compute_loss(LossMode mode, const Var& preds, const Tensor& gts);

// Stacks density patches into (N, 1, h/stride, w/stride) by sum pooling.
Tensor align_targets(std::span<const DensityMap> gts, int stride);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// Bias-corrected Adam update of every parameter from its grad buffer.
// Throws NumericError naming the first parameter with a non-finite gradient;
// nothing is updated in that case.
void adam_step(std::span<Parameter* const> params, AdamState& state, double lr);

struct LogRow {
  int iter = 0;
  std::optional<double> loss;
  std::optional<double> val_mae;
  std::optional<double> val_mse;
};

struct TrainResult {
  Model model;
  std::vector<LogRow> log;
};

struct TrainOptions {
  // Checkpoints (checkpoint_<iter>.ckpt, final.ckpt) and metrics.csv go here
  // when set.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const LogRow&)> on_row;
};

// Per iteration: sample patches, align GT, draw mixer weights, forward,
// loss, backward, Adam. Validation MAE/MSE on whole val images at iteration
// 0, every checkpoint_every iterations and at the end. A non-finite loss
// throws NumericError, leaving earlier checkpoints in place.
TrainResult train(const TrainConfig& cfg, const NetworkConfig& net,
                  const Corpus& corpus, const TrainOptions& options = {});

// iter,loss,val_mae,val_mse with empty cells for absent values.
void write_metrics_csv(std::span<const LogRow> log, const std::filesystem::path& path);

}  // namespace scalecount

#endif  // SCALECOUNT_TRAINING_HPP_

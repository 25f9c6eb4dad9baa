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

#ifndef SCALECOUNT_SIT_BLOCK_HPP_
#define SCALECOUNT_SIT_BLOCK_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalecount/autodiff.hpp"
#include "scalecount/layers.hpp"
#include "scalecount/rng.hpp"

namespace scalecount {

enum class Phase { kTrain, kEval };

enum class MixerMode {
  kStochastic,  // fresh U(0,1) weights per training iteration, 0.5 in eval
  kFixed,       // constant weight in both phases
  kDisabled,    // mixer output equals its input
};

// Scale-invariant transformation block configuration.
//
// The entry 1x1 projection produces `groups` groups of `group_width`
// channels. Group 0 is passed through untouched, group i (1 <= i < groups) is
// convolved with a 3x3 kernel at dilation i. groups == 1 is the degenerate
// single-path block: 1x1, one 3x3 at dilation 1, 1x1.
struct SiTConfig {
  int groups = 6;
  int group_width = 64;
  int out_channels = 256;
  MixerMode mixer = MixerMode::kStochastic;
  double fixed_alpha = 0.5;
  bool residual = true;

  void validate() const;
  int pyramid_channels() const { return groups * group_width; }
  std::size_t alpha_count() const {
    return groups > 2 ? static_cast<std::size_t>(groups - 2) : 0;
  }
};

// Mixing weights alpha_1..alpha_{G-2}; alphas[j] holds alpha_{j+1}.
struct MixerDraw {
  std::vector<double> alphas;
};

MixerDraw draw_alphas(Rng& rng, const SiTConfig& cfg, Phase phase);

// Recursive convex mixing of pyramid outputs:
//   out_0 = d_0, out_1 = d_1,
//   out_i = alpha_{i-1} * out_{i-1} + (1 - alpha_{i-1}) * d_i,  i >= 2.
// Throws ArgumentError when draw length != max(d.size() - 2, 0).
std::vector<Var> mixer(std::span<const Var> d, const MixerDraw& draw);

// Closed-form expansion of `mixer`: out_i = sum_j coeffs[i][j] * d_j.
std::vector<std::vector<double>> mixer_expansion_coeffs(const MixerDraw& draw,
                                                        int groups);

// Learnable state of one block.
struct SiTParams {
  int in_channels = 0;
  ConvLayer entry;
  std::vector<ConvLayer> pyramid;
  ConvLayer exit;
  // 1x1 skip projection, present when in_channels != out_channels.
  std::optional<ConvLayer> projection;

  static SiTParams create(const std::string& prefix, int in_channels,
                          const SiTConfig& cfg);
  void init(Rng& rng, double stddev);
  void collect(std::vector<Parameter*>& out);
};

// entry 1x1 -> split -> {F_0 passthrough, D_i(F_i) + ReLU} -> mixer ->
// concat -> exit 1x1 -> + residual -> ReLU. Output (n, out_channels, h, w).
Var sit_forward(Tape& tape, const Var& x, SiTParams& params,
                const SiTConfig& cfg, const MixerDraw& draw);

}  // namespace scalecount

#endif  // SCALECOUNT_SIT_BLOCK_HPP_

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

#include "scalecount/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <span>
#include <cmath>

#include "scalecount/autodiff.hpp"
#include "scalecount/error.hpp"
#include "scalecount/network.hpp"
#include "scalecount/ops.hpp"
#include "scalecount/sit_block.hpp"
#include "scalecount/training.hpp"

namespace scalecount {
namespace {

constexpr double kEps = 1e-5;
constexpr double kOpThreshold = 1e-4;
constexpr double kNetworkThreshold = 1e-3;

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(shape);
  for (double& v : t.values()) v = scale * (2.0 * uniform01(rng) - 1.0);
  return t;
}

// sum(weights * y): a scalar whose gradient differs per coordinate.
Var weighted_sum(Tape& tape, const Var& y, const Tensor& weights) {
  return sum(mul(y, tape.constant(weights)));
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_battery(std::uint64_t seed) {
  Rng rng = make_stream(seed, "gradcheck");
  std::vector<GradCheckResult> results;
  auto check = [&](const std::string& name, const ScalarFn& fn, const Tensor& x) {
    results.push_back({name, grad_check(fn, x, kEps), kOpThreshold});
  };

  const Shape small{2, 3, 4, 4};
  const Tensor x = random_tensor(small, rng);
  const Tensor other = random_tensor(small, rng);
  const Tensor w = random_tensor(small, rng);

  check("add", [&](Tape& t, const Var& v) {
    return weighted_sum(t, add(v, t.constant(other)), w);
  }, x);
  check("scale", [&](Tape& t, const Var& v) {
    return weighted_sum(t, scale(v, -1.7), w);
  }, x);
  check("mul", [&](Tape& t, const Var& v) {
    return weighted_sum(t, mul(v, v), w);
  }, x);
  check("sum", [&](Tape&, const Var& v) { return sum(v); }, x);
  check("relu", [&](Tape& t, const Var& v) {
    return weighted_sum(t, relu(v), w);
  }, x);
  const Tensor w_concat = random_tensor(Shape{2, 6, 4, 4}, rng);
  const Tensor w_slice = random_tensor(Shape{2, 2, 4, 4}, rng);
  const Tensor w_pool = random_tensor(Shape{2, 3, 2, 2}, rng);
  check("concat_channels", [&](Tape& t, const Var& v) {
    const std::array<Var, 2> parts{v, scale(v, 2.0)};
    return weighted_sum(t, concat_channels(parts), w_concat);
  }, x);
  check("slice_channels", [&](Tape& t, const Var& v) {
    const Var y = slice_channels(v, 1, 2);
    return weighted_sum(t, mul(y, y), w_slice);
  }, x);
  check("convex_mix", [&](Tape& t, const Var& v) {
    return weighted_sum(t, convex_mix(v, mul(v, v), 0.3), w);
  }, x);
  check("sum_pool", [&](Tape& t, const Var& v) {
    return weighted_sum(t, sum_pool(mul(v, v), 2), w_pool);
  }, x);
  check("max_pool", [&](Tape& t, const Var& v) {
    return weighted_sum(t, max_pool(v, 2), w_pool);
  }, x);
  const Tensor target = random_tensor(small, rng);
  check("squared_error", [&](Tape&, const Var& v) {
    return squared_error(v, target);
  }, x);

  // Dilated convolution (rate 3) + ReLU + sum on a 1x8x12x12 input.
  const ConvSpec dilated{8, 8, 3, 3, 1};
  const Tensor conv_x = random_tensor(Shape{1, 8, 12, 12}, rng);
  const Tensor conv_w = random_tensor(dilated.weight_shape(), rng, 0.3);
  const Tensor conv_b = random_tensor(Shape{1, 8, 1, 1}, rng, 0.1);
  check("conv2d_dilated_input", [&](Tape& t, const Var& v) {
    return sum(relu(conv2d(v, t.constant(conv_w), t.constant(conv_b), dilated)));
  }, conv_x);
  check("conv2d_dilated_weight", [&](Tape& t, const Var& v) {
    return sum(relu(conv2d(t.constant(conv_x), v, t.constant(conv_b), dilated)));
  }, conv_w);
  check("conv2d_dilated_bias", [&](Tape& t, const Var& v) {
    return sum(relu(conv2d(t.constant(conv_x), t.constant(conv_w), v, dilated)));
  }, conv_b);

  const ConvSpec grouped{4, 6, 3, 2, 2};
  const Tensor gx = random_tensor(Shape{2, 4, 7, 7}, rng);
  const Tensor gw = random_tensor(grouped.weight_shape(), rng, 0.3);
  const Tensor gy_w = random_tensor(Shape{2, 6, 7, 7}, rng);
  check("conv2d_grouped_input", [&](Tape& t, const Var& v) {
    return weighted_sum(t, conv2d(v, t.constant(gw), Var(), grouped), gy_w);
  }, gx);
  check("conv2d_grouped_weight", [&](Tape& t, const Var& v) {
    return weighted_sum(t, conv2d(t.constant(gx), v, Var(), grouped), gy_w);
  }, gw);

  // Full SiT block, G = 4, against its input and all of its parameters.
  SiTConfig sit;
  sit.groups = 4;
  SiTParams block = SiTParams::create("sit", 8, sit);
  block.init(rng, 0.1);
  std::vector<Parameter*> block_params;
  block.collect(block_params);
  // Nonzero biases keep ReLU kinks away from the zero-bias symmetric point.
  for (Parameter* p : block_params) {
    if (p->name.ends_with(".bias")) {
      for (double& b : p->value.values()) b = 0.05 * (2.0 * uniform01(rng) - 1.0);
    }
  }
  const MixerDraw draw = draw_alphas(rng, sit, Phase::kTrain);
  const Tensor sit_x = random_tensor(Shape{1, 8, 6, 6}, rng);
  const Tensor sit_w = random_tensor(Shape{1, 256, 6, 6}, rng);
  check("sit_block_input", [&](Tape& t, const Var& v) {
    return weighted_sum(t, sit_forward(t, v, block, sit, draw), sit_w);
  }, sit_x);
  auto check_params = [&](const std::string& name,
                          const std::function<Var(Tape&)>& loss,
                          std::span<Parameter* const> params, std::size_t per_param,
                          const std::string& stream, double threshold, bool guard) {
    Rng coord_rng = make_stream(seed, stream);
    GradCheckResult r{name, 0.0, threshold};
    if (guard) {
      for (const Parameter* p : params) r.sampled += std::min(per_param, p->value.size());
    }
    r.max_rel_error = grad_check_params(loss, params, kEps, per_param, coord_rng,
                                        guard ? &r.skipped : nullptr);
    results.push_back(r);
  };
  check_params("sit_block_params", [&](Tape& t) {
    return weighted_sum(t, sit_forward(t, t.constant(sit_x), block, sit, draw), sit_w);
  }, block_params, 6, "gradcheck-coords", kOpThreshold, true);

  // End-to-end toy network. A backbone weight moves every downstream
  // pre-activation, so some unit nearly always changes branch inside the
  // stencil; the looser threshold absorbs that and no coordinate is dropped.
  // Integrated loss, N = 2, 16x16 patches.
  NetworkConfig net;
  net.sit_count = 2;
  net.init_stddev = 0.05;
  Rng init = make_stream(seed, "gradcheck-init");
  Model model = build_network(net, init);
  const Tensor images = random_tensor(Shape{2, 1, 16, 16}, rng, 0.5);
  Tensor targets(Shape{2, 1, 4, 4});
  for (double& v : targets.values()) v = 0.2 * uniform01(rng);
  const std::vector<MixerDraw> draws = model.draw_all(rng, Phase::kTrain);
  // Shift the final bias so the clamp is active on most pixels.
  if (Parameter* b = model.find("head.conv1.bias")) b->value[0] = 0.05;
  check_params("network_end_to_end", [&](Tape& t) {
    return loss_integrated(model.forward(t, images, draws), targets);
  }, model.parameters(), 2, "gradcheck-net-coords", kNetworkThreshold, false);
  return results;
}

MixerSelfTest run_mixer_self_test(int groups, int draws, std::uint64_t seed) {
  if (groups < 2) throw ArgumentError("mixer self-test needs G >= 2");
  if (draws < 1) throw ArgumentError("mixer self-test needs at least one draw");
  SiTConfig cfg;
  cfg.groups = groups;
  Rng rng = make_stream(seed, "mixer");
  MixerSelfTest result;
  result.groups = groups;
  result.draws = draws;
  result.min_coefficient = 1.0;
  for (int i = 0; i < draws; ++i) {
    const auto coeffs =
        mixer_expansion_coeffs(draw_alphas(rng, cfg, Phase::kTrain), groups);
    for (const auto& row : coeffs) {
      double total = 0.0;
      for (double c : row) {
        total += c;
        result.min_coefficient = std::min(result.min_coefficient, c);
      }
      result.max_row_sum_deviation =
          std::max(result.max_row_sum_deviation, std::abs(total - 1.0));
    }
  }
  // d_0 bypasses the mixer, so the row is reported over d_1 .. d_{G-1}.
  const auto half =
      mixer_expansion_coeffs(draw_alphas(rng, cfg, Phase::kEval), groups).back();
  result.half_row.assign(half.begin() + 1, half.end());
  return result;
}

}  // namespace scalecount

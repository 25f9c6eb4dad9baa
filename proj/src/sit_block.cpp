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

#include "scalecount/sit_block.hpp"

#include <string>

#include "scalecount/error.hpp"
#include "scalecount/ops.hpp"

namespace scalecount {

void SiTConfig::validate() const {
  if (groups < 1) {
    throw ConfigError("SiT needs at least one group, got " +
                      std::to_string(groups));
  }
  if (group_width < 1 || out_channels < 1) {
    throw ConfigError("SiT group width and output channels must be positive");
  }
  if (mixer == MixerMode::kFixed && !(fixed_alpha >= 0.0 && fixed_alpha <= 1.0)) {
    throw ConfigError("fixed mixer weight must lie in [0, 1]");
  }
}

MixerDraw draw_alphas(Rng& rng, const SiTConfig& cfg, Phase phase) {
  MixerDraw draw;
  draw.alphas.assign(cfg.alpha_count(), 0.5);
  if (cfg.mixer == MixerMode::kFixed) {
    draw.alphas.assign(cfg.alpha_count(), cfg.fixed_alpha);
  } else if (cfg.mixer == MixerMode::kStochastic && phase == Phase::kTrain) {
    for (double& a : draw.alphas) a = uniform01(rng);
  }
  return draw;
}

std::vector<Var> mixer(std::span<const Var> d, const MixerDraw& draw) {
  const std::size_t expected = d.size() > 2 ? d.size() - 2 : 0;
  if (draw.alphas.size() != expected) {
    throw ArgumentError("mixer: " + std::to_string(d.size()) +
                        " inputs need " + std::to_string(expected) +
                        " weights, draw has " +
                        std::to_string(draw.alphas.size()));
  }
  std::vector<Var> out(d.begin(), d.end());
  for (std::size_t i = 2; i < d.size(); ++i) {
    out[i] = convex_mix(out[i - 1], d[i], draw.alphas[i - 2]);
  }
  return out;
}

std::vector<std::vector<double>> mixer_expansion_coeffs(const MixerDraw& draw,
                                                        int groups) {
  const std::size_t g = static_cast<std::size_t>(groups);
  std::vector<std::vector<double>> c(g, std::vector<double>(g, 0.0));
  for (std::size_t i = 0; i < g && i < 2; ++i) c[i][i] = 1.0;
  for (std::size_t i = 2; i < g; ++i) {
    const double a = draw.alphas.at(i - 2);
    for (std::size_t j = 0; j < i; ++j) c[i][j] = a * c[i - 1][j];
    c[i][i] = 1.0 - a;
  }
  return c;
}

SiTParams SiTParams::create(const std::string& prefix, int in_channels,
                            const SiTConfig& cfg) {
  cfg.validate();
  if (in_channels < 1) throw ConfigError("SiT input needs >= 1 channel");
  SiTParams p;
  p.in_channels = in_channels;
  const int width = cfg.group_width;
  p.entry = ConvLayer(prefix + ".entry",
                      {in_channels, cfg.pyramid_channels(), 1, 1, 1});
  if (cfg.groups == 1) {
    p.pyramid.emplace_back(prefix + ".pyramid1", ConvSpec{width, width, 3, 1, 1});
  } else {
    for (int i = 1; i < cfg.groups; ++i) {
      p.pyramid.emplace_back(prefix + ".pyramid" + std::to_string(i),
                             ConvSpec{width, width, 3, i, 1});
    }
  }
  p.exit = ConvLayer(prefix + ".exit",
                     {cfg.pyramid_channels(), cfg.out_channels, 1, 1, 1});
  if (cfg.residual && in_channels != cfg.out_channels) {
    p.projection.emplace(prefix + ".projection",
                         ConvSpec{in_channels, cfg.out_channels, 1, 1, 1});
  }
  return p;
}

void SiTParams::init(Rng& rng, double stddev) {
  entry.init(rng, stddev);
  for (ConvLayer& layer : pyramid) layer.init(rng, stddev);
  exit.init(rng, stddev);
  if (projection) projection->init(rng, stddev);
}

void SiTParams::collect(std::vector<Parameter*>& out) {
  entry.collect(out);
  for (ConvLayer& layer : pyramid) layer.collect(out);
  exit.collect(out);
  if (projection) projection->collect(out);
}

Var sit_forward(Tape& tape, const Var& x, SiTParams& params,
                const SiTConfig& cfg, const MixerDraw& draw) {
  cfg.validate();
  if (x.shape().c != params.in_channels) {
    throw ShapeError("SiT expects " + std::to_string(params.in_channels) +
                     " input channels, got " + std::to_string(x.shape().c));
  }
  const Var projected = params.entry.forward(tape, x);

  std::vector<Var> d;
  d.reserve(cfg.groups);
  if (cfg.groups == 1) {
    d.push_back(relu(params.pyramid[0].forward(tape, projected)));
  } else {
    for (int i = 0; i < cfg.groups; ++i) {
      const Var f = slice_channels(projected, i * cfg.group_width, cfg.group_width);
      d.push_back(i == 0 ? f : relu(params.pyramid[i - 1].forward(tape, f)));
    }
  }

  std::vector<Var> mixed =
      cfg.mixer == MixerMode::kDisabled ? d : mixer(d, draw);
  Var y = params.exit.forward(tape, concat_channels(mixed));
  if (cfg.residual) {
    const Var skip =
        params.projection ? params.projection->forward(tape, x) : x;
    y = add(y, skip);
  }
  return relu(y);
}

}  // namespace scalecount

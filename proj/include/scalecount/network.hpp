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

#ifndef SCALECOUNT_NETWORK_HPP_
#define SCALECOUNT_NETWORK_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "scalecount/autodiff.hpp"
#include "scalecount/layers.hpp"
#include "scalecount/rng.hpp"
#include "scalecount/sit_block.hpp"

namespace scalecount {

// One backbone stage: 3x3 conv + ReLU, optionally followed by 2x max-pool.
struct BackboneStage {
  int channels = 0;
  bool pool = false;
};

// The head always reads a 256-channel map.
inline constexpr int kHeadInputChannels = 256;

struct NetworkConfig {
  int input_channels = 1;
  std::vector<BackboneStage> backbone{{32, true}, {64, true}, {128, false}};
  int sit_count = 6;
  SiTConfig sit;
  bool dense = true;
  int head_channels = 128;
  double init_stddev = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
  int stride() const;
  int backbone_channels() const;
  // Channels entering SiT block `block`: the backbone output plus every
  // earlier block output when dense, otherwise the previous output only.
  int sit_input_channels(int block) const;
};

class Model {
 public:
  Model() = default;

  const NetworkConfig& config() const { return cfg_; }
  Phase phase() const { return phase_; }
  void set_phase(Phase phase) { phase_ = phase; }

  // Draws one MixerDraw per SiT block from `mixer_rng` (train phase) or uses
  // the eval constants, then runs the network.
  Var forward(Tape& tape, const Tensor& batch, Phase phase, Rng& mixer_rng);
  // Runs with explicit per-block draws.
  Var forward(Tape& tape, const Tensor& batch, std::span<const MixerDraw> draws);

  std::vector<MixerDraw> draw_all(Rng& mixer_rng, Phase phase) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Parameter* find(const std::string& name);
  void zero_grad();

  const SiTParams& block(int i) const { return blocks_.at(i); }
  int block_count() const { return static_cast<int>(blocks_.size()); }

 private:
  friend Model build_network(const NetworkConfig& cfg, Rng& rng);

  NetworkConfig cfg_;
  Phase phase_ = Phase::kTrain;
  std::vector<ConvLayer> backbone_;
  std::vector<SiTParams> blocks_;
  ConvLayer head_hidden_;
  ConvLayer head_out_;
};

// Weights ~ N(0, init_stddev^2) in a fixed traversal order, biases 0.
Model build_network(const NetworkConfig& cfg, Rng& rng);

// Number of learnable scalars.
std::size_t param_count(const Model& model);

// Binary checkpoint: "SCSI", u16 version, u32 parameter count, then per
// parameter u16 name length, UTF-8 name, 4 x u32 dims and f32 values. All
// little-endian.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
// Loads into a model built from the matching config; throws ConfigError when
// names or shapes disagree and IoError on malformed files.
void load_checkpoint(Model& model, const std::filesystem::path& path);

}  // namespace scalecount

#endif  // SCALECOUNT_NETWORK_HPP_

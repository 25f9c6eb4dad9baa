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

#include "scalecount/network.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <string>

#include "scalecount/error.hpp"
#include "scalecount/ops.hpp"

namespace scalecount {

void NetworkConfig::validate() const {
  if (input_channels < 1) throw ConfigError("input_channels must be >= 1");
  for (const BackboneStage& s : backbone) {
    if (s.channels < 1) throw ConfigError("backbone widths must be positive");
  }
  if (sit_count < 0) throw ConfigError("sit_count must be >= 0");
  if (head_channels < 1) throw ConfigError("head_channels must be >= 1");
  if (!(init_stddev > 0.0)) throw ConfigError("init_stddev must be > 0");
  sit.validate();
  const int head_in = sit_count > 0 ? sit.out_channels : backbone_channels();
  if (head_in != kHeadInputChannels) {
    throw ConfigError("head input has " + std::to_string(head_in) +
                      " channels, expected " +
                      std::to_string(kHeadInputChannels));
  }
}

int NetworkConfig::stride() const {
  int s = 1;
  for (const BackboneStage& stage : backbone) {
    if (stage.pool) s *= 2;
  }
  return s;
}

int NetworkConfig::backbone_channels() const {
  return backbone.empty() ? input_channels : backbone.back().channels;
}

int NetworkConfig::sit_input_channels(int block) const {
  if (block == 0) return backbone_channels();
  return dense ? backbone_channels() + block * sit.out_channels
               : sit.out_channels;
}

Model build_network(const NetworkConfig& cfg, Rng& rng) {
  cfg.validate();
  Model m;
  m.cfg_ = cfg;
  int channels = cfg.input_channels;
  for (std::size_t i = 0; i < cfg.backbone.size(); ++i) {
    m.backbone_.emplace_back("backbone.conv" + std::to_string(i),
                             ConvSpec{channels, cfg.backbone[i].channels, 3, 1, 1});
    channels = cfg.backbone[i].channels;
  }
  for (int l = 0; l < cfg.sit_count; ++l) {
    m.blocks_.push_back(SiTParams::create("sit" + std::to_string(l),
                                          cfg.sit_input_channels(l), cfg.sit));
  }
  m.head_hidden_ = ConvLayer(
      "head.conv0", ConvSpec{kHeadInputChannels, cfg.head_channels, 3, 1, 1});
  m.head_out_ = ConvLayer("head.conv1", ConvSpec{cfg.head_channels, 1, 3, 1, 1});

  for (ConvLayer& layer : m.backbone_) layer.init(rng, cfg.init_stddev);
  for (SiTParams& block : m.blocks_) block.init(rng, cfg.init_stddev);
  m.head_hidden_.init(rng, cfg.init_stddev);
  m.head_out_.init(rng, cfg.init_stddev);
  return m;
}

std::vector<MixerDraw> Model::draw_all(Rng& mixer_rng, Phase phase) const {
  std::vector<MixerDraw> draws;
  draws.reserve(blocks_.size());
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    draws.push_back(draw_alphas(mixer_rng, cfg_.sit, phase));
  }
  return draws;
}

Var Model::forward(Tape& tape, const Tensor& batch, Phase phase,
                   Rng& mixer_rng) {
  const std::vector<MixerDraw> draws = draw_all(mixer_rng, phase);
  return forward(tape, batch, draws);
}

Var Model::forward(Tape& tape, const Tensor& batch,
                   std::span<const MixerDraw> draws) {
  const Shape s = batch.shape();
  if (s.c != cfg_.input_channels) {
    throw ShapeError("network expects " + std::to_string(cfg_.input_channels) +
                     " input channels, got " + std::to_string(s.c));
  }
  const int stride = cfg_.stride();
  if (s.h % stride != 0 || s.w % stride != 0) {
    throw ShapeError("input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                     " not divisible by stride " + std::to_string(stride));
  }
  if (draws.size() != blocks_.size()) {
    throw ArgumentError("need one mixer draw per SiT block");
  }

  Var x = tape.constant(batch);
  for (std::size_t i = 0; i < backbone_.size(); ++i) {
    x = relu(backbone_[i].forward(tape, x));
    if (cfg_.backbone[i].pool) x = max_pool(x, 2);
  }
  std::vector<Var> features{x};
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const Var in = cfg_.dense ? concat_channels(features) : features.back();
    features.push_back(sit_forward(tape, in, blocks_[l], cfg_.sit, draws[l]));
  }
  Var y = relu(head_hidden_.forward(tape, features.back()));
  // Density is clamped at zero.
  return relu(head_out_.forward(tape, y));
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (ConvLayer& layer : backbone_) layer.collect(out);
  for (SiTParams& block : blocks_) block.collect(out);
  head_hidden_.collect(out);
  head_out_.collect(out);
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  auto mutable_params = const_cast<Model*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

Parameter* Model::find(const std::string& name) {
  for (Parameter* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

void Model::zero_grad() {
  for (Parameter* p : parameters()) p->grad = Tensor(p->value.shape());
}

std::size_t param_count(const Model& model) {
  std::size_t total = 0;
  for (const Parameter* p : model.parameters()) total += p->value.size();
  return total;
}

namespace {

constexpr std::array<char, 4> kMagic{'S', 'C', 'S', 'I'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint writer assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw IoError("checkpoint truncated");
  }
  return v;
}

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  const auto params = model.parameters();
  out.write(kMagic.data(), kMagic.size());
  put<std::uint16_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    const Shape s = p->value.shape();
    for (int d : {s.n, s.c, s.h, s.w}) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : p->value.values()) put<float>(out, static_cast<float>(v));
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

void load_checkpoint(Model& model, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError(path.string() + " is not a checkpoint (bad magic)");
  }
  if (const auto version = get<std::uint16_t>(in); version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get<std::uint32_t>(in);

  std::map<std::string, Tensor> loaded;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get<std::uint16_t>(in), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) {
      throw IoError("checkpoint truncated");
    }
    Shape s;
    s.n = static_cast<int>(get<std::uint32_t>(in));
    s.c = static_cast<int>(get<std::uint32_t>(in));
    s.h = static_cast<int>(get<std::uint32_t>(in));
    s.w = static_cast<int>(get<std::uint32_t>(in));
    Tensor t(s);
    for (double& v : t.values()) v = get<float>(in);
    loaded.emplace(std::move(name), std::move(t));
  }

  const auto params = model.parameters();
  if (params.size() != loaded.size()) {
    throw ConfigError("checkpoint has " + std::to_string(loaded.size()) +
                      " parameters, model has " + std::to_string(params.size()));
  }
  for (Parameter* p : params) {
    auto it = loaded.find(p->name);
    if (it == loaded.end()) {
      throw ConfigError("checkpoint lacks parameter " + p->name);
    }
    if (it->second.shape() != p->value.shape()) {
      throw ConfigError("parameter " + p->name + " has shape " +
                        it->second.shape().str() + " in checkpoint, " +
                        p->value.shape().str() + " in model");
    }
  }
  for (Parameter* p : params) p->value = std::move(loaded.at(p->name));
}

}  // namespace scalecount

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

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "scalecount/error.hpp"
#include "scalecount/layers.hpp"
#include "scalecount/network.hpp"
#include "scalecount/training.hpp"
#include "support.hpp"

namespace scalecount {
namespace {

using testing::random_tensor;
using testing::scratch_dir;

NetworkConfig small_config(int blocks = 2) {
  NetworkConfig cfg;
  cfg.sit_count = blocks;
  return cfg;
}

Model make(const NetworkConfig& cfg, std::uint64_t seed = 1) {
  Rng rng = make_stream(seed, "init");
  return build_network(cfg, rng);
}

std::size_t conv_params(int in, int out, int k) {
  return static_cast<std::size_t>(in) * out * k * k + out;
}

// Closed-form parameter count, independent of the model's own bookkeeping.
std::size_t expected_params(const NetworkConfig& cfg) {
  std::size_t total = 0;
  int ch = cfg.input_channels;
  for (const BackboneStage& s : cfg.backbone) {
    total += conv_params(ch, s.channels, 3);
    ch = s.channels;
  }
  const int w = cfg.sit.group_width;
  const int paths = cfg.sit.groups == 1 ? 1 : cfg.sit.groups - 1;
  for (int l = 0; l < cfg.sit_count; ++l) {
    const int in = l == 0 ? ch : (cfg.dense ? ch + 256 * l : 256);
    total += conv_params(in, cfg.sit.groups * w, 1);
    total += paths * conv_params(w, w, 3);
    total += conv_params(cfg.sit.groups * w, 256, 1);
    if (cfg.sit.residual && in != 256) total += conv_params(in, 256, 1);
  }
  total += conv_params(256, cfg.head_channels, 3) + conv_params(cfg.head_channels, 1, 3);
  return total;
}

TEST_CASE("forward shape follows the stride") {
  Model m = make(small_config());
  Rng rng(41);
  Tape tape;
  const Var y = m.forward(tape, random_tensor(Shape{4, 1, 48, 48}, rng, 0, 1), Phase::kTrain, rng);
  CHECK(m.config().stride() == 4);
  CHECK(y.shape() == Shape{4, 1, 12, 12});
  Tape other;
  CHECK_THROWS_AS(m.forward(other, Tensor(Shape{1, 1, 50, 48}), Phase::kEval, rng), ShapeError);
}

TEST_CASE("eval phase is deterministic and outputs are non-negative") {
  NetworkConfig cfg = small_config();
  cfg.init_stddev = 0.05;
  Model m = make(cfg);
  Rng rng(42);
  const Tensor x = random_tensor(Shape{2, 1, 32, 32}, rng, -1, 1);
  Rng a(1), b(2);
  Tape t1, t2;
  const Tensor y1 = m.forward(t1, x, Phase::kEval, a).value();
  const Tensor y2 = m.forward(t2, x, Phase::kEval, b).value();
  CHECK(std::equal(y1.values().begin(), y1.values().end(), y2.values().begin()));
  for (int trial = 0; trial < 3; ++trial) {
    Tape t;
    for (double v : m.forward(t, x, Phase::kTrain, rng).value().values()) CHECK(v >= 0.0);
  }
}

TEST_CASE("dense block inputs grow by 256 per block") {
  const NetworkConfig cfg;
  CHECK(cfg.backbone_channels() == 128);
  CHECK(cfg.sit_input_channels(0) == 128);
  CHECK(cfg.sit_input_channels(3) == 128 + 3 * 256);
  NetworkConfig sparse;
  sparse.dense = false;
  CHECK(sparse.sit_input_channels(0) == 128);
  CHECK(sparse.sit_input_channels(3) == 256);
  const Model m = make(cfg);
  CHECK(m.block(3).in_channels == 896);
}

TEST_CASE("build_network is deterministic under a seed") {
  const Model a = make(small_config(), 3);
  const Model b = make(small_config(), 3);
  const Model c = make(small_config(), 4);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  const auto pc = c.parameters();
  REQUIRE(pa.size() == pb.size());
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->name == pb[i]->name);
    CHECK(std::equal(pa[i]->value.values().begin(), pa[i]->value.values().end(),
                     pb[i]->value.values().begin()));
    differs = differs || !std::equal(pa[i]->value.values().begin(), pa[i]->value.values().end(),
                                     pc[i]->value.values().begin());
  }
  CHECK(differs);
}

TEST_CASE("weights start as N(0, 0.01^2) and biases at zero") {
  const Model m = make(NetworkConfig{});
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const Parameter* p : m.parameters()) {
    if (p->name.ends_with(".bias")) {
      for (double v : p->value.values()) CHECK(v == 0.0);
      continue;
    }
    for (double v : p->value.values()) {
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean) < 1e-4);
  CHECK(sd == doctest::Approx(0.01).epsilon(0.01));
}

TEST_CASE("parameter names are unique") {
  const Model m = make(NetworkConfig{});
  std::vector<std::string> names;
  for (const Parameter* p : m.parameters()) names.push_back(p->name);
  std::sort(names.begin(), names.end());
  CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
}

TEST_CASE("param_count") {
  ConvLayer one("c", ConvSpec{64, 64, 1, 1, 1});
  CHECK(one.weight.value.size() + one.bias.value.size() == 4160);

  NetworkConfig cfg;
  std::size_t counts[3];
  int i = 0;
  for (int g : {4, 6, 8}) {
    cfg.sit.groups = g;
    const Model m = make(cfg);
    counts[i++] = param_count(m);
    CHECK(param_count(m) == expected_params(cfg));
  }
  CHECK(counts[2] > counts[1]);
  CHECK(counts[1] > counts[0]);

  cfg.sit.groups = 6;
  const std::size_t stochastic = param_count(make(cfg));
  cfg.sit.mixer = MixerMode::kDisabled;
  CHECK(param_count(make(cfg)) == stochastic);
  cfg.sit.mixer = MixerMode::kFixed;
  cfg.sit.fixed_alpha = 1.0;
  CHECK(param_count(make(cfg)) == stochastic);
}

TEST_CASE("ablation variants build and run") {
  Rng rng(43);
  const Tensor x = random_tensor(Shape{1, 1, 16, 16}, rng, 0, 1);
  NetworkConfig full = small_config(3);
  NetworkConfig no_inter = full;
  no_inter.dense = false;
  NetworkConfig no_intra = full;
  no_intra.sit.groups = 1;
  NetworkConfig disabled = full;
  disabled.sit.mixer = MixerMode::kDisabled;
  NetworkConfig fixed_one = full;
  fixed_one.sit.mixer = MixerMode::kFixed;
  fixed_one.sit.fixed_alpha = 1.0;
  for (const NetworkConfig& cfg : {full, no_inter, no_intra, disabled, fixed_one}) {
    Model m = make(cfg);
    CHECK(param_count(m) == expected_params(cfg));
    Tape tape;
    const Var y = m.forward(tape, x, Phase::kTrain, rng);
    CHECK(y.shape() == Shape{1, 1, 4, 4});
    CHECK(y.value().all_finite());
  }
  CHECK(param_count(make(no_inter)) < param_count(make(full)));
  CHECK(param_count(make(no_intra)) < param_count(make(full)));
}

TEST_CASE("inconsistent configs are rejected") {
  NetworkConfig cfg;
  cfg.sit_count = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.backbone.back().channels = 256;
  CHECK_NOTHROW(cfg.validate());
  NetworkConfig wide;
  wide.sit.out_channels = 128;
  CHECK_THROWS_AS(wide.validate(), ConfigError);
  NetworkConfig bad_init;
  bad_init.init_stddev = 0.0;
  CHECK_THROWS_AS(bad_init.validate(), ConfigError);
}

TEST_CASE("checkpoint round trip is exact at f32") {
  const auto dir = scratch_dir("ckpt");
  Model a = make(small_config(), 5);
  save_checkpoint(a, dir / "a.ckpt");
  Model b = make(small_config(), 6);
  load_checkpoint(b, dir / "a.ckpt");
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t k = 0; k < pa[i]->value.size(); ++k) {
      CHECK(pb[i]->value[k] == static_cast<double>(static_cast<float>(pa[i]->value[k])));
    }
  }
  // Saving what was loaded reproduces the file byte for byte.
  save_checkpoint(b, dir / "b.ckpt");
  std::ifstream fa(dir / "a.ckpt", std::ios::binary), fb(dir / "b.ckpt", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(sa == sb);
  CHECK(sa.substr(0, 4) == "SCSI");
}

TEST_CASE("checkpoint errors") {
  const auto dir = scratch_dir("ckpt_errors");
  Model two = make(small_config(2));
  save_checkpoint(two, dir / "two.ckpt");

  Model three = make(small_config(3));
  CHECK_THROWS_AS(load_checkpoint(three, dir / "two.ckpt"), ConfigError);
  NetworkConfig g4 = small_config(2);
  g4.sit.groups = 4;
  Model other = make(g4);
  CHECK_THROWS_AS(load_checkpoint(other, dir / "two.ckpt"), ConfigError);

  std::ofstream(dir / "junk.ckpt") << "JUNKJUNK";
  CHECK_THROWS_AS(load_checkpoint(two, dir / "junk.ckpt"), IoError);
  std::ifstream in(dir / "two.ckpt", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  std::ofstream(dir / "short.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  CHECK_THROWS_AS(load_checkpoint(two, dir / "short.ckpt"), IoError);
  CHECK_THROWS_AS(load_checkpoint(two, dir / "missing.ckpt"), IoError);
}

TEST_CASE("grad_check: integrated loss through a one-block network") {
  NetworkConfig cfg = small_config(1);
  cfg.init_stddev = 0.05;
  Model m = make(cfg, 7);
  if (Parameter* b = m.find("head.conv1.bias")) b->value[0] = 0.05;
  Rng rng(44);
  const Tensor x = random_tensor(Shape{2, 1, 16, 16}, rng, -0.5, 0.5);
  Tensor gt(Shape{2, 1, 4, 4});
  for (double& v : gt.values()) v = 0.2 * uniform01(rng);
  const auto draws = m.draw_all(rng, Phase::kTrain);
  auto params = m.parameters();
  Rng coords(45);
  CHECK(grad_check_params([&](Tape& t) { return loss_integrated(m.forward(t, x, draws), gt); },
                          params, 1e-5, 3, coords) < 1e-4);
}

}  // namespace
}  // namespace scalecount

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

#include "scalecount/config.hpp"

#include <fstream>
#include <sstream>

#include "scalecount/error.hpp"

namespace scalecount {
namespace {

bool compatible(const Json& expected, const Json& given) {
  if (expected.is_number_float()) return given.is_number();
  if (expected.is_number_unsigned()) return given.is_number_unsigned();
  if (expected.is_number_integer()) return given.is_number_integer();
  return expected.type() == given.type();
}

const char* type_name(const Json& v) {
  if (v.is_number_float()) return "number";
  if (v.is_number_unsigned()) return "non-negative integer";
  if (v.is_number_integer()) return "integer";
  return v.type_name();
}

LossMode parse_loss(const std::string& text) {
  if (text == "integrated") return LossMode::kIntegrated;
  if (text == "averaged") return LossMode::kAveraged;
  throw ConfigError("loss must be 'integrated' or 'averaged', got '" + text + "'");
}

GroundTruthConfig::Mode parse_gt_mode(const std::string& text) {
  if (text == "fixed") return GroundTruthConfig::Mode::kFixed;
  if (text == "adaptive") return GroundTruthConfig::Mode::kAdaptive;
  throw ConfigError("gt mode must be 'fixed' or 'adaptive', got '" + text + "'");
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) parts.push_back(item);
  return parts;
}

}  // namespace

Json default_config() {
  return Json{
      {"seed", 0u},
      // training
      {"lr", 1e-4},
      {"batch", 4},
      {"patch", 48},
      {"iterations", 0},
      {"loss", "integrated"},
      {"flip", true},
      {"checkpoint_every", 0},
      // network
      {"backbone", "32p,64p,128"},
      {"sit_count", 6},
      {"groups", 6},
      {"group_width", 64},
      {"mixer", "stochastic"},
      {"dense", true},
      {"residual", true},
      {"head_channels", 128},
      {"init_stddev", 0.01},
      // ground truth
      {"gt_mode", "adaptive"},
      {"gt_sigma", kFallbackSigma},
      {"gt_beta", 0.3},
      {"gt_k", 3},
      // synthetic corpus
      {"images", 200},
      {"val_images", 20},
      {"test_images", 20},
      {"width", 96},
      {"height", 96},
      {"min_count", 5},
      {"max_count", 60},
      {"top_radius", 1.5},
      {"bottom_radius", 4.0},
      {"profile", "uniform"},
      {"noise_level", 0.05},
      // inputs and outputs
      {"manifest", ""},
      {"checkpoint", ""},
      {"annotation", ""},
      {"in", ""},
      {"out", "."},
      {"split", "test"},
      {"ratios", "1,0.81,0.64,0.49,0.36,0.25,0.16"},
      {"draws", 10000},
  };
}

Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json cfg;
  try {
    cfg = Json::parse(in);
  } catch (const Json::parse_error& ex) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " +
                      ex.what());
  }
  if (cfg.is_object() && cfg.contains("args") && cfg.contains("command")) {
    cfg = cfg["args"];
  }
  if (!cfg.is_object()) {
    throw ConfigError("config file " + path.string() + " must hold a JSON object");
  }
  return cfg;
}

void merge_config(Json& base, const Json& overrides) {
  for (const auto& [key, value] : overrides.items()) {
    if (!base.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    const Json& expected = base[key];
    if (!compatible(expected, value)) {
      throw ConfigError("config key '" + key + "' expects a " +
                        type_name(expected) + ", got " + value.dump());
    }
    base[key] = expected.is_number_float() ? Json(value.get<double>()) : value;
  }
}

void parse_mixer(const std::string& text, SiTConfig& sit) {
  if (text == "stochastic") {
    sit.mixer = MixerMode::kStochastic;
  } else if (text == "off") {
    sit.mixer = MixerMode::kDisabled;
  } else if (text.starts_with("fixed:")) {
    double alpha = 0.0;
    try {
      std::size_t used = 0;
      alpha = std::stod(text.substr(6), &used);
      if (used != text.size() - 6) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw ConfigError("mixer weight in '" + text + "' is not a number");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw ConfigError("fixed mixer weight must lie in [0, 1]");
    }
    sit.mixer = MixerMode::kFixed;
    sit.fixed_alpha = alpha;
  } else {
    throw ConfigError("mixer must be 'stochastic', 'off' or 'fixed:V', got '" +
                      text + "'");
  }
}

std::string mixer_string(const SiTConfig& sit) {
  switch (sit.mixer) {
    case MixerMode::kStochastic:
      return "stochastic";
    case MixerMode::kDisabled:
      return "off";
    case MixerMode::kFixed: {
      std::ostringstream out;
      out << "fixed:" << sit.fixed_alpha;
      return out.str();
    }
  }
  return "stochastic";
}

std::vector<BackboneStage> parse_backbone(const std::string& text) {
  std::vector<BackboneStage> stages;
  for (std::string item : split_commas(text)) {
    BackboneStage stage;
    if (!item.empty() && item.back() == 'p') {
      stage.pool = true;
      item.pop_back();
    }
    try {
      std::size_t used = 0;
      stage.channels = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad backbone stage '" + item + "' in '" + text + "'");
    }
    stages.push_back(stage);
  }
  if (stages.empty()) throw ConfigError("backbone needs at least one stage");
  return stages;
}

std::string backbone_string(const std::vector<BackboneStage>& stages) {
  std::string out;
  for (const BackboneStage& s : stages) {
    if (!out.empty()) out += ',';
    out += std::to_string(s.channels);
    if (s.pool) out += 'p';
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  for (const std::string& item : split_commas(text)) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in list '" + text + "'");
    }
  }
  return values;
}

NetworkConfig network_config(const Json& cfg) {
  NetworkConfig net;
  net.backbone = parse_backbone(cfg.at("backbone").get<std::string>());
  net.sit_count = cfg.at("sit_count").get<int>();
  net.sit.groups = cfg.at("groups").get<int>();
  net.sit.group_width = cfg.at("group_width").get<int>();
  net.sit.residual = cfg.at("residual").get<bool>();
  parse_mixer(cfg.at("mixer").get<std::string>(), net.sit);
  net.dense = cfg.at("dense").get<bool>();
  net.head_channels = cfg.at("head_channels").get<int>();
  net.init_stddev = cfg.at("init_stddev").get<double>();
  net.seed = cfg.at("seed").get<std::uint64_t>();
  net.validate();
  return net;
}

GroundTruthConfig gt_config(const Json& cfg) {
  GroundTruthConfig gt;
  gt.mode = parse_gt_mode(cfg.at("gt_mode").get<std::string>());
  gt.sigma = cfg.at("gt_sigma").get<double>();
  gt.beta = cfg.at("gt_beta").get<double>();
  gt.k = cfg.at("gt_k").get<int>();
  if (!(gt.sigma > 0.0)) throw ConfigError("gt_sigma must be > 0");
  if (!(gt.beta > 0.0)) throw ConfigError("gt_beta must be > 0");
  if (gt.k < 1) throw ConfigError("gt_k must be >= 1");
  return gt;
}

TrainConfig train_config(const Json& cfg) {
  TrainConfig train;
  train.lr = cfg.at("lr").get<double>();
  train.batch = cfg.at("batch").get<int>();
  train.patch = cfg.at("patch").get<int>();
  train.iterations = cfg.at("iterations").get<int>();
  train.loss = parse_loss(cfg.at("loss").get<std::string>());
  train.flip = cfg.at("flip").get<bool>();
  train.seed = cfg.at("seed").get<std::uint64_t>();
  train.checkpoint_every = cfg.at("checkpoint_every").get<int>();
  train.gt = gt_config(cfg);
  return train;
}

CorpusSpec corpus_spec(const Json& cfg) {
  CorpusSpec spec;
  spec.images = cfg.at("images").get<int>();
  spec.val_images = cfg.at("val_images").get<int>();
  spec.test_images = cfg.at("test_images").get<int>();
  SceneParams& s = spec.scene;
  s.width = cfg.at("width").get<int>();
  s.height = cfg.at("height").get<int>();
  s.min_count = cfg.at("min_count").get<int>();
  s.max_count = cfg.at("max_count").get<int>();
  s.top_radius = cfg.at("top_radius").get<double>();
  s.bottom_radius = cfg.at("bottom_radius").get<double>();
  s.profile = parse_profile(cfg.at("profile").get<std::string>());
  s.noise_level = cfg.at("noise_level").get<double>();
  s.seed = cfg.at("seed").get<std::uint64_t>();
  s.validate();
  return spec;
}

}  // namespace scalecount

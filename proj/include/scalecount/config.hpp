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

#ifndef SCALECOUNT_CONFIG_HPP_
#define SCALECOUNT_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "scalecount/groundtruth.hpp"
#include "scalecount/network.hpp"
#include "scalecount/synth.hpp"
#include "scalecount/training.hpp"

namespace scalecount {

using Json = nlohmann::ordered_json;

// Every run is described by one flat JSON object. default_config() lists all
// recognised keys with their defaults; the typed views below read from it.
Json default_config();

// Reads a JSON object from disk. A {"command": ..., "args": {...}} echo is
// unwrapped to its "args" so a previous run.json can be replayed. Missing or
// malformed files and unknown keys raise ConfigError.
Json load_config_file(const std::filesystem::path& path);

// Copies `overrides` onto `base`, checking every key is known and has the
// same JSON type as its default (integers are accepted where a float is
// expected).
void merge_config(Json& base, const Json& overrides);

// "stochastic", "off" or "fixed:V" with V in [0, 1].
void parse_mixer(const std::string& text, SiTConfig& sit);
std::string mixer_string(const SiTConfig& sit);

// Comma list of widths; a trailing 'p' marks a stage followed by 2x pooling,
// e.g. "32p,64p,128".
std::vector<BackboneStage> parse_backbone(const std::string& text);
std::string backbone_string(const std::vector<BackboneStage>& stages);

std::vector<double> parse_double_list(const std::string& text);

NetworkConfig network_config(const Json& cfg);
TrainConfig train_config(const Json& cfg);
GroundTruthConfig gt_config(const Json& cfg);
CorpusSpec corpus_spec(const Json& cfg);

}  // namespace scalecount

#endif  // SCALECOUNT_CONFIG_HPP_

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

#ifndef SCALECOUNT_SYNTH_HPP_
#define SCALECOUNT_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalecount/groundtruth.hpp"
#include "scalecount/grid.hpp"
#include "scalecount/rng.hpp"
#include "scalecount/tensor.hpp"

namespace scalecount {

enum class DensityProfile { kUniform, kTopHeavy, kClustered };

DensityProfile parse_profile(const std::string& name);
std::string profile_name(DensityProfile profile);

// Toy crowd scene: heads are bright discs whose radius grows linearly from
// top_radius at row 0 to bottom_radius at the last row, mimicking a camera
// looking down a street.
struct SceneParams {
  int width = 96;
  int height = 96;
  int min_count = 5;
  int max_count = 60;
  double top_radius = 1.5;
  double bottom_radius = 4.0;
  DensityProfile profile = DensityProfile::kUniform;
  double noise_level = 0.05;
  std::uint64_t seed = 0;

  double radius_at(double row) const;
  void validate() const;
};

struct Scene {
  Grid image;  // values are multiples of 1/255, so PGM round trips exactly
  Annotation annotation;
};

Scene synth_scene(const SceneParams& params, Rng& rng);

struct ManifestEntry {
  std::string image;
  std::string annotation;
  std::string split;  // "train", "val" or "test"
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path);

struct CorpusEntry {
  std::string id;
  std::string split;
  Grid image;
  std::optional<Annotation> annotation;
  DensityMap density;  // empty without an annotation
  std::string warning;
};

struct Corpus {
  std::string id;
  std::vector<CorpusEntry> entries;

  // Entries of one split, in manifest order.
  std::vector<const CorpusEntry*> split(const std::string& name) const;
};

// Loads images and annotations listed in a manifest (paths relative to the
// manifest's directory). A missing or unreadable annotation keeps the entry
// with a warning; a missing image is an IoError.
Corpus load_corpus(const std::filesystem::path& manifest,
                   const GroundTruthConfig& gt);

struct CorpusSpec {
  SceneParams scene;
  int images = 200;
  int val_images = 20;
  int test_images = 20;
};

// Scene i uses the stream ("scene", i) of scene.seed; the first
// images - val - test scenes are train, then val, then test.
Corpus generate_corpus(const CorpusSpec& spec, const GroundTruthConfig& gt,
                       const std::string& corpus_id);

// Writes <dir>/<id>.pgm, <dir>/<id>.json and <dir>/manifest.json.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// Random training crops with provenance.
struct PatchBatch {
  Tensor images;  // (N, 1, p, p)
  std::vector<DensityMap> gts;
  std::vector<std::size_t> sources;
  std::vector<std::pair<int, int>> offsets;  // (row, col) of the top-left
  std::vector<bool> flipped;
};

// Each patch picks a source uniformly with replacement among images at least
// p x p, then a uniform top-left corner, then (when flip is on) mirrors image
// and density together with probability 0.5. GT patches are cut from the
// full-image density, keeping partial border mass.
PatchBatch sample_patch_batch(std::span<const CorpusEntry* const> corpus,
                              int n, int patch, Rng& rng, bool flip);

}  // namespace scalecount

#endif  // SCALECOUNT_SYNTH_HPP_

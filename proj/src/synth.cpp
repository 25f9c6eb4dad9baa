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

#include "scalecount/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "scalecount/error.hpp"
#include "scalecount/image_io.hpp"

namespace scalecount {

DensityProfile parse_profile(const std::string& name) {
  if (name == "uniform") return DensityProfile::kUniform;
  if (name == "top-heavy") return DensityProfile::kTopHeavy;
  if (name == "clustered") return DensityProfile::kClustered;
  throw ConfigError("unknown density profile '" + name + "'");
}

std::string profile_name(DensityProfile profile) {
  switch (profile) {
    case DensityProfile::kUniform: return "uniform";
    case DensityProfile::kTopHeavy: return "top-heavy";
    case DensityProfile::kClustered: return "clustered";
  }
  return "uniform";
}

double SceneParams::radius_at(double row) const {
  const double t = height > 1 ? row / (height - 1) : 0.0;
  return top_radius + (bottom_radius - top_radius) * t;
}

void SceneParams::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("scene dims must be positive");
  if (min_count < 0 || max_count < min_count) {
    throw ConfigError("scene count range must satisfy 0 <= min <= max");
  }
  if (top_radius < 0.0 || bottom_radius < 0.0) {
    throw ConfigError("head radii must be non-negative");
  }
  const double widest = 2.0 * std::max(top_radius, bottom_radius) + 1.0;
  if (widest > std::min(width, height)) {
    throw ConfigError("head radius exceeds the image dims");
  }
  if (noise_level < 0.0) throw ConfigError("noise level must be >= 0");
}

namespace {

Point sample_position(const SceneParams& params, Rng& rng,
                      const std::vector<Point>& centres) {
  const double w = params.width;
  const double h = params.height;
  switch (params.profile) {
    case DensityProfile::kUniform:
      return {uniform01(rng) * w, uniform01(rng) * h};
    case DensityProfile::kTopHeavy: {
      // Row density falls linearly from the top edge to zero at the bottom.
      const double x = uniform01(rng) * w;
      const double y = h * (1.0 - std::sqrt(1.0 - uniform01(rng)));
      return {x, std::min(y, std::nextafter(h, 0.0))};
    }
    case DensityProfile::kClustered: {
      const auto& c = centres[static_cast<std::size_t>(
          uniform_int(rng, 0, static_cast<std::int64_t>(centres.size()) - 1))];
      const double spread = 0.08 * std::min(w, h);
      for (;;) {
        const Point p{c.x + spread * standard_normal(rng),
                      c.y + spread * standard_normal(rng)};
        if (p.x >= 0.0 && p.x < w && p.y >= 0.0 && p.y < h) return p;
      }
    }
  }
  return {0.0, 0.0};
}

}  // namespace

Scene synth_scene(const SceneParams& params, Rng& rng) {
  params.validate();
  Scene scene;
  scene.annotation.width = params.width;
  scene.annotation.height = params.height;

  const auto count = uniform_int(rng, params.min_count, params.max_count);
  std::vector<Point> centres;
  if (params.profile == DensityProfile::kClustered) {
    const auto clusters = uniform_int(rng, 1, 3);
    for (std::int64_t i = 0; i < clusters; ++i) {
      centres.push_back({(0.15 + 0.7 * uniform01(rng)) * params.width,
                         (0.15 + 0.7 * uniform01(rng)) * params.height});
    }
  }
  for (std::int64_t i = 0; i < count; ++i) {
    scene.annotation.points.push_back(sample_position(params, rng, centres));
  }

  Grid image(params.height, params.width, 0.25);
  for (double& v : image.values()) {
    v += params.noise_level * (2.0 * uniform01(rng) - 1.0);
  }
  for (const Point& p : scene.annotation.points) {
    const double radius = params.radius_at(p.y);
    const int r0 = std::max(0, static_cast<int>(std::floor(p.y - radius)));
    const int r1 = std::min(params.height - 1, static_cast<int>(std::ceil(p.y + radius)));
    const int c0 = std::max(0, static_cast<int>(std::floor(p.x - radius)));
    const int c1 = std::min(params.width - 1, static_cast<int>(std::ceil(p.x + radius)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const double dx = c + 0.5 - p.x;
        const double dy = r + 0.5 - p.y;
        if (dx * dx + dy * dy <= radius * radius + 0.25) image.at(r, c) += 0.5;
      }
    }
  }
  for (double& v : image.values()) {
    v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  }
  scene.image = std::move(image);
  return scene;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> entries;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    for (const auto& e : j) {
      ManifestEntry entry{e.at("image").get<std::string>(),
                          e.at("annotation").get<std::string>(),
                          e.at("split").get<std::string>()};
      if (entry.split != "train" && entry.split != "val" && entry.split != "test") {
        throw IoError("manifest split must be train, val or test, got '" +
                      entry.split + "'");
      }
      entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
  return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const ManifestEntry& e : entries) {
    j.push_back({{"image", e.image}, {"annotation", e.annotation}, {"split", e.split}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << j.dump(1) << '\n';
}

std::vector<const CorpusEntry*> Corpus::split(const std::string& name) const {
  std::vector<const CorpusEntry*> out;
  for (const CorpusEntry& e : entries) {
    if (e.split == name) out.push_back(&e);
  }
  return out;
}

Corpus load_corpus(const std::filesystem::path& manifest,
                   const GroundTruthConfig& gt) {
  Corpus corpus;
  corpus.id = manifest.parent_path().filename().string();
  const auto base = manifest.parent_path();
  for (const ManifestEntry& m : read_manifest(manifest)) {
    CorpusEntry e;
    e.id = std::filesystem::path(m.image).stem().string();
    e.split = m.split;
    e.image = read_pgm(base / m.image);
    try {
      e.annotation = read_annotation(base / m.annotation);
      e.density = make_density(*e.annotation, gt);
    } catch (const std::exception& ex) {
      e.annotation.reset();
      e.warning = ex.what();
    }
    corpus.entries.push_back(std::move(e));
  }
  return corpus;
}

Corpus generate_corpus(const CorpusSpec& spec, const GroundTruthConfig& gt,
                       const std::string& corpus_id) {
  if (spec.images < 0 || spec.val_images < 0 || spec.test_images < 0 ||
      spec.val_images + spec.test_images > spec.images) {
    throw ConfigError("corpus split sizes exceed the image count");
  }
  const int train = spec.images - spec.val_images - spec.test_images;
  Corpus corpus;
  corpus.id = corpus_id;
  for (int i = 0; i < spec.images; ++i) {
    Rng rng = make_stream(spec.scene.seed, "scene", static_cast<std::uint64_t>(i));
    Scene scene = synth_scene(spec.scene, rng);
    CorpusEntry e;
    std::ostringstream id;
    id << "img" << std::setw(4) << std::setfill('0') << i;
    e.id = id.str();
    e.split = i < train ? "train" : (i < train + spec.val_images ? "val" : "test");
    e.density = make_density(scene.annotation, gt);
    e.annotation = std::move(scene.annotation);
    e.image = std::move(scene.image);
    corpus.entries.push_back(std::move(e));
  }
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> manifest;
  for (const CorpusEntry& e : corpus.entries) {
    write_pgm(e.image, dir / (e.id + ".pgm"));
    if (e.annotation) write_annotation(*e.annotation, dir / (e.id + ".json"));
    manifest.push_back({e.id + ".pgm", e.id + ".json", e.split});
  }
  write_manifest(manifest, dir / "manifest.json");
}

PatchBatch sample_patch_batch(std::span<const CorpusEntry* const> corpus,
                              int n, int patch, Rng& rng, bool flip) {
  if (n < 1) throw ArgumentError("batch size must be >= 1");
  if (patch < 1) throw ArgumentError("patch size must be >= 1");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const CorpusEntry& e = *corpus[i];
    if (e.annotation && e.image.rows() >= patch && e.image.cols() >= patch) {
      eligible.push_back(i);
    }
  }
  if (eligible.empty()) {
    throw ArgumentError("no annotated image is at least " +
                        std::to_string(patch) + "x" + std::to_string(patch));
  }

  PatchBatch batch;
  batch.images = Tensor(Shape{n, 1, patch, patch});
  const std::size_t plane = static_cast<std::size_t>(patch) * patch;
  for (int b = 0; b < n; ++b) {
    const std::size_t src = eligible[static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<std::int64_t>(eligible.size()) - 1))];
    const CorpusEntry& e = *corpus[src];
    const int top = static_cast<int>(uniform_int(rng, 0, e.image.rows() - patch));
    const int left = static_cast<int>(uniform_int(rng, 0, e.image.cols() - patch));
    const bool mirror = flip && uniform01(rng) < 0.5;

    Grid img = e.image.crop(top, left, patch, patch);
    DensityMap gt = e.density.crop(top, left, patch, patch);
    if (mirror) {
      img = img.mirrored();
      gt = gt.mirrored();
    }
    std::copy(img.values().begin(), img.values().end(),
              batch.images.data() + b * plane);
    batch.gts.push_back(std::move(gt));
    batch.sources.push_back(src);
    batch.offsets.emplace_back(top, left);
    batch.flipped.push_back(mirror);
  }
  return batch;
}

}  // namespace scalecount

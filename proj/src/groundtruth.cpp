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

#include "scalecount/groundtruth.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "scalecount/error.hpp"

namespace scalecount {

void Annotation::validate() const {
  if (width <= 0 || height <= 0) {
    throw ArgumentError("annotation image dims must be positive, got " +
                        std::to_string(width) + "x" + std::to_string(height));
  }
  for (const Point& p : points) {
    if (!(p.x >= 0.0 && p.x < width && p.y >= 0.0 && p.y < height)) {
      throw ArgumentError("point (" + std::to_string(p.x) + ", " +
                          std::to_string(p.y) + ") outside " +
                          std::to_string(width) + "x" + std::to_string(height));
    }
  }
}

namespace {

void splat(DensityMap& map, const Point& p, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const int cx = static_cast<int>(std::floor(p.x));
  const int cy = static_cast<int>(std::floor(p.y));
  const int r0 = std::max(0, cy - radius);
  const int r1 = std::min(map.rows() - 1, cy + radius);
  const int c0 = std::max(0, cx - radius);
  const int c1 = std::min(map.cols() - 1, cx + radius);
  const double inv = 1.0 / (2.0 * sigma * sigma);

  std::vector<double> kernel;
  kernel.reserve(static_cast<std::size_t>(r1 - r0 + 1) * (c1 - c0 + 1));
  double mass = 0.0;
  for (int r = r0; r <= r1; ++r) {
    const double dy = r + 0.5 - p.y;
    for (int c = c0; c <= c1; ++c) {
      const double dx = c + 0.5 - p.x;
      const double v = std::exp(-(dx * dx + dy * dy) * inv);
      kernel.push_back(v);
      mass += v;
    }
  }
  std::size_t i = 0;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) map.at(r, c) += kernel[i++] / mass;
  }
}

}  // namespace

DensityMap density_fixed(const Annotation& ann, double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("sigma must be > 0");
  ann.validate();
  DensityMap map(ann.height, ann.width);
  for (const Point& p : ann.points) splat(map, p, sigma);
  return map;
}

std::vector<double> knn_mean_distance(std::span<const Point> points, int k) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  if (points.size() <= static_cast<std::size_t>(k)) {
    throw ArgumentError("k-NN needs more than " + std::to_string(k) +
                        " points, got " + std::to_string(points.size()));
  }
  std::vector<double> means(points.size());
  std::vector<double> dist;
  dist.reserve(points.size() - 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    dist.clear();
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      dist.push_back(std::hypot(points[i].x - points[j].x,
                                points[i].y - points[j].y));
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    double total = 0.0;
    for (int j = 0; j < k; ++j) total += dist[j];
    means[i] = total / k;
  }
  return means;
}

std::vector<double> adaptive_sigmas(std::span<const Point> points, double beta,
                                    int k) {
  if (points.size() <= static_cast<std::size_t>(k)) return {};
  std::vector<double> sigmas = knn_mean_distance(points, k);
  for (double& s : sigmas) {
    s = std::clamp(beta * s, kMinAdaptiveSigma, kMaxAdaptiveSigma);
  }
  return sigmas;
}

DensityMap density_adaptive(const Annotation& ann, double beta, int k,
                            double fallback_sigma) {
  if (!(beta > 0.0)) throw ArgumentError("beta must be > 0");
  ann.validate();
  if (ann.points.size() <= static_cast<std::size_t>(std::max(k, 0))) {
    return density_fixed(ann, fallback_sigma);
  }
  const std::vector<double> sigmas = adaptive_sigmas(ann.points, beta, k);
  DensityMap map(ann.height, ann.width);
  for (std::size_t i = 0; i < ann.points.size(); ++i) {
    splat(map, ann.points[i], sigmas[i]);
  }
  return map;
}

DensityMap make_density(const Annotation& ann, const GroundTruthConfig& cfg) {
  return cfg.mode == GroundTruthConfig::Mode::kFixed
             ? density_fixed(ann, cfg.sigma)
             : density_adaptive(ann, cfg.beta, cfg.k, cfg.sigma);
}

Annotation read_annotation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotation " + path.string());
  Annotation ann;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    ann.width = j.at("width").get<int>();
    ann.height = j.at("height").get<int>();
    for (const auto& p : j.at("points")) {
      ann.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed annotation " + path.string() + ": " + e.what());
  }
  ann.validate();
  return ann;
}

void write_annotation(const Annotation& ann, const std::filesystem::path& path) {
  nlohmann::json j;
  j["width"] = ann.width;
  j["height"] = ann.height;
  j["points"] = nlohmann::json::array();
  for (const Point& p : ann.points) j["points"].push_back({p.x, p.y});
  std::ofstream out(path);
  if (!out) throw IoError("cannot write annotation " + path.string());
  out << j.dump() << '\n';
}

namespace {

constexpr std::array<char, 4> kDensityMagic{'D', 'M', 'A', 'P'};

}  // namespace

void write_density(const DensityMap& map, const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write density map " + path.string());
  out.write(kDensityMagic.data(), kDensityMagic.size());
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(map.rows()),
                                 static_cast<std::uint32_t>(map.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  std::vector<float> data(map.values().begin(), map.values().end());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw IoError("failed writing density map " + path.string());
}

DensityMap read_density(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open density map " + path.string());
  std::array<char, 4> magic{};
  std::uint32_t dims[2] = {0, 0};
  if (!in.read(magic.data(), magic.size()) || magic != kDensityMagic) {
    throw IoError(path.string() + " is not a density map (bad magic)");
  }
  if (!in.read(reinterpret_cast<char*>(dims), sizeof(dims))) {
    throw IoError("density map truncated");
  }
  std::vector<float> data(static_cast<std::size_t>(dims[0]) * dims[1]);
  if (!in.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(data.size() * sizeof(float)))) {
    throw IoError("density map truncated");
  }
  return DensityMap(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                    std::vector<double>(data.begin(), data.end()));
}

}  // namespace scalecount

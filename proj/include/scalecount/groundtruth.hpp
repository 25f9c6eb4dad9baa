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

#ifndef SCALECOUNT_GROUNDTRUTH_HPP_
#define SCALECOUNT_GROUNDTRUTH_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scalecount/grid.hpp"

namespace scalecount {

// Head position in pixel coordinates; pixel (r, c) covers [c, c+1) x [r, r+1).
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct Annotation {
  int width = 0;
  int height = 0;
  std::vector<Point> points;

  std::size_t count() const { return points.size(); }
  // Throws ArgumentError for non-positive dims or points outside the image.
  void validate() const;
};

// Persons per pixel; sums to the annotated count.
using DensityMap = Grid;

// Clamp range for geometry-adaptive kernel widths, in pixels.
inline constexpr double kMinAdaptiveSigma = 0.5;
inline constexpr double kMaxAdaptiveSigma = 50.0;
// Kernel width used when there are too few points for a k-NN estimate.
inline constexpr double kFallbackSigma = 15.0;

// Sum of unit-mass Gaussians, one per point. Each kernel is evaluated at
// pixel centres inside a (2*ceil(3 sigma)+1)^2 window, clipped to the image
// and renormalised so every point contributes exactly 1.
DensityMap density_fixed(const Annotation& ann, double sigma);

// Mean Euclidean distance from each point to its k nearest other points.
// Throws ArgumentError when points.size() <= k or k < 1.
std::vector<double> knn_mean_distance(std::span<const Point> points, int k);

// sigma_i = beta * knn_mean_distance(i), clamped to
// [kMinAdaptiveSigma, kMaxAdaptiveSigma]. Empty when points.size() <= k.
std::vector<double> adaptive_sigmas(std::span<const Point> points, double beta,
                                    int k);

// Geometry-adaptive density; falls back to density_fixed(fallback_sigma)
// when there are k or fewer points.
DensityMap density_adaptive(const Annotation& ann, double beta, int k,
                            double fallback_sigma = kFallbackSigma);

// Generator selection shared by the CLI, corpus loading and training.
struct GroundTruthConfig {
  enum class Mode { kFixed, kAdaptive };
  Mode mode = Mode::kAdaptive;
  double sigma = kFallbackSigma;
  double beta = 0.3;
  int k = 3;
};

DensityMap make_density(const Annotation& ann, const GroundTruthConfig& cfg);

// JSON {"width": W, "height": H, "points": [[x, y], ...]}.
Annotation read_annotation(const std::filesystem::path& path);
void write_annotation(const Annotation& ann, const std::filesystem::path& path);

// "DMAP", u32 rows, u32 cols, rows*cols f32, little-endian row-major.
void write_density(const DensityMap& map, const std::filesystem::path& path);
DensityMap read_density(const std::filesystem::path& path);

}  // namespace scalecount

#endif  // SCALECOUNT_GROUNDTRUTH_HPP_

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

#ifndef SCALECOUNT_GRID_HPP_
#define SCALECOUNT_GRID_HPP_

#include <cstddef>
#include <vector>

namespace scalecount {

// Row-major 2-D array of doubles: grayscale images and density maps.
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, double fill = 0.0);
  Grid(int rows, int cols, std::vector<double> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int r, int c) {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double at(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double sum() const;
  double max() const;

  // Window [r0, r0+rows) x [c0, c0+cols); must lie inside the grid.
  Grid crop(int r0, int c0, int rows, int cols) const;
  // Left-right mirror.
  Grid mirrored() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Bilinear resampling with half-pixel centres. Output dims are
// round(scale * input dims); scale 1 reproduces the input exactly. Throws
// ArgumentError for scale outside (0, 1] or a resulting dim below 8.
Grid bilinear_resize(const Grid& image, double scale);

}  // namespace scalecount

#endif  // SCALECOUNT_GRID_HPP_

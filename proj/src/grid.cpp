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

#include "scalecount/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "scalecount/error.hpp"

namespace scalecount {

Grid::Grid(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw ShapeError("negative grid dimension");
  data_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

Grid::Grid(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (rows < 0 || cols < 0 ||
      data_.size() != static_cast<std::size_t>(rows) * cols) {
    throw ShapeError("grid value count does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

double Grid::sum() const {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

double Grid::max() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

Grid Grid::crop(int r0, int c0, int rows, int cols) const {
  if (r0 < 0 || c0 < 0 || rows < 0 || cols < 0 || r0 + rows > rows_ ||
      c0 + cols > cols_) {
    throw ShapeError("crop window outside grid");
  }
  Grid out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    std::copy_n(&data_[static_cast<std::size_t>(r0 + r) * cols_ + c0], cols,
                &out.at(r, 0));
  }
  return out;
}

Grid Grid::mirrored() const {
  Grid out(rows_, cols_);
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) out.at(r, c) = at(r, cols_ - 1 - c);
  }
  return out;
}

Grid bilinear_resize(const Grid& image, double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) {
    throw ArgumentError("resize scale must lie in (0, 1]");
  }
  const int out_rows = static_cast<int>(std::lround(scale * image.rows()));
  const int out_cols = static_cast<int>(std::lround(scale * image.cols()));
  if (out_rows < 8 || out_cols < 8) {
    throw ArgumentError("resized grid would be " + std::to_string(out_rows) +
                        "x" + std::to_string(out_cols) + ", below 8 pixels");
  }
  if (out_rows == image.rows() && out_cols == image.cols()) return image;

  struct Tap {
    int lo, hi;
    double t;
  };
  auto taps = [](int in, int out) {
    std::vector<Tap> result(out);
    const double ratio = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
      double src = (i + 0.5) * ratio - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const int lo = static_cast<int>(std::floor(src));
      const int hi = std::min(lo + 1, in - 1);
      result[i] = {lo, hi, src - lo};
    }
    return result;
  };
  const auto row_taps = taps(image.rows(), out_rows);
  const auto col_taps = taps(image.cols(), out_cols);

  Grid out(out_rows, out_cols);
  for (int r = 0; r < out_rows; ++r) {
    const Tap& ty = row_taps[r];
    for (int c = 0; c < out_cols; ++c) {
      const Tap& tx = col_taps[c];
      // a + t*(b-a) keeps constant inputs exactly constant.
      const double top = image.at(ty.lo, tx.lo) +
                         tx.t * (image.at(ty.lo, tx.hi) - image.at(ty.lo, tx.lo));
      const double bot = image.at(ty.hi, tx.lo) +
                         tx.t * (image.at(ty.hi, tx.hi) - image.at(ty.hi, tx.lo));
      out.at(r, c) = top + ty.t * (bot - top);
    }
  }
  return out;
}

}  // namespace scalecount

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

#ifndef SCALECOUNT_IMAGE_IO_HPP_
#define SCALECOUNT_IMAGE_IO_HPP_

#include <filesystem>

#include "scalecount/grid.hpp"

namespace scalecount {

// Binary 8-bit PGM (P5). Pixel values map to [0, 1] as v / 255.
Grid read_pgm(const std::filesystem::path& path);

// Writes values in [0, 1] as v * 255 rounded and clamped.
void write_pgm(const Grid& image, const std::filesystem::path& path);

// Rescales by the grid maximum so the peak maps to 255; an all-zero grid
// stays black. For visual inspection of density maps.
void write_pgm_normalized(const Grid& map, const std::filesystem::path& path);

}  // namespace scalecount

#endif  // SCALECOUNT_IMAGE_IO_HPP_

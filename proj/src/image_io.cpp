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

#include "scalecount/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "scalecount/error.hpp"

namespace scalecount {
namespace {

// Next header token, skipping whitespace and '#' comments.
int read_header_int(std::istream& in, const std::filesystem::path& path) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = in.get();
  }
  std::string digits;
  while (ch != EOF && std::isdigit(ch)) {
    digits.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  if (digits.empty()) throw IoError("malformed PGM header in " + path.string());
  return std::stoi(digits);
}

void write_bytes(const Grid& image, const std::filesystem::path& path,
                 double factor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  std::vector<unsigned char> bytes(image.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = std::clamp(std::round(image.values()[i] * factor), 0.0, 255.0);
    bytes[i] = static_cast<unsigned char>(v);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

Grid read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  char magic[2] = {0, 0};
  if (!in.read(magic, 2) || magic[0] != 'P' || magic[1] != '5') {
    throw IoError(path.string() + " is not a binary PGM");
  }
  const int cols = read_header_int(in, path);
  const int rows = read_header_int(in, path);
  const int maxval = read_header_int(in, path);
  if (cols <= 0 || rows <= 0 || maxval != 255) {
    throw IoError("unsupported PGM layout in " + path.string());
  }
  std::vector<unsigned char> bytes(static_cast<std::size_t>(rows) * cols);
  if (!in.read(reinterpret_cast<char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()))) {
    throw IoError("PGM data truncated in " + path.string());
  }
  Grid image(rows, cols);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    image.values()[i] = bytes[i] / 255.0;
  }
  return image;
}

void write_pgm(const Grid& image, const std::filesystem::path& path) {
  write_bytes(image, path, 255.0);
}

void write_pgm_normalized(const Grid& map, const std::filesystem::path& path) {
  const double peak = map.max();
  write_bytes(map, path, peak > 0.0 ? 255.0 / peak : 0.0);
}

}  // namespace scalecount

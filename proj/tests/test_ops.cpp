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

#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "scalecount/autodiff.hpp"
#include "scalecount/error.hpp"
#include "scalecount/grid.hpp"
#include "scalecount/ops.hpp"
#include "support.hpp"

namespace scalecount {
namespace {

using testing::random_tensor;

// Direct zero-padded convolution, written independently of the im2col path.
Tensor naive_conv(const Tensor& x, const Tensor& w, const ConvSpec& s) {
  const Shape xs = x.shape();
  Tensor out(Shape{xs.n, s.out_channels, xs.h, xs.w});
  const int cin_g = s.in_channels / s.groups;
  const int cout_g = s.out_channels / s.groups;
  const int pad = s.dilation * (s.kernel - 1) / 2;
  for (int n = 0; n < xs.n; ++n)
    for (int oc = 0; oc < s.out_channels; ++oc) {
      const int g = oc / cout_g;
      for (int r = 0; r < xs.h; ++r)
        for (int c = 0; c < xs.w; ++c) {
          double acc = 0.0;
          for (int ic = 0; ic < cin_g; ++ic)
            for (int ki = 0; ki < s.kernel; ++ki)
              for (int kj = 0; kj < s.kernel; ++kj) {
                const int rr = r + ki * s.dilation - pad;
                const int cc = c + kj * s.dilation - pad;
                if (rr < 0 || rr >= xs.h || cc < 0 || cc >= xs.w) continue;
                acc += w.at(oc, ic, ki, kj) * x.at(n, g * cin_g + ic, rr, cc);
              }
          out.at(n, oc, r, c) = acc;
        }
    }
  return out;
}

Tensor impulse(int size) {
  Tensor x(Shape{1, 1, size, size});
  x.at(0, 0, size / 2, size / 2) = 1.0;
  return x;
}

TEST_CASE("conv2d matches a direct convolution") {
  Rng rng(11);
  for (const ConvSpec spec : {ConvSpec{3, 5, 3, 1, 1}, ConvSpec{4, 6, 3, 2, 2},
                              ConvSpec{6, 3, 1, 1, 1}, ConvSpec{8, 8, 3, 4, 4}}) {
    const Tensor x = random_tensor(Shape{2, spec.in_channels, 9, 7}, rng);
    const Tensor w = random_tensor(spec.weight_shape(), rng);
    Tape tape;
    const Tensor got = conv2d(tape.constant(x), tape.constant(w), Var(), spec).value();
    const Tensor want = naive_conv(x, w, spec);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("dilated all-ones kernel on an impulse") {
  const ConvSpec spec{1, 1, 3, 2, 1};
  Tape tape;
  const Tensor y = conv2d(tape.constant(impulse(11)),
                          tape.constant(Tensor(spec.weight_shape(), 1.0)), Var(), spec)
                       .value();
  int nonzero = 0;
  for (int r = 0; r < 11; ++r)
    for (int c = 0; c < 11; ++c) {
      if (y.at(0, 0, r, c) == 0.0) continue;
      ++nonzero;
      CHECK((r - 5) % 2 == 0);
      CHECK((c - 5) % 2 == 0);
      CHECK(std::abs(r - 5) <= 2);
      CHECK(std::abs(c - 5) <= 2);
    }
  CHECK(nonzero == 9);
}

TEST_CASE("impulse support grows as (2r+1)^2 for r = 1..5") {
  for (int r = 1; r <= 5; ++r) {
    const ConvSpec spec{1, 1, 3, r, 1};
    CHECK(spec.receptive_field() == 2 * r + 1);
    Tape tape;
    const Tensor y = conv2d(tape.constant(impulse(25)),
                            tape.constant(Tensor(spec.weight_shape(), 1.0)), Var(), spec)
                         .value();
    int lo_r = 25, hi_r = -1, lo_c = 25, hi_c = -1;
    for (int i = 0; i < 25; ++i)
      for (int j = 0; j < 25; ++j)
        if (y.at(0, 0, i, j) != 0.0) {
          lo_r = std::min(lo_r, i);
          hi_r = std::max(hi_r, i);
          lo_c = std::min(lo_c, j);
          hi_c = std::max(hi_c, j);
        }
    CHECK(hi_r - lo_r + 1 == 2 * r + 1);
    CHECK(hi_c - lo_c + 1 == 2 * r + 1);
  }
}

TEST_CASE("identity 1x1 kernel returns the input") {
  Rng rng(12);
  const ConvSpec spec{3, 3, 1, 1, 1};
  Tensor w(spec.weight_shape());
  for (int c = 0; c < 3; ++c) w.at(c, c, 0, 0) = 1.0;
  const Tensor x = random_tensor(Shape{2, 3, 5, 5}, rng);
  Tape tape;
  const Tensor y = conv2d(tape.constant(x), tape.constant(w), Var(), spec).value();
  CHECK(std::equal(x.values().begin(), x.values().end(), y.values().begin()));
}

TEST_CASE("group isolation: zeroed input group yields bias only") {
  Rng rng(13);
  const ConvSpec spec{4, 4, 3, 1, 2};
  Tensor x = random_tensor(Shape{1, 4, 6, 6}, rng);
  for (int c = 2; c < 4; ++c)
    for (int i = 0; i < 36; ++i) x[x.index(0, c, 0, 0) + i] = 0.0;
  const Tensor w = random_tensor(spec.weight_shape(), rng);
  const Tensor b(Shape{1, 4, 1, 1}, {0.1, 0.2, 0.3, 0.4});
  Tape tape;
  const Tensor y = conv2d(tape.constant(x), tape.constant(w), tape.constant(b), spec).value();
  for (int c = 2; c < 4; ++c)
    for (int i = 0; i < 36; ++i) CHECK(y[y.index(0, c, 0, 0) + i] == b[c]);
}

TEST_CASE("grouped conv equals per-group convs concatenated") {
  Rng rng(14);
  for (int g : {1, 2, 4}) {
    const ConvSpec spec{8, 8, 3, 2, g};
    const Tensor x = random_tensor(Shape{2, 8, 7, 7}, rng);
    const Tensor w = random_tensor(spec.weight_shape(), rng);
    Tape tape;
    const Var xv = tape.constant(x);
    const Tensor whole = conv2d(xv, tape.constant(w), Var(), spec).value();
    const int per = 8 / g;
    std::vector<Var> parts;
    for (int j = 0; j < g; ++j) {
      const ConvSpec one{per, per, 3, 2, 1};
      Tensor wj(one.weight_shape());
      std::copy_n(w.data() + static_cast<std::size_t>(j) * wj.size(), wj.size(), wj.data());
      parts.push_back(conv2d(slice_channels(xv, j * per, per), tape.constant(wj), Var(), one));
    }
    const Tensor joined = concat_channels(parts).value();
    for (std::size_t i = 0; i < whole.size(); ++i) {
      CHECK(whole[i] == doctest::Approx(joined[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("conv2d rejects channel and group mismatches") {
  Tape tape;
  const Var x = tape.constant(Tensor(Shape{1, 3, 4, 4}));
  CHECK_THROWS_AS(conv2d(x, tape.constant(Tensor(Shape{2, 2, 3, 3})), Var(),
                         ConvSpec{2, 2, 3, 1, 1}),
                  ShapeError);
  CHECK_THROWS_AS(ConvSpec({3, 4, 3, 1, 2}).validate(), ConfigError);
}

TEST_CASE("concat_channels") {
  Tape tape;
  const Var a = tape.constant(Tensor(Shape{1, 64, 4, 4}, 1.0));
  const Var b = tape.constant(Tensor(Shape{1, 64, 4, 4}, 2.0));
  const std::array<Var, 2> ab{a, b};
  const Var ab_cat = concat_channels(ab);
  CHECK(ab_cat.shape().c == 128);
  CHECK(ab_cat.value().at(0, 63, 0, 0) == 1.0);
  CHECK(ab_cat.value().at(0, 64, 0, 0) == 2.0);

  std::vector<Var> dense{tape.constant(Tensor(Shape{1, 512, 2, 2}))};
  for (int i = 0; i < 3; ++i) dense.push_back(tape.constant(Tensor(Shape{1, 256, 2, 2})));
  CHECK(concat_channels(dense).shape().c == 1280);

  const std::array<Var, 1> single{a};
  CHECK(concat_channels(single).id() == a.id());

  const std::array<Var, 2> mismatch{a, tape.constant(Tensor(Shape{1, 64, 5, 4}))};
  CHECK_THROWS_AS(concat_channels(mismatch), ShapeError);
}

TEST_CASE("convex_mix") {
  Rng rng(15);
  Tape tape;
  const Var a = tape.constant(random_tensor(Shape{1, 2, 3, 3}, rng));
  const Var b = tape.constant(random_tensor(Shape{1, 2, 3, 3}, rng));
  const Tensor one = convex_mix(a, b, 1.0).value();
  const Tensor zero = convex_mix(a, b, 0.0).value();
  CHECK(std::equal(one.values().begin(), one.values().end(), a.value().values().begin()));
  CHECK(std::equal(zero.values().begin(), zero.values().end(), b.value().values().begin()));
  const Var two = tape.constant(Tensor::scalar(2.0));
  const Var four = tape.constant(Tensor::scalar(4.0));
  CHECK(convex_mix(two, four, 0.5).value()[0] == 3.0);
  CHECK_THROWS_AS(convex_mix(a, b, 1.5), ArgumentError);
  CHECK_THROWS_AS(convex_mix(a, b, -0.1), ArgumentError);
}

TEST_CASE("convex_mix gradient splits by alpha") {
  Tape tape;
  const Var a = tape.leaf(Tensor(Shape{1, 1, 2, 2}, 1.0));
  const Var b = tape.leaf(Tensor(Shape{1, 1, 2, 2}, 3.0));
  tape.backward(sum(convex_mix(a, b, 0.25)));
  for (double g : a.grad().values()) CHECK(g == 0.25);
  for (double g : b.grad().values()) CHECK(g == 0.75);
}

TEST_CASE("sum_pool") {
  const Tensor ones(Shape{1, 1, 4, 4}, 1.0);
  const Tensor pooled = sum_pool(ones, 2);
  CHECK(pooled.shape() == Shape{1, 1, 2, 2});
  for (double v : pooled.values()) CHECK(v == 4.0);
  CHECK(pooled.sum() == 16.0);

  Rng rng(16);
  const Tensor x = random_tensor(Shape{1, 1, 8, 8}, rng, 0.0, 1.0);
  const Tensor same = sum_pool(x, 1);
  CHECK(std::equal(x.values().begin(), x.values().end(), same.values().begin()));
  double direct = 0.0;
  for (double v : x.values()) direct += v;
  CHECK(std::abs(sum_pool(x, 4).sum() - direct) < 1e-12);

  CHECK_THROWS_AS(sum_pool(Tensor(Shape{1, 1, 5, 4}), 2), ShapeError);
}

TEST_CASE("max_pool picks block maxima") {
  Tape tape;
  const Var x = tape.leaf(Tensor(Shape{1, 1, 2, 4}, {1, 5, 2, 0, 3, 4, 7, 6}));
  const Var y = max_pool(x, 2);
  CHECK(y.value()[0] == 5.0);
  CHECK(y.value()[1] == 7.0);
  tape.backward(sum(y));
  CHECK(x.grad()[1] == 1.0);
  CHECK(x.grad()[6] == 1.0);
  CHECK(x.grad().sum() == 2.0);
}

TEST_CASE("relu subgradient at zero is zero") {
  Tape tape;
  const Var x = tape.leaf(Tensor(Shape{1, 1, 1, 3}, {-1.0, 0.0, 2.0}));
  tape.backward(sum(relu(x)));
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 0.0);
  CHECK(x.grad()[2] == 1.0);
}

TEST_CASE("bilinear_resize") {
  Rng rng(17);
  Grid g(20, 30);
  for (double& v : g.values()) v = uniform01(rng);
  CHECK(bilinear_resize(g, 1.0) == g);

  const Grid flat(40, 24, 0.37);
  const Grid small = bilinear_resize(flat, 0.55);
  CHECK(small.rows() == 22);
  CHECK(small.cols() == 13);
  for (double v : small.values()) CHECK(v == doctest::Approx(0.37).epsilon(1e-15));

  const Grid hundred(100, 100, 1.0);
  const Grid scaled = bilinear_resize(hundred, std::sqrt(0.81));
  CHECK(scaled.rows() == 90);
  CHECK(scaled.cols() == 90);

  CHECK_THROWS_AS(bilinear_resize(Grid(20, 20), 0.3), ArgumentError);
  CHECK_THROWS_AS(bilinear_resize(g, 1.5), ArgumentError);
}

TEST_CASE("bilinear_resize interpolates between pixel centres") {
  // 2x downsampling of a horizontal ramp samples midway between columns.
  Grid ramp(16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) ramp.at(r, c) = c;
  const Grid half = bilinear_resize(ramp, 0.5);
  for (int c = 0; c < 8; ++c) CHECK(half.at(3, c) == doctest::Approx(2.0 * c + 0.5));
}

}  // namespace
}  // namespace scalecount

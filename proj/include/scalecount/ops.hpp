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

#ifndef SCALECOUNT_OPS_HPP_
#define SCALECOUNT_OPS_HPP_

#include <span>

#include "scalecount/autodiff.hpp"
#include "scalecount/tensor.hpp"

namespace scalecount {

// Square-kernel convolution, stride 1, zero padding dilation*(kernel-1)/2 so
// the spatial size is preserved. Weights are (out, in/groups, k, k); output
// group j reads only input group j.
struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 3;
  int dilation = 1;
  int groups = 1;

  // Throws ConfigError when channel counts are not divisible by groups, the
  // kernel is even or any field is non-positive.
  void validate() const;
  int padding() const { return dilation * (kernel - 1) / 2; }
  // Side length of the region one output reads: (k-1)*r + 1.
  int receptive_field() const { return (kernel - 1) * dilation + 1; }
  Shape weight_shape() const {
    return {out_channels, in_channels / groups, kernel, kernel};
  }
};

// bias may be an invalid Var (no bias); otherwise it has out_channels values.
Var conv2d(const Var& x, const Var& weight, const Var& bias,
           const ConvSpec& spec);

Var add(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var mul(const Var& a, const Var& b);
// Sum of all entries as a (1,1,1,1) tensor.
Var sum(const Var& a);
// max(x, 0) with subgradient 0 at exactly 0.
Var relu(const Var& a);

// Joins along channels; all parts share (n, h, w).
Var concat_channels(std::span<const Var> parts);
Var slice_channels(const Var& x, int begin, int count);

// alpha*a + (1-alpha)*b. Throws ArgumentError for alpha outside [0, 1].
Var convex_mix(const Var& a, const Var& b, double alpha);

// factor x factor block sums (count preserving) and block maxima.
Var sum_pool(const Var& x, int factor);
Var max_pool(const Var& x, int factor);

// Sum over every entry of (pred - target)^2; target is a constant.
Var squared_error(const Var& pred, const Tensor& target);

// Non-recorded variant used for ground-truth alignment.
Tensor sum_pool(const Tensor& x, int factor);

}  // namespace scalecount

#endif  // SCALECOUNT_OPS_HPP_

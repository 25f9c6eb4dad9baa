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

#ifndef SCALECOUNT_LAYERS_HPP_
#define SCALECOUNT_LAYERS_HPP_

#include <string>
#include <vector>

#include "scalecount/autodiff.hpp"
#include "scalecount/ops.hpp"
#include "scalecount/rng.hpp"

namespace scalecount {

// Convolution with its own weight and bias parameters.
struct ConvLayer {
  ConvSpec spec;
  Parameter weight;
  Parameter bias;

  ConvLayer() = default;
  ConvLayer(const std::string& name, const ConvSpec& spec);

  Var forward(Tape& tape, const Var& x);
  // Weights ~ N(0, stddev^2), bias 0.
  void init(Rng& rng, double stddev);
  void collect(std::vector<Parameter*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

}  // namespace scalecount

#endif  // SCALECOUNT_LAYERS_HPP_

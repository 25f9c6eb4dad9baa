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

#include "scalecount/layers.hpp"

namespace scalecount {

ConvLayer::ConvLayer(const std::string& name, const ConvSpec& s) : spec(s) {
  spec.validate();
  weight.name = name + ".weight";
  weight.value = Tensor(spec.weight_shape());
  bias.name = name + ".bias";
  bias.value = Tensor(Shape{1, spec.out_channels, 1, 1});
}

Var ConvLayer::forward(Tape& tape, const Var& x) {
  return conv2d(x, tape.param(weight), tape.param(bias), spec);
}

void ConvLayer::init(Rng& rng, double stddev) {
  for (double& v : weight.value.values()) v = stddev * standard_normal(rng);
  bias.value.fill(0.0);
}

}  // namespace scalecount

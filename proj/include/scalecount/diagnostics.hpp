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

#ifndef SCALECOUNT_DIAGNOSTICS_HPP_
#define SCALECOUNT_DIAGNOSTICS_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace scalecount {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double threshold = 0.0;
  // Parameter checks only: coordinates sampled and those dropped because the
  // stencil crossed a ReLU or max-pool branch. At most a tenth may be dropped.
  std::size_t sampled = 0;  // zero when every coordinate counts
  std::size_t skipped = 0;
  bool passed() const {
    return max_rel_error < threshold && skipped * 10 <= sampled;
  }
};

// Finite-difference battery over every differentiable op, the SiT block
// (G = 4) and a small end-to-end network. Ops and the block use threshold
// 1e-4; the network 1e-3. eps = 1e-5 throughout.
std::vector<GradCheckResult> run_gradcheck_battery(std::uint64_t seed);

struct MixerSelfTest {
  int groups = 0;
  int draws = 0;
  double max_row_sum_deviation = 0.0;  // max |sum_j c[i][j] - 1|
  double min_coefficient = 0.0;
  std::vector<double> half_row;        // last row over d_1.. at alpha = 0.5
};

MixerSelfTest run_mixer_self_test(int groups, int draws, std::uint64_t seed);

}  // namespace scalecount

#endif  // SCALECOUNT_DIAGNOSTICS_HPP_

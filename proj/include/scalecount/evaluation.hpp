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

#ifndef SCALECOUNT_EVALUATION_HPP_
#define SCALECOUNT_EVALUATION_HPP_

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scalecount/grid.hpp"
#include "scalecount/network.hpp"
#include "scalecount/synth.hpp"

namespace scalecount {

struct EvalRecord {
  std::string image_id;
  double true_count = 0.0;
  double pred_count = 0.0;
};

// "mse" follows the crowd-counting convention: the root of the mean squared
// count error. Hence mse >= mae >= 0.
struct EvalReport {
  std::vector<EvalRecord> records;
  double mae = 0.0;
  double mse = 0.0;
  double scale_ratio = 1.0;
  std::string corpus_id;
  std::string checkpoint_id;
  std::vector<std::string> warnings;
};

// Computes mae/mse from the records.
void finalize_metrics(EvalReport& report);

// Maps an image to a density map at any resolution.
using DensityPredictor = std::function<Grid(const Grid&)>;

// Eval-phase density prediction. The image is zero-padded at the bottom and
// right up to a multiple of the network stride.
Grid predict_density(Model& model, const Grid& image);

double predict_count(const DensityPredictor& predictor, const Grid& image);
double predict_count(Model& model, const Grid& image);

// True counts come from annotation point counts; entries without an
// annotation are skipped with a warning. Records are ordered by image id.
// Throws ArgumentError when `entries` is empty.
EvalReport evaluate(const DensityPredictor& predictor,
                    std::span<const CorpusEntry* const> entries);
EvalReport evaluate(Model& model, std::span<const CorpusEntry* const> entries);

inline const std::vector<double> kDefaultAreaRatios{1.00, 0.81, 0.64, 0.49,
                                                    0.36, 0.25, 0.16};

struct SweepResult {
  std::vector<EvalReport> reports;   // descending area ratio
  std::vector<std::string> skipped;  // ratios that could not be evaluated
};

// Re-evaluates after bilinear downsampling by sqrt(ratio) per side.
SweepResult scale_sweep(Model& model,
                        std::span<const CorpusEntry* const> entries,
                        std::vector<double> area_ratios = kDefaultAreaRatios);

// Evaluates on the test split of another corpus without touching the
// parameters; throws std::logic_error if any parameter changed.
EvalReport cross_eval(Model& model, const Corpus& corpus,
                      const std::string& checkpoint_id = "");

// image_id,true_count,pred_count rows then "# MAE=<v>" and "# MSE=<v>".
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
// area_ratio,mae,mse.
void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path);

}  // namespace scalecount

#endif  // SCALECOUNT_EVALUATION_HPP_

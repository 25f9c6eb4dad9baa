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

#include "scalecount/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "scalecount/error.hpp"

namespace scalecount {

void finalize_metrics(EvalReport& report) {
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (const EvalRecord& r : report.records) {
    const double err = r.pred_count - r.true_count;
    abs_sum += std::abs(err);
    sq_sum += err * err;
  }
  const double n = static_cast<double>(report.records.size());
  report.mae = n > 0 ? abs_sum / n : 0.0;
  report.mse = n > 0 ? std::sqrt(sq_sum / n) : 0.0;
}

Grid predict_density(Model& model, const Grid& image) {
  const int stride = model.config().stride();
  const int rows = (image.rows() + stride - 1) / stride * stride;
  const int cols = (image.cols() + stride - 1) / stride * stride;
  Tensor batch(Shape{1, 1, rows, cols});
  for (int r = 0; r < image.rows(); ++r) {
    for (int c = 0; c < image.cols(); ++c) batch.at(0, 0, r, c) = image.at(r, c);
  }
  Tape tape;
  const std::vector<MixerDraw> draws = [&] {
    Rng unused(0);
    return model.draw_all(unused, Phase::kEval);
  }();
  const Var out = model.forward(tape, batch, draws);
  const Shape s = out.shape();
  return Grid(s.h, s.w, {out.value().values().begin(), out.value().values().end()});
}

double predict_count(const DensityPredictor& predictor, const Grid& image) {
  return predictor(image).sum();
}

double predict_count(Model& model, const Grid& image) {
  return predict_density(model, image).sum();
}

EvalReport evaluate(const DensityPredictor& predictor,
                    std::span<const CorpusEntry* const> entries) {
  if (entries.empty()) throw ArgumentError("evaluation split is empty");
  std::vector<const CorpusEntry*> ordered(entries.begin(), entries.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const CorpusEntry* a, const CorpusEntry* b) {
                     return a->id < b->id;
                   });
  EvalReport report;
  for (const CorpusEntry* e : ordered) {
    if (!e->annotation) {
      report.warnings.push_back("skipped " + e->id + ": " +
                                (e->warning.empty() ? "no annotation" : e->warning));
      continue;
    }
    report.records.push_back({e->id, static_cast<double>(e->annotation->count()),
                              predict_count(predictor, e->image)});
  }
  finalize_metrics(report);
  return report;
}

EvalReport evaluate(Model& model, std::span<const CorpusEntry* const> entries) {
  return evaluate([&model](const Grid& g) { return predict_density(model, g); },
                  entries);
}

SweepResult scale_sweep(Model& model,
                        std::span<const CorpusEntry* const> entries,
                        std::vector<double> area_ratios) {
  for (double r : area_ratios) {
    if (!(r > 0.0 && r <= 1.0)) {
      throw ArgumentError("area ratios must lie in (0, 1]");
    }
  }
  std::sort(area_ratios.begin(), area_ratios.end(), std::greater<>());
  SweepResult result;
  for (double ratio : area_ratios) {
    const double scale = std::sqrt(ratio);
    std::vector<CorpusEntry> resized;
    resized.reserve(entries.size());
    try {
      for (const CorpusEntry* e : entries) {
        CorpusEntry copy = *e;
        copy.image = bilinear_resize(e->image, scale);
        resized.push_back(std::move(copy));
      }
    } catch (const ArgumentError& ex) {
      std::ostringstream note;
      note << "ratio " << ratio << ": " << ex.what();
      result.skipped.push_back(note.str());
      continue;
    }
    std::vector<const CorpusEntry*> view;
    for (const CorpusEntry& e : resized) view.push_back(&e);
    EvalReport report = evaluate(model, view);
    report.scale_ratio = ratio;
    result.reports.push_back(std::move(report));
  }
  return result;
}

EvalReport cross_eval(Model& model, const Corpus& corpus,
                      const std::string& checkpoint_id) {
  std::vector<Tensor> before;
  for (const Parameter* p : std::as_const(model).parameters()) before.push_back(p->value);
  EvalReport report = evaluate(model, corpus.split("test"));
  report.corpus_id = corpus.id;
  report.checkpoint_id = checkpoint_id;
  const auto after = std::as_const(model).parameters();
  for (std::size_t i = 0; i < after.size(); ++i) {
    if (!std::equal(before[i].values().begin(), before[i].values().end(),
                    after[i]->value.values().begin())) {
      throw std::logic_error("cross_eval modified parameter " + after[i]->name);
    }
  }
  return report;
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report " + path.string());
  out << std::setprecision(17);
  out << "image_id,true_count,pred_count\n";
  for (const EvalRecord& r : report.records) {
    out << r.image_id << ',' << r.true_count << ',' << r.pred_count << '\n';
  }
  out << "# MAE=" << report.mae << '\n' << "# MSE=" << report.mse << '\n';
}

void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write sweep report " + path.string());
  out << std::setprecision(17);
  out << "area_ratio,mae,mse\n";
  for (const EvalReport& r : sweep.reports) {
    out << r.scale_ratio << ',' << r.mae << ',' << r.mse << '\n';
  }
}

}  // namespace scalecount

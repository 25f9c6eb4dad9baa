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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scalecount/error.hpp"
#include "scalecount/evaluation.hpp"
#include "scalecount/network.hpp"
#include "scalecount/synth.hpp"
#include "support.hpp"

namespace scalecount {
namespace {

using testing::scratch_dir;

NetworkConfig small_net() {
  NetworkConfig net;
  net.backbone = {{8, true}, {8, true}, {8, false}};
  net.sit_count = 1;
  net.sit.groups = 3;
  net.sit.group_width = 4;
  net.head_channels = 8;
  net.init_stddev = 0.1;
  return net;
}

Model make_model(std::uint64_t seed = 4) {
  Rng rng = make_stream(seed, "init");
  Model m = build_network(small_net(), rng);
  // A positive output bias keeps the clamp open so counts are nonzero.
  m.find("head.conv1.bias")->value[0] = 0.01;
  m.set_phase(Phase::kEval);
  return m;
}

Corpus small_corpus(std::uint64_t seed, int min_count, int max_count) {
  CorpusSpec spec;
  spec.images = 6;
  spec.val_images = 0;
  spec.test_images = 4;
  spec.scene.width = 40;
  spec.scene.height = 36;
  spec.scene.min_count = min_count;
  spec.scene.max_count = max_count;
  spec.scene.top_radius = 1.0;
  spec.scene.bottom_radius = 2.0;
  spec.scene.seed = seed;
  return generate_corpus(spec, GroundTruthConfig{}, "corpus" + std::to_string(seed));
}

CorpusEntry entry_with_count(const std::string& id, int count) {
  CorpusEntry e;
  e.id = id;
  e.split = "test";
  e.image = Grid(16, 16, 0.5);
  Annotation ann{16, 16, {}};
  for (int i = 0; i < count; ++i) ann.points.push_back({1.0 + i % 14, 1.0 + i / 14});
  e.annotation = ann;
  e.density = density_fixed(ann, 2.0);
  return e;
}

TEST_CASE("report arithmetic") {
  EvalReport r;
  r.records = {{"a", 12, 10}, {"b", 16, 20}};
  finalize_metrics(r);
  CHECK(r.mae == doctest::Approx(3.0));
  CHECK(r.mse == doctest::Approx(std::sqrt(10.0)));
  CHECK(r.mse == doctest::Approx(3.1623).epsilon(1e-4));

  EvalReport empty;
  finalize_metrics(empty);
  CHECK(empty.mae == 0.0);
  CHECK(empty.mse == 0.0);
}

TEST_CASE("perfect and zero predictors") {
  const CorpusEntry a = entry_with_count("a", 5);
  const CorpusEntry b = entry_with_count("b", 5);
  const std::vector<const CorpusEntry*> entries{&a, &b};

  const EvalReport zero = evaluate([](const Grid&) { return Grid(4, 4); }, entries);
  CHECK(zero.mae == 5.0);
  CHECK(zero.mse == 5.0);

  const EvalReport perfect = evaluate([](const Grid&) { return Grid(1, 5, 1.0); }, entries);
  CHECK(perfect.mae == 0.0);
  CHECK(perfect.mse == 0.0);
}

TEST_CASE("identity stub on ground-truth maps conserves the count") {
  const Corpus corpus = small_corpus(7, 3, 25);
  std::vector<CorpusEntry> as_maps = corpus.entries;
  for (CorpusEntry& e : as_maps) e.image = e.density;
  std::vector<const CorpusEntry*> view;
  for (const CorpusEntry& e : as_maps) view.push_back(&e);
  const EvalReport r = evaluate([](const Grid& g) { return g; }, view);
  REQUIRE(r.records.size() == as_maps.size());
  for (const EvalRecord& rec : r.records) {
    CHECK(std::abs(rec.pred_count - rec.true_count) < 1e-3);
  }
  CHECK(r.mae < 1e-3);
}

TEST_CASE("zero head weights predict nothing") {
  Model m = make_model();
  for (Parameter* p : m.parameters()) {
    if (p->name.starts_with("head.conv1")) p->value.fill(0.0);
  }
  Grid image(37, 29, 0.3);
  image.at(5, 5) = 1.0;
  CHECK(predict_count(m, image) == 0.0);
}

TEST_CASE("model counts are deterministic and padded to the stride") {
  Model m = make_model();
  Rng rng(31);
  Grid image(37, 29);
  for (double& v : image.values()) v = uniform01(rng);
  const Grid d = predict_density(m, image);
  CHECK(d.rows() == 10);
  CHECK(d.cols() == 8);
  const double c1 = predict_count(m, image);
  const double c2 = predict_count(m, image);
  CHECK(c1 == c2);
  CHECK(c1 == d.sum());
  CHECK(c1 > 0.0);
  for (double v : d.values()) CHECK(v >= 0.0);
}

TEST_CASE("evaluate orders by id, skips unannotated images, keeps mse >= mae") {
  const Corpus corpus = small_corpus(8, 0, 30);
  Model m = make_model();
  std::vector<const CorpusEntry*> reversed;
  for (auto it = corpus.entries.rbegin(); it != corpus.entries.rend(); ++it) {
    reversed.push_back(&*it);
  }
  CorpusEntry bare = corpus.entries[0];
  bare.id = "img_bare";
  bare.annotation.reset();
  bare.warning = "cannot open annotation";
  reversed.push_back(&bare);

  const EvalReport r = evaluate(m, reversed);
  REQUIRE(r.records.size() == corpus.entries.size());
  CHECK(std::is_sorted(r.records.begin(), r.records.end(),
                       [](const EvalRecord& a, const EvalRecord& b) {
                         return a.image_id < b.image_id;
                       }));
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("img_bare") != std::string::npos);
  CHECK(r.mse >= r.mae);
  CHECK(r.mae >= 0.0);
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    CHECK(r.records[i].true_count == corpus.entries[i].annotation->count());
  }
  const EvalReport again = evaluate(m, reversed);
  CHECK(again.mae == r.mae);

  const std::vector<const CorpusEntry*> none;
  CHECK_THROWS_AS(evaluate(m, none), ArgumentError);
}

TEST_CASE("rms error dominates mean error on random reports") {
  Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    EvalReport r;
    const int n = 1 + static_cast<int>(uniform_int(rng, 0, 20));
    for (int i = 0; i < n; ++i) {
      r.records.push_back({"x", 100 * uniform01(rng), 100 * uniform01(rng)});
    }
    finalize_metrics(r);
    CHECK(r.mse >= r.mae * (1.0 - 1e-15));
  }
}

TEST_CASE("default sweep ratios") {
  REQUIRE(kDefaultAreaRatios.size() == 7);
  CHECK(kDefaultAreaRatios.front() == 1.0);
  CHECK(kDefaultAreaRatios.back() == 0.16);
  for (std::size_t i = 0; i < kDefaultAreaRatios.size(); ++i) {
    const double side = 1.0 - 0.1 * static_cast<double>(i);
    CHECK(kDefaultAreaRatios[i] == doctest::Approx(side * side).epsilon(1e-12));
  }
}

TEST_CASE("scale sweep: identity at ratio 1, descending order") {
  const Corpus corpus = small_corpus(9, 5, 30);
  Model m = make_model();
  const auto test = corpus.split("test");
  const SweepResult s = scale_sweep(m, test, {0.25, 1.0, 0.64});
  REQUIRE(s.reports.size() == 3);
  CHECK(s.reports[0].scale_ratio == 1.0);
  CHECK(s.reports[1].scale_ratio == 0.64);
  CHECK(s.reports[2].scale_ratio == 0.25);
  const EvalReport plain = evaluate(m, test);
  CHECK(s.reports[0].mae == plain.mae);
  CHECK(s.reports[0].mse == plain.mse);
  for (std::size_t i = 0; i < plain.records.size(); ++i) {
    CHECK(s.reports[0].records[i].pred_count == plain.records[i].pred_count);
  }
  CHECK(s.skipped.empty());
  CHECK_THROWS_AS(scale_sweep(m, test, {1.5}), ArgumentError);
  CHECK_THROWS_AS(scale_sweep(m, test, {0.0}), ArgumentError);
}

TEST_CASE("sweep notes ratios too small to resize") {
  const Corpus corpus = small_corpus(10, 5, 10);
  Model m = make_model();
  // 36 px * sqrt(0.01) < 8 px.
  const SweepResult s = scale_sweep(m, corpus.split("test"), {1.0, 0.01});
  CHECK(s.reports.size() == 1);
  REQUIRE(s.skipped.size() == 1);
  CHECK(s.skipped[0].find("0.01") != std::string::npos);
}

TEST_CASE("cross_eval matches evaluate and leaves parameters alone") {
  const Corpus sparse = small_corpus(11, 1, 8);
  const Corpus dense = small_corpus(12, 40, 80);
  Model m = make_model();
  std::vector<std::vector<double>> before;
  for (const Parameter* p : std::as_const(m).parameters()) {
    before.emplace_back(p->value.values().begin(), p->value.values().end());
  }
  const EvalReport same = cross_eval(m, sparse, "ckpt-a");
  const EvalReport plain = evaluate(m, sparse.split("test"));
  CHECK(same.mae == plain.mae);
  CHECK(same.mse == plain.mse);
  CHECK(same.corpus_id == sparse.id);
  CHECK(same.checkpoint_id == "ckpt-a");

  const EvalReport other = cross_eval(m, dense);
  CHECK(std::isfinite(other.mae));
  CHECK(std::isfinite(other.mse));
  CHECK(other.corpus_id == dense.id);
  const auto after = std::as_const(m).parameters();
  for (std::size_t i = 0; i < after.size(); ++i) {
    CHECK(std::equal(before[i].begin(), before[i].end(), after[i]->value.values().begin()));
  }
}

TEST_CASE("report and sweep CSV layout") {
  const auto dir = scratch_dir("eval_csv");
  EvalReport r;
  r.records = {{"img0001", 12, 10}, {"img0002", 16, 20.5}};
  finalize_metrics(r);
  write_report_csv(r, dir / "report.csv");
  std::ifstream in(dir / "report.csv");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "image_id,true_count,pred_count");
  CHECK(lines[1] == "img0001,12,10");
  CHECK(lines[2] == "img0002,16,20.5");
  CHECK(lines[3] == "# MAE=3.25");
  CHECK(lines[4].starts_with("# MSE="));
  CHECK(std::stod(lines[4].substr(6)) == doctest::Approx(std::sqrt((4.0 + 20.25) / 2.0)));

  SweepResult s;
  EvalReport a = r;
  a.scale_ratio = 1.0;
  EvalReport b = r;
  b.scale_ratio = 0.49;
  s.reports = {a, b};
  write_sweep_csv(s, dir / "sweep.csv");
  std::ifstream sin(dir / "sweep.csv");
  std::string header;
  std::string row0;
  std::string row1;
  std::getline(sin, header);
  std::getline(sin, row0);
  std::getline(sin, row1);
  CHECK(header == "area_ratio,mae,mse");
  CHECK(row0.starts_with("1,3.25,"));
  CHECK(row1.starts_with("0.48999999999999999,3.25,"));
}

}  // namespace
}  // namespace scalecount

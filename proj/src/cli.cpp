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

#include "scalecount/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <stdexcept>

#include <CLI11.hpp>

#include "scalecount/config.hpp"
#include "scalecount/diagnostics.hpp"
#include "scalecount/error.hpp"
#include "scalecount/evaluation.hpp"
#include "scalecount/image_io.hpp"

namespace scalecount {
namespace {

namespace fs = std::filesystem;

// Flags bound to config keys for one subcommand. Values are captured as text
// and converted using the type of the key's default.
class FlagSet {
 public:
  explicit FlagSet(CLI::App* app) : app_(app) {}

  void option(const std::string& flag, const std::string& key,
              const std::string& help) {
    options_.push_back({key, app_->add_option(flag, raw_[key], help)});
  }

  // A negative switch: presence sets `key` to false.
  void disable(const std::string& flag, const std::string& key,
               const std::string& help) {
    switches_.push_back({key, app_->add_flag(flag, help)});
  }

  Json overrides(const Json& defaults) const {
    Json out = Json::object();
    for (const auto& [key, opt] : options_) {
      if (opt->count() == 0) continue;
      out[key] = convert(defaults.at(key), key, raw_.at(key));
    }
    for (const auto& [key, opt] : switches_) {
      if (opt->count() > 0) out[key] = false;
    }
    return out;
  }

 private:
  static Json convert(const Json& expected, const std::string& key,
                      const std::string& text) {
    try {
      std::size_t used = 0;
      if (expected.is_number_float()) {
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
      } else if (expected.is_number_unsigned()) {
        if (text.starts_with('-')) throw std::invalid_argument(text);
        const unsigned long long v = std::stoull(text, &used);
        if (used == text.size()) return v;
      } else if (expected.is_number_integer()) {
        const long long v = std::stoll(text, &used);
        if (used == text.size()) return v;
      } else {
        return text;
      }
    } catch (const std::exception&) {
    }
    throw ConfigError("value '" + text + "' for " + key + " is not a valid " +
                      (expected.is_number_float() ? "number" : "integer"));
  }

  CLI::App* app_;
  std::map<std::string, std::string> raw_;
  std::vector<std::pair<std::string, CLI::Option*>> options_;
  std::vector<std::pair<std::string, CLI::Option*>> switches_;
};

struct Command {
  CLI::App* app = nullptr;
  std::unique_ptr<FlagSet> flags;
  std::string config_path;
  std::function<void(const Json&, std::ostream&, std::ostream&)> run;
  // Where run.json goes for this command.
  std::function<fs::path(const Json&)> echo_dir;
};

void add_network_flags(FlagSet& f) {
  f.option("--backbone", "backbone", "backbone widths, 'p' marks pooling");
  f.option("--sit-count", "sit_count", "number of SiT blocks");
  f.option("--G", "groups", "channel groups per block");
  f.option("--group-width", "group_width", "channels per group");
  f.option("--mixer", "mixer", "stochastic | fixed:V | off");
  f.disable("--no-dense", "dense", "feed each block only its predecessor");
  f.disable("--no-residual", "residual", "drop the block skip connection");
  f.option("--head-channels", "head_channels", "hidden width of the head");
  f.option("--init-stddev", "init_stddev", "weight init standard deviation");
}

void add_gt_flags(FlagSet& f, const std::string& prefix) {
  f.option("--" + prefix + "mode", "gt_mode", "fixed | adaptive");
  f.option("--" + prefix + "sigma", "gt_sigma", "fixed kernel width");
  f.option("--" + prefix + "beta", "gt_beta", "adaptive kernel scale");
  f.option("--" + prefix + "k", "gt_k", "neighbours for the adaptive kernel");
}

std::string require_path(const Json& cfg, const std::string& key,
                         const std::string& flag) {
  const std::string value = cfg.at(key).get<std::string>();
  if (value.empty()) throw ArgumentError(flag + " is required");
  return value;
}

Model load_model(const Json& cfg) {
  const NetworkConfig net = network_config(cfg);
  Rng rng = make_stream(net.seed, "init");
  Model model = build_network(net, rng);
  load_checkpoint(model, require_path(cfg, "checkpoint", "--checkpoint"));
  return model;
}

Corpus load_manifest(const Json& cfg) {
  return load_corpus(require_path(cfg, "manifest", "--manifest"), gt_config(cfg));
}

void print_report(const EvalReport& report, std::ostream& out, std::ostream& err) {
  for (const std::string& w : report.warnings) err << "warning: " << w << '\n';
  out << "images=" << report.records.size() << " MAE=" << report.mae
      << " MSE=" << report.mse << '\n';
}

void run_synth(const Json& cfg, std::ostream& out, std::ostream&) {
  const CorpusSpec spec = corpus_spec(cfg);
  const fs::path dir = cfg.at("out").get<std::string>();
  const Corpus corpus =
      generate_corpus(spec, gt_config(cfg), fs::absolute(dir).filename().string());
  write_corpus(corpus, dir);
  std::size_t heads = 0;
  for (const CorpusEntry& e : corpus.entries) heads += e.annotation->count();
  out << "wrote " << corpus.entries.size() << " images (" << heads
      << " heads) to " << (dir / "manifest.json").string() << '\n';
}

void run_gt(const Json& cfg, std::ostream& out, std::ostream& err) {
  const GroundTruthConfig gt = gt_config(cfg);
  const fs::path dir = cfg.at("out").get<std::string>();
  fs::create_directories(dir);
  std::vector<fs::path> annotations;
  if (const std::string single = cfg.at("annotation").get<std::string>(); !single.empty()) {
    annotations.push_back(single);
  } else {
    const fs::path manifest = require_path(cfg, "manifest", "--manifest or --annotation");
    for (const ManifestEntry& m : read_manifest(manifest)) {
      annotations.push_back(manifest.parent_path() / m.annotation);
    }
  }
  for (const fs::path& path : annotations) {
    Annotation ann;
    try {
      ann = read_annotation(path);
    } catch (const IoError& ex) {
      err << "warning: skipped " << path.string() << ": " << ex.what() << '\n';
      continue;
    }
    const DensityMap map = make_density(ann, gt);
    const fs::path target = dir / (path.stem().string() + ".dmap");
    write_density(map, target);
    out << target.string() << " count=" << ann.count() << " sum=" << map.sum() << '\n';
  }
}

void run_train(const Json& cfg, std::ostream& out, std::ostream&) {
  const NetworkConfig net = network_config(cfg);
  const TrainConfig train_cfg = train_config(cfg);
  train_cfg.validate(net);
  const Corpus corpus = load_manifest(cfg);
  TrainOptions options;
  options.out_dir = fs::path(cfg.at("out").get<std::string>());
  options.on_row = [&out](const LogRow& row) {
    if (!row.val_mae && row.iter % 100 != 0) return;
    out << "iter=" << row.iter;
    if (row.loss) out << " loss=" << *row.loss;
    if (row.val_mae) out << " val_mae=" << *row.val_mae << " val_mse=" << *row.val_mse;
    out << '\n' << std::flush;
  };
  const TrainResult result = train(train_cfg, net, corpus, options);
  out << "parameters=" << param_count(result.model) << " final checkpoint "
      << (*options.out_dir / "final.ckpt").string() << '\n';
}

void run_eval(const Json& cfg, std::ostream& out, std::ostream& err) {
  Model model = load_model(cfg);
  const Corpus corpus = load_manifest(cfg);
  const std::string split = cfg.at("split").get<std::string>();
  EvalReport report = evaluate(model, corpus.split(split));
  report.corpus_id = corpus.id;
  report.checkpoint_id = fs::path(cfg.at("checkpoint").get<std::string>()).stem().string();
  const fs::path dir = cfg.at("out").get<std::string>();
  fs::create_directories(dir);
  write_report_csv(report, dir / "report.csv");
  print_report(report, out, err);
}

void run_sweep(const Json& cfg, std::ostream& out, std::ostream& err) {
  Model model = load_model(cfg);
  const Corpus corpus = load_manifest(cfg);
  const SweepResult sweep =
      scale_sweep(model, corpus.split(cfg.at("split").get<std::string>()),
                  parse_double_list(cfg.at("ratios").get<std::string>()));
  const fs::path dir = cfg.at("out").get<std::string>();
  fs::create_directories(dir);
  write_sweep_csv(sweep, dir / "sweep.csv");
  for (const std::string& note : sweep.skipped) err << "skipped " << note << '\n';
  for (const EvalReport& r : sweep.reports) {
    out << "ratio=" << r.scale_ratio << " MAE=" << r.mae << " MSE=" << r.mse << '\n';
  }
}

void run_cross_eval(const Json& cfg, std::ostream& out, std::ostream& err) {
  Model model = load_model(cfg);
  const Corpus corpus = load_manifest(cfg);
  const EvalReport report = cross_eval(
      model, corpus, fs::path(cfg.at("checkpoint").get<std::string>()).stem().string());
  const fs::path dir = cfg.at("out").get<std::string>();
  fs::create_directories(dir);
  write_report_csv(report, dir / "report.csv");
  out << "corpus=" << report.corpus_id << " checkpoint=" << report.checkpoint_id << ' ';
  print_report(report, out, err);
}

bool run_gradcheck(const Json& cfg, std::ostream& out) {
  bool ok = true;
  out << std::scientific << std::setprecision(3);
  for (const GradCheckResult& r : run_gradcheck_battery(cfg.at("seed").get<std::uint64_t>())) {
    out << std::left << std::setw(24) << r.name << " max_rel_error=" << r.max_rel_error
        << " threshold=" << r.threshold;
    if (r.sampled > 0) out << " skipped=" << r.skipped << '/' << r.sampled;
    out << (r.passed() ? " ok" : " FAILED") << '\n';
    ok = ok && r.passed();
  }
  return ok;
}

bool run_mixer_test(const Json& cfg, std::ostream& out) {
  const MixerSelfTest r = run_mixer_self_test(cfg.at("groups").get<int>(),
                                              cfg.at("draws").get<int>(),
                                              cfg.at("seed").get<std::uint64_t>());
  out << "G=" << r.groups << " draws=" << r.draws
      << " max_row_sum_deviation=" << r.max_row_sum_deviation
      << " min_coefficient=" << r.min_coefficient << '\n'
      << "alpha=0.5 row:";
  for (double c : r.half_row) out << ' ' << c;
  out << '\n';
  return r.max_row_sum_deviation <= 1e-12 && r.min_coefficient >= 0.0;
}

void run_export(const Json& cfg, std::ostream& out, std::ostream&) {
  const fs::path in = require_path(cfg, "in", "--in");
  const fs::path target = cfg.at("out").get<std::string>();
  if (target.empty() || fs::is_directory(target)) {
    throw ArgumentError("export-pgm needs --out naming a PGM file");
  }
  const DensityMap map = read_density(in);
  write_pgm_normalized(map, target);
  out << "wrote " << target.string() << " (" << map.rows() << "x" << map.cols()
      << ", sum=" << map.sum() << ")\n";
}

void write_run_echo(const std::string& command, const Json& cfg, const fs::path& dir) {
  if (!dir.empty()) fs::create_directories(dir);
  std::ofstream file(dir / "run.json");
  if (!file) throw IoError("cannot write " + (dir / "run.json").string());
  file << Json{{"command", command}, {"args", cfg}}.dump(2) << '\n';
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Scale-invariant crowd counting toolkit", "scalecount"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::map<std::string, Command> commands;
  auto add = [&](const std::string& name, const std::string& help) -> Command& {
    Command& c = commands[name];
    c.app = app.add_subcommand(name, help);
    c.flags = std::make_unique<FlagSet>(c.app);
    c.app->add_option("--config", c.config_path, "JSON config or a previous run.json");
    c.flags->option("--seed", "seed", "master seed for every random stream");
    c.echo_dir = [](const Json& cfg) { return fs::path(cfg.at("out").get<std::string>()); };
    return c;
  };
  auto plain = [](void (*fn)(const Json&, std::ostream&, std::ostream&)) {
    return std::function<void(const Json&, std::ostream&, std::ostream&)>(fn);
  };

  {
    Command& c = add("synth", "generate a synthetic annotated corpus");
    FlagSet& f = *c.flags;
    f.option("--count", "images", "total number of images");
    f.option("--val", "val_images", "images tagged val");
    f.option("--test", "test_images", "images tagged test");
    f.option("--width", "width", "image width");
    f.option("--height", "height", "image height");
    f.option("--min-count", "min_count", "fewest heads per image");
    f.option("--max-count", "max_count", "most heads per image");
    f.option("--top-radius", "top_radius", "head radius on the first row");
    f.option("--bottom-radius", "bottom_radius", "head radius on the last row");
    f.option("--profile", "profile", "uniform | top-heavy | clustered");
    f.option("--noise", "noise_level", "background noise amplitude");
    f.option("--out", "out", "output directory");
    c.run = plain(run_synth);
  }
  {
    Command& c = add("gt", "render density maps from annotations");
    add_gt_flags(*c.flags, "");
    c.flags->option("--manifest", "manifest", "corpus manifest");
    c.flags->option("--annotation", "annotation", "single annotation file");
    c.flags->option("--out", "out", "output directory for .dmap files");
    c.run = plain(run_gt);
  }
  {
    Command& c = add("train", "train a model on a corpus");
    FlagSet& f = *c.flags;
    f.option("--manifest", "manifest", "training corpus manifest");
    f.option("--lr", "lr", "Adam learning rate");
    f.option("--batch", "batch", "patches per iteration");
    f.option("--patch", "patch", "patch side length");
    f.option("--iterations", "iterations", "optimizer steps");
    f.option("--loss", "loss", "integrated | averaged");
    f.disable("--no-flip", "flip", "disable horizontal flips");
    f.option("--checkpoint-every", "checkpoint_every", "validation and checkpoint period");
    add_network_flags(f);
    add_gt_flags(f, "gt-");
    f.option("--out", "out", "directory for checkpoints and metrics");
    c.run = plain(run_train);
  }
  auto add_eval_like = [&](const std::string& name, const std::string& help) -> Command& {
    Command& c = add(name, help);
    c.flags->option("--checkpoint", "checkpoint", "trained checkpoint");
    c.flags->option("--manifest", "manifest", "corpus manifest");
    c.flags->option("--out", "out", "report directory");
    add_network_flags(*c.flags);
    add_gt_flags(*c.flags, "gt-");
    return c;
  };
  {
    Command& c = add_eval_like("eval", "count MAE/MSE on one split");
    c.flags->option("--split", "split", "train | val | test");
    c.run = plain(run_eval);
  }
  {
    Command& c = add_eval_like("sweep", "evaluate at reduced resolutions");
    c.flags->option("--split", "split", "train | val | test");
    c.flags->option("--ratios", "ratios", "comma separated area ratios in (0, 1]");
    c.run = plain(run_sweep);
  }
  {
    Command& c = add_eval_like("cross-eval", "evaluate on another corpus' test split");
    c.run = plain(run_cross_eval);
  }
  bool check_ok = true;
  {
    Command& c = add("gradcheck", "finite-difference gradient battery");
    c.flags->option("--out", "out", "directory for run.json");
    c.run = [&check_ok](const Json& cfg, std::ostream& o, std::ostream&) {
      check_ok = run_gradcheck(cfg, o);
    };
  }
  {
    Command& c = add("mixer-test", "mixer coefficient self-test");
    c.flags->option("--G", "groups", "channel groups");
    c.flags->option("--draws", "draws", "random weight draws");
    c.flags->option("--out", "out", "directory for run.json");
    c.run = [&check_ok](const Json& cfg, std::ostream& o, std::ostream&) {
      check_ok = run_mixer_test(cfg, o);
    };
  }
  {
    Command& c = add("export-pgm", "save a density map as a grey image");
    c.flags->option("--in", "in", "input .dmap file");
    c.flags->option("--out", "out", "output .pgm file");
    c.echo_dir = [](const Json& cfg) {
      return fs::path(cfg.at("out").get<std::string>()).parent_path();
    };
    c.run = plain(run_export);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInvalid;
  }

  const auto chosen = std::find_if(commands.begin(), commands.end(),
                                   [](const auto& kv) { return kv.second.app->parsed(); });
  const std::string& name = chosen->first;
  const Command& cmd = chosen->second;
  try {
    Json cfg = default_config();
    if (!cmd.config_path.empty()) merge_config(cfg, load_config_file(cmd.config_path));
    merge_config(cfg, cmd.flags->overrides(cfg));
    write_run_echo(name, cfg, cmd.echo_dir(cfg));
    cmd.run(cfg, out, err);
  } catch (const std::invalid_argument& e) {
    err << name << ": " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << name << ": " << e.what() << '\n';
    return kExitRuntime;
  }
  return check_ok ? kExitOk : kExitRuntime;
}

}  // namespace scalecount

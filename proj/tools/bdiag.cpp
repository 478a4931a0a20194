// Copyright 2026 The bearing-dx Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// bdiag: command-line front end for the bearing-dx pipeline.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bdx/csv.hpp"
#include "bdx/error.hpp"
#include "bdx/experiments/plan.hpp"
#include "bdx/experiments/protocols.hpp"
#include "bdx/experiments/report.hpp"
#include "bdx/experiments/splits.hpp"
#include "bdx/features.hpp"
#include "bdx/ingest.hpp"
#include "bdx/model/checkpoint.hpp"
#include "bdx/parallel.hpp"
#include "bdx/spectral.hpp"
#include "bdx/textgen.hpp"

namespace fs = std::filesystem;
namespace ex = bdx::experiments;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Global {
  int threads = 0;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

struct SegFlags {
  std::size_t window = 2048;
  std::size_t step = 1024;
};

// Plan overrides; each maps to one plan key.
struct Overrides {
  std::optional<std::size_t> trials, epochs, batch_size, patch, stride, d_model, layers, heads,
      window, step;
  std::optional<double> lr;
};

struct PlanFlags {
  std::string plan;
  std::vector<std::string> data;
  std::vector<std::string> only;
  std::string report;
  std::string csv;
  std::string corpus_dir = ".";
  Overrides ov;
};

void add_segmentation(CLI::App* cmd, SegFlags& f) {
  cmd->add_option("--window", f.window, "Segment length in samples")->capture_default_str();
  cmd->add_option("--step", f.step, "Hop between segment starts")->capture_default_str();
}

void add_plan_flags(CLI::App* cmd, PlanFlags& f) {
  cmd->add_option("--plan", f.plan, "Plan file (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--data", f.data, "Dataset manifest as ID=PATH (repeatable)");
  cmd->add_option("--only", f.only, "Run only the plans with these ids");
  cmd->add_option("--report", f.report, "Report JSON path (default <plan stem>.report.json)");
  cmd->add_option("--csv", f.csv, "Flat CSV log path (default <plan stem>.report.csv)");
  cmd->add_option("--corpus-dir", f.corpus_dir, "Directory for corpus files of emit_corpus plans")
      ->capture_default_str();
  auto& o = f.ov;
  cmd->add_option("--trials", o.trials, "Override trials");
  cmd->add_option("--epochs", o.epochs, "Override train.epochs");
  cmd->add_option("--batch-size", o.batch_size, "Override train.batch_size");
  cmd->add_option("--lr", o.lr, "Override train.lr");
  cmd->add_option("--patch", o.patch, "Override model.patch_len");
  cmd->add_option("--stride", o.stride, "Override model.stride");
  cmd->add_option("--d-model", o.d_model, "Override model.d_model");
  cmd->add_option("--layers", o.layers, "Override model.n_layers");
  cmd->add_option("--heads", o.heads, "Override model.n_heads");
  cmd->add_option("--window", o.window, "Override segmentation.window_len");
  cmd->add_option("--step", o.step, "Override segmentation.step");
}

std::uint64_t effective_seed(const Global& g, std::uint64_t fallback) {
  if (g.seed) return *g.seed;
  if (const char* env = std::getenv("BD_SEED"); env && *env) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw bdx::Error(bdx::ErrorCode::InvalidConfig, "BD_SEED is not an unsigned integer",
                       {{"BD_SEED", env}});
    }
  }
  return fallback;
}

bool seed_overridden(const Global& g) {
  const char* env = std::getenv("BD_SEED");
  return g.seed.has_value() || (env && *env);
}

void header(const Global& g, const std::string& cmd, const std::string& seeds) {
  if (g.quiet) return;
  std::cout << "bdiag " << cmd << " seed=" << seeds << " threads=" << bdx::max_threads() << '\n';
}

bdx::SegmentationConfig seg_config(const SegFlags& f) {
  bdx::SegmentationConfig c;
  c.window_len = f.window;
  c.step = f.step;
  c.validate();
  return c;
}

std::vector<bdx::Segment> segment_all(const bdx::ingest::LoadedDataset& ds,
                                      const bdx::SegmentationConfig& cfg) {
  std::vector<bdx::Segment> out;
  for (const auto& s : ds.signals) {
    auto segs = bdx::segment_sliding_window(s, cfg);
    for (auto& seg : segs) out.push_back(std::move(seg));
  }
  return out;
}

void print_warnings(const bdx::ingest::LoadedDataset& ds) {
  for (const auto& w : ds.warnings) std::cerr << "warning: " << w << '\n';
}

// ---- synth ----------------------------------------------------------------

struct SynthFlags {
  std::string out;
  std::vector<std::string> datasets{"CWRU", "MFPT", "JNU", "PU"};
  std::size_t length = 2048 + 199 * 1024;
  std::string format = "raw";
};

int cmd_synth(const Global& g, const SynthFlags& f) {
  const std::uint64_t seed = effective_seed(g, 0);
  header(g, "synth", std::to_string(seed));
  struct Layout {
    int variant;
    std::vector<std::string> conditions;
  };
  const std::map<std::string, Layout> known = {
      {"CWRU", {0, {"0", "1", "2", "3"}}},
      {"MFPT", {1, {"0"}}},
      {"JNU", {2, {"1", "2", "3"}}},
      {"PU", {3, {"0", "1", "2", "3"}}},
      {"SYN", {0, {"0"}}},
  };
  for (const auto& id : f.datasets) {
    auto it = known.find(id);
    if (it == known.end()) {
      throw bdx::Error(bdx::ErrorCode::InvalidConfig,
                       "unknown stand-in dataset '" + id + "' (CWRU, MFPT, JNU, PU, SYN)",
                       {{"dataset", id}});
    }
    const auto dir = fs::path(f.out) / id;
    fs::create_directories(dir);
    bdx::ingest::DatasetManifest m;
    m.dataset_id = id;
    m.label_space = bdx::ingest::default_label_space(id);
    bdx::FixtureDatasetSpec spec;
    spec.dataset_id = id;
    spec.dataset_variant = it->second.variant;
    spec.labels = m.label_space;
    spec.n_conditions = it->second.conditions.size();
    spec.length = f.length;
    spec.seed = seed;
    // Condition variants shift the impact rate, a stand-in for shaft speed.
    for (const auto& sig : bdx::fixture_dataset(spec)) {
      const auto& cond = it->second.conditions.at(std::stoul(sig.condition_id));
      const std::string stem = std::string(bdx::to_string(sig.label)) + "_c" + cond;
      bdx::ingest::ManifestEntry e;
      e.sample_rate_hz = sig.sample_rate_hz;
      e.condition_id = cond;
      e.label = sig.label;
      if (f.format == "csv") {
        e.format = bdx::ingest::FileFormat::Csv;
        e.path = dir / (stem + ".csv");
        e.variable = "amplitude";
        std::ofstream out(e.path);
        out << "amplitude\n";
        for (double v : sig.samples) out << bdx::format_double(v) << '\n';
      } else {
        e.format = bdx::ingest::FileFormat::Raw;
        e.path = dir / (stem + ".f64");
        bdx::ingest::write_raw(e.path, sig.samples, bdx::ingest::ElementType::F64,
                               bdx::ingest::ByteOrder::Little);
      }
      m.entries.push_back(std::move(e));
    }
    bdx::ingest::write_manifest(m, dir / "manifest.json");
    if (!g.quiet) {
      std::cout << id << ": " << m.entries.size() << " signals -> " << (dir / "manifest.json").string()
                << '\n';
    }
  }
  return kExitOk;
}

// ---- extract ----------------------------------------------------------------

struct ExtractFlags {
  std::string manifest;
  std::string out;
  SegFlags seg;
  bool literal = false;
};

int cmd_extract(const Global& g, const ExtractFlags& f) {
  header(g, "extract", "n/a");
  const auto ds = bdx::ingest::load_manifest(f.manifest);
  print_warnings(ds);
  const auto segs = segment_all(ds, seg_config(f.seg));
  bdx::FeatureOptions opts;
  opts.literal_kurtosis_index = f.literal;
  const auto feats = bdx::extract_features_batch(segs, bdx::Exec::Parallel, opts);
  std::ofstream out(f.out, std::ios::binary | std::ios::trunc);
  if (!out) throw bdx::Error(bdx::ErrorCode::Io, "cannot write features", {{"path", f.out}});
  bdx::write_feature_csv(segs, feats, out);
  if (!g.quiet) {
    std::cout << "signals: " << ds.signals.size() << " segments: " << segs.size()
              << " features: " << bdx::kNumFeatures << '\n';
  }
  return kExitOk;
}

// ---- corpus -----------------------------------------------------------------

struct CorpusFlags {
  std::string manifest;
  std::string out;
  std::string tmpl;
  SegFlags seg;
};

int cmd_corpus(const Global& g, const CorpusFlags& f) {
  const std::uint64_t seed = effective_seed(g, 0);
  header(g, "corpus", std::to_string(seed));
  const auto tpl = f.tmpl.empty() ? bdx::text::default_template() : bdx::text::load_template(f.tmpl);
  tpl.validate();
  const auto ds = bdx::ingest::load_manifest(f.manifest);
  print_warnings(ds);
  const auto segs = segment_all(ds, seg_config(f.seg));
  const auto sp = ex::build_splits(segs, {ex::SplitMode::TrainTest82, seed, true});
  const auto feats = bdx::extract_features_batch(segs);
  auto emit = [&](const std::vector<std::size_t>& idx, const std::string& suffix) {
    std::vector<bdx::text::FinetuneRecord> recs;
    for (std::size_t i : idx) recs.push_back(bdx::text::render_record(feats[i], segs[i].label, tpl));
    const fs::path p = f.out + suffix;
    return std::make_pair(p, bdx::text::emit_corpus(recs, p));
  };
  const auto [train_path, n_train] = emit(sp.train, "_train.jsonl");
  const auto [test_path, n_test] = emit(sp.test, "_test.jsonl");
  if (!g.quiet) {
    std::cout << "train: " << n_train << " lines -> " << train_path.string() << '\n'
              << "test: " << n_test << " lines -> " << test_path.string() << '\n'
              << "leakage: " << ex::audit_leakage(segs, sp) << '\n';
  }
  return kExitOk;
}

// ---- stft -------------------------------------------------------------------

struct StftFlags {
  std::string manifest;
  std::size_t entry = 0;
  std::string out;
  std::size_t frame = 256;
  std::size_t hop = 128;
  std::string taper = "hann";
};

int cmd_stft(const Global& g, const StftFlags& f) {
  header(g, "stft", "n/a");
  const auto ds = bdx::ingest::load_manifest(f.manifest);
  if (f.entry >= ds.signals.size()) {
    throw bdx::Error(bdx::ErrorCode::InvalidInput, "manifest entry out of range",
                     {{"entry", std::to_string(f.entry)}});
  }
  const auto& sig = ds.signals[f.entry];
  bdx::StftConfig cfg;
  cfg.window_len = f.frame;
  cfg.hop = f.hop;
  cfg.window = f.taper == "rect" ? bdx::WindowFn::Rect : bdx::WindowFn::Hann;
  const auto sg = bdx::stft(sig.samples, sig.sample_rate_hz, cfg);
  std::ofstream out(f.out, std::ios::binary | std::ios::trunc);
  if (!out) throw bdx::Error(bdx::ErrorCode::Io, "cannot write spectrogram", {{"path", f.out}});
  bdx::write_spectrogram_csv(sg, out);
  if (!g.quiet) {
    std::cout << "frames: " << sg.frames.size() << " bins: " << sg.freqs_hz.size() << '\n';
  }
  return kExitOk;
}

// ---- plan-driven commands ---------------------------------------------------

void apply_overrides(ex::ExperimentPlan& p, const Overrides& o, const Global& g) {
  if (o.trials) p.trials = *o.trials;
  if (o.epochs) p.train.epochs = *o.epochs;
  if (o.batch_size) p.train.batch_size = *o.batch_size;
  if (o.lr) p.train.lr = *o.lr;
  if (o.patch) p.model.patch_len = *o.patch;
  if (o.stride) p.model.stride = *o.stride;
  if (o.d_model) p.model.d_model = *o.d_model;
  if (o.layers) p.model.n_layers = *o.layers;
  if (o.heads) p.model.n_heads = *o.heads;
  if (o.window) p.segmentation.window_len = *o.window;
  if (o.step) p.segmentation.step = *o.step;
  p.model.window_len = p.segmentation.window_len;
  if (seed_overridden(g)) p.seed = effective_seed(g, p.seed);
  p.validate();
}

std::vector<ex::ExperimentPlan> load_plans(const PlanFlags& f, const Global& g) {
  auto plans = ex::load_plan_file(f.plan);
  if (!f.only.empty()) {
    std::vector<ex::ExperimentPlan> kept;
    for (auto& p : plans) {
      if (std::find(f.only.begin(), f.only.end(), p.id) != f.only.end()) kept.push_back(std::move(p));
    }
    if (kept.size() != f.only.size()) {
      throw bdx::Error(bdx::ErrorCode::PlanError, "--only names a plan id not in the file",
                       {{"plan", f.plan}});
    }
    plans = std::move(kept);
  }
  std::map<std::string, std::string> cli_data;
  for (const auto& d : f.data) {
    const auto eq = d.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == d.size()) {
      throw bdx::Error(bdx::ErrorCode::PlanError, "--data expects ID=PATH", {{"value", d}});
    }
    cli_data[d.substr(0, eq)] = d.substr(eq + 1);
  }
  for (auto& p : plans) {
    for (const auto& [id, path] : cli_data) p.datasets[id] = path;
    apply_overrides(p, f.ov, g);
  }
  return plans;
}

std::vector<std::string> needed_datasets(const ex::ExperimentPlan& p) {
  if (p.kind == ex::PlanKind::CrossDatasetFull || p.kind == ex::PlanKind::CrossDatasetLimited) {
    auto ids = p.sources;
    ids.push_back(p.target);
    return ids;
  }
  return {p.dataset};
}

void load_catalog(const std::vector<ex::ExperimentPlan>& plans, ex::Catalog& cat) {
  for (const auto& p : plans) {
    for (const auto& id : needed_datasets(p)) {
      if (cat.count(id)) continue;
      auto it = p.datasets.find(id);
      if (it == p.datasets.end()) {
        throw bdx::Error(bdx::ErrorCode::PlanError,
                         "plan '" + p.id + "' needs dataset '" + id + "'; pass --data " + id +
                             "=MANIFEST",
                         {{"plan", p.id}, {"dataset", id}});
      }
      auto ds = bdx::ingest::load_manifest(it->second);
      print_warnings(ds);
      if (ds.dataset_id != id) {
        throw bdx::Error(bdx::ErrorCode::PlanError,
                         "manifest for '" + id + "' declares dataset_id '" + ds.dataset_id + "'",
                         {{"dataset", id}});
      }
      cat.emplace(id, std::move(ds));
    }
  }
}

std::string seeds_of(const std::vector<ex::ExperimentPlan>& plans) {
  std::set<std::uint64_t> s;
  for (const auto& p : plans) s.insert(p.seed);
  std::string out;
  for (auto v : s) out += (out.empty() ? "" : ",") + std::to_string(v);
  return out;
}

void write_outputs(const PlanFlags& f, const std::vector<ex::ExperimentReport>& reports,
                   const Global& g) {
  const auto stem = fs::path(f.plan).stem().string();
  const fs::path report = f.report.empty() ? fs::path(stem + ".report.json") : fs::path(f.report);
  const fs::path csv = f.csv.empty() ? fs::path(stem + ".report.csv") : fs::path(f.csv);
  ex::write_report_json(reports, report);
  ex::write_report_csv(reports, csv);
  if (!g.quiet) {
    std::cout << "report: " << report.string() << '\n' << "csv: " << csv.string() << '\n';
  }
}

ex::RunOptions run_options(const Global& g, const PlanFlags& f) {
  ex::RunOptions o;
  o.parallel_trials = bdx::max_threads() > 1;
  o.corpus_dir = f.corpus_dir;
  o.log = g.quiet ? nullptr : &std::cerr;
  return o;
}

int run_plans(const Global& g, const PlanFlags& f, const std::string& cmd,
              const std::string& checkpoint) {
  auto plans = load_plans(f, g);
  if (cmd == "train") {
    for (const auto& p : plans) {
      if (p.kind != ex::PlanKind::Single) {
        throw bdx::Error(bdx::ErrorCode::PlanError,
                         "train runs single-dataset plans; use protocol for '" + p.id + "'",
                         {{"plan", p.id}});
      }
    }
    if (!checkpoint.empty() && plans.size() != 1) {
      throw bdx::Error(bdx::ErrorCode::PlanError,
                       "--checkpoint needs exactly one plan; select it with --only");
    }
  }
  header(g, cmd, seeds_of(plans));
  ex::Catalog cat;
  load_catalog(plans, cat);
  auto opts = run_options(g, f);
  std::vector<std::vector<std::uint8_t>> models;
  std::mutex mu;
  if (!checkpoint.empty()) {
    opts.model_sink = [&](const ex::TrialResult& t, const bdx::model::Classifier<float>& m) {
      auto bytes = bdx::model::serialize_checkpoint(m);
      std::lock_guard lock(mu);
      if (models.size() <= t.trial) models.resize(t.trial + 1);
      models[t.trial] = std::move(bytes);
    };
  }
  std::vector<ex::ExperimentReport> reports;
  for (const auto& p : plans) {
    reports.push_back(ex::run_plan(p, cat, opts));
    std::cout << ex::summary_table(reports.back());
  }
  write_outputs(f, reports, g);
  if (!checkpoint.empty() && !reports.front().trials.empty()) {
    const auto best = reports.front().best_trial;
    std::ofstream out(checkpoint, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(models.at(best).data()),
              static_cast<std::streamsize>(models.at(best).size()));
    if (!out) throw bdx::Error(bdx::ErrorCode::Io, "cannot write checkpoint", {{"path", checkpoint}});
    if (!g.quiet) std::cout << "checkpoint: " << checkpoint << " (trial " << best << ")\n";
  }
  return kExitOk;
}

// ---- sweep ------------------------------------------------------------------

std::vector<ex::GridCell> parse_grid(const std::string& text) {
  if (text.empty() || text == "table8") return ex::table8_grid();
  std::vector<ex::GridCell> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(item);
      out.emplace_back(std::stoul(item.substr(0, colon)), std::stoul(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw bdx::Error(bdx::ErrorCode::PlanError, "grid cells are PATCH:STRIDE", {{"cell", item}});
    }
  }
  return out;
}

int cmd_sweep(const Global& g, const PlanFlags& f, const std::string& grid_text) {
  auto plans = load_plans(f, g);
  if (plans.size() != 1) {
    throw bdx::Error(bdx::ErrorCode::PlanError, "sweep needs exactly one base plan; use --only");
  }
  auto base = plans.front();
  base.kind = ex::PlanKind::Sweep;
  base.grid = parse_grid(grid_text);
  base.validate();
  header(g, "sweep", std::to_string(base.seed));
  ex::Catalog cat;
  load_catalog({base}, cat);
  std::vector<ex::ExperimentReport> reports{
      ex::sweep_patch_stride(base.grid, base, cat, run_options(g, f))};
  std::cout << ex::summary_table(reports.front());
  write_outputs(f, reports, g);
  return kExitOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalFlags {
  std::string checkpoint;
  std::string manifest;
  std::size_t step = 1024;
  std::string embeddings;
};

int cmd_eval(const Global& g, const EvalFlags& f) {
  header(g, "eval", "n/a");
  const auto model = bdx::model::load_checkpoint<float>(f.checkpoint);
  const auto& cfg = model.config();
  const auto ds = bdx::ingest::load_manifest(f.manifest);
  print_warnings(ds);
  bdx::SegmentationConfig sc;
  sc.window_len = cfg.window_len;
  sc.step = f.step;
  sc.validate();
  const auto segs = segment_all(ds, sc);

  std::vector<bdx::FaultLabel> space;
  if (cfg.labels.empty()) {
    space = ds.label_space;
  } else {
    for (const auto& name : cfg.labels) {
      auto l = bdx::parse_fault_label(name);
      if (!l) {
        throw bdx::Error(bdx::ErrorCode::LabelSpaceMismatch, "checkpoint class '" + name +
                                                                 "' is not a fault label");
      }
      space.push_back(*l);
    }
  }
  if (space.size() != cfg.n_classes) {
    throw bdx::Error(bdx::ErrorCode::LabelSpaceMismatch,
                     "manifest label space does not match the checkpoint's classes");
  }
  std::vector<std::span<const double>> windows;
  std::vector<int> truth;
  for (const auto& s : segs) {
    auto it = std::find(space.begin(), space.end(), s.label);
    if (it == space.end()) {
      throw bdx::Error(bdx::ErrorCode::LabelSpaceMismatch,
                       "label '" + std::string(bdx::to_string(s.label)) +
                           "' is not a class of the checkpoint");
    }
    windows.push_back(s.samples);
    truth.push_back(static_cast<int>(it - space.begin()));
  }
  const auto pred = bdx::model::predict_batch(model, std::span<const std::span<const double>>(windows));
  const auto met = ex::compute_metrics(pred, truth, space);
  std::cout << std::fixed << std::setprecision(6) << "accuracy: " << met.accuracy
            << " (n=" << truth.size() << ")\n";
  if (!g.quiet) {
    std::cout << "confusion (rows true, cols predicted):";
    for (auto l : space) std::cout << ' ' << bdx::to_string(l);
    std::cout << '\n';
    for (std::size_t i = 0; i < met.confusion.size(); ++i) {
      std::cout << std::setw(8) << bdx::to_string(space[i]);
      for (std::size_t j = 0; j < met.confusion.size(); ++j) {
        std::cout << ' ' << std::setw(6) << met.confusion.at(i, j);
      }
      std::cout << '\n';
    }
  }
  if (!f.embeddings.empty()) {
    const auto rows = ex::export_embeddings(model, segs, f.embeddings);
    if (!g.quiet) std::cout << "embeddings: " << rows << " rows -> " << f.embeddings << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  bdx::tune_allocator();
  CLI::App app{"bdiag - bearing fault diagnosis pipeline", "bdiag"};
  app.set_help_all_flag("--help-all", "Print help for every subcommand");
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores, 1 = fully serial)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "Seed (default: $BD_SEED, else the plan's or 0)");
  app.add_flag("--quiet", g.quiet, "Only print results and errors");

  SynthFlags synth;
  auto* c_synth = app.add_subcommand("synth", "Write synthetic stand-in datasets with manifests");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--datasets", synth.datasets, "Subset of CWRU MFPT JNU PU SYN")
      ->delimiter(',')
      ->capture_default_str();
  c_synth->add_option("--length", synth.length, "Samples per signal")->capture_default_str();
  c_synth->add_option("--format", synth.format, "Signal file format")
      ->check(CLI::IsMember({"raw", "csv"}))
      ->capture_default_str();

  ExtractFlags extract;
  auto* c_extract = app.add_subcommand("extract", "Segment signals and write the 24-feature CSV");
  c_extract->add_option("--manifest", extract.manifest, "Dataset manifest")->required();
  c_extract->add_option("--out", extract.out, "Feature CSV path")->required();
  add_segmentation(c_extract, extract.seg);
  c_extract->add_flag("--literal-kurtosis-index", extract.literal,
                      "Compute p9 as p7/p6 instead of p7/p8^2");

  CorpusFlags corpus;
  auto* c_corpus = app.add_subcommand("corpus", "Write an 8:2 fine-tuning corpus (JSON lines)");
  c_corpus->add_option("--manifest", corpus.manifest, "Dataset manifest")->required();
  c_corpus->add_option("--out", corpus.out, "Output prefix; writes PREFIX_train/_test.jsonl")
      ->required();
  c_corpus->add_option("--template", corpus.tmpl, "Prompt template JSON (default built-in)");
  add_segmentation(c_corpus, corpus.seg);

  StftFlags stft;
  auto* c_stft = app.add_subcommand("stft", "Export the STFT magnitude of one manifest entry");
  c_stft->add_option("--manifest", stft.manifest, "Dataset manifest")->required();
  c_stft->add_option("--entry", stft.entry, "Manifest entry index")->capture_default_str();
  c_stft->add_option("--out", stft.out, "Spectrogram CSV path")->required();
  c_stft->add_option("--frame", stft.frame, "Frame length")->capture_default_str();
  c_stft->add_option("--hop", stft.hop, "Frame hop")->capture_default_str();
  c_stft->add_option("--taper", stft.taper, "Frame window")
      ->check(CLI::IsMember({"hann", "rect"}))
      ->capture_default_str();

  PlanFlags train, protocol, sweep;
  std::string checkpoint, grid = "table8";
  auto* c_train = app.add_subcommand("train", "Train and test single-dataset plans");
  add_plan_flags(c_train, train);
  c_train->add_option("--checkpoint", checkpoint, "Save the best trial's model here");

  EvalFlags eval;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  c_eval->add_option("--checkpoint", eval.checkpoint, "Model checkpoint (.bdlm)")->required();
  c_eval->add_option("--manifest", eval.manifest, "Dataset manifest")->required();
  c_eval->add_option("--step", eval.step, "Hop between segment starts")->capture_default_str();
  c_eval->add_option("--embeddings", eval.embeddings, "Also write pooled embeddings CSV here");

  auto* c_protocol = app.add_subcommand("protocol", "Run every plan in a plan file");
  add_plan_flags(c_protocol, protocol);

  auto* c_sweep = app.add_subcommand("sweep", "Patch/stride sweep around a base plan");
  add_plan_flags(c_sweep, sweep);
  c_sweep->add_option("--grid", grid, "table8 or PATCH:STRIDE[,PATCH:STRIDE...]")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g.threads > 0) bdx::set_num_threads(g.threads);
    if (c_synth->parsed()) return cmd_synth(g, synth);
    if (c_extract->parsed()) return cmd_extract(g, extract);
    if (c_corpus->parsed()) return cmd_corpus(g, corpus);
    if (c_stft->parsed()) return cmd_stft(g, stft);
    if (c_train->parsed()) return run_plans(g, train, "train", checkpoint);
    if (c_eval->parsed()) return cmd_eval(g, eval);
    if (c_protocol->parsed()) return run_plans(g, protocol, "protocol", "");
    if (c_sweep->parsed()) return cmd_sweep(g, sweep, grid);
  } catch (const bdx::Error& e) {
    std::cerr << e.structured() << '\n';
    return e.code() == bdx::ErrorCode::PlanError ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error=Internal msg=\"" << e.what() << "\"\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

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

#include "bdx/experiments/protocols.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <ostream>
#include <set>

#include <omp.h>

#include "bdx/error.hpp"
#include "bdx/experiments/splits.hpp"
#include "bdx/features.hpp"
#include "bdx/model/classifier.hpp"

namespace bdx::experiments {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

const ingest::LoadedDataset& need(const Catalog& data, const std::string& id) {
  auto it = data.find(id);
  if (it == data.end()) {
    throw Error(ErrorCode::PlanError, "no data loaded for dataset '" + id + "'",
                {{"dataset", id}});
  }
  return it->second;
}

// Appends the windows of every signal in `ds` and returns their index range.
std::vector<std::size_t> append_segments(const ingest::LoadedDataset& ds,
                                         const SegmentationConfig& cfg,
                                         std::vector<Segment>& out) {
  std::vector<std::size_t> idx;
  for (const auto& sig : ds.signals) {
    auto segs = segment_sliding_window(sig, cfg);
    for (auto& s : segs) {
      idx.push_back(out.size());
      out.push_back(std::move(s));
    }
  }
  if (idx.empty()) {
    throw Error(ErrorCode::EmptyDataset, "dataset '" + ds.dataset_id + "' has no segments",
                {{"dataset", ds.dataset_id}});
  }
  return idx;
}

int class_index(std::span<const FaultLabel> space, FaultLabel label) {
  auto it = std::find(space.begin(), space.end(), label);
  if (it == space.end()) {
    throw Error(ErrorCode::LabelSpaceMismatch,
                "label '" + std::string(to_string(label)) + "' outside the label space",
                {{"label", std::string(to_string(label))}});
  }
  return static_cast<int>(it - space.begin());
}

std::vector<model::Example> examples(const std::vector<Segment>& segs,
                                     std::span<const std::size_t> idx,
                                     std::span<const FaultLabel> space) {
  std::vector<model::Example> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back({segs[i].samples, class_index(space, segs[i].label)});
  return out;
}

std::vector<std::size_t> concat(std::initializer_list<const std::vector<std::size_t>*> parts) {
  std::vector<std::size_t> out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  std::sort(out.begin(), out.end());
  return out;
}

std::set<FaultLabel> labels_of(const std::vector<Segment>& segs,
                               std::span<const std::size_t> idx) {
  std::set<FaultLabel> out;
  for (std::size_t i : idx) out.insert(segs[i].label);
  return out;
}

// Runs fn(trial) for every trial, concurrently when allowed. Exceptions are
// rethrown in trial order after all trials finished.
template <typename Fn>
void for_each_trial(std::vector<TrialResult>& trials, const RunOptions& opts, Fn&& fn) {
  std::vector<std::exception_ptr> errors(trials.size());
  const auto n = static_cast<std::ptrdiff_t>(trials.size());
#pragma omp parallel for schedule(dynamic, 1) if (opts.parallel_trials && n > 1)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    try {
      fn(trials[static_cast<std::size_t>(t)]);
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void log_line(const RunOptions& opts, const std::string& line) {
  if (!opts.log) return;
#pragma omp critical(bdx_protocol_log)
  { *opts.log << line << '\n' << std::flush; }
}

model::ModelConfig trial_model(const ExperimentPlan& plan, std::span<const FaultLabel> space,
                               std::uint64_t seed) {
  auto cfg = plan.model;
  cfg.n_classes = space.size();
  cfg.labels.clear();
  for (auto l : space) cfg.labels.emplace_back(to_string(l));
  cfg.seed = seed;
  cfg.window_len = plan.segmentation.window_len;
  return cfg;
}

PhaseLog fit(model::Classifier<float>& m, const std::string& phase,
             const std::vector<model::Example>& train, const std::vector<model::Example>& val,
             model::TrainHyper hyper, std::uint64_t seed) {
  hyper.seed = seed;
  auto res = model::train(m, std::span<const model::Example>(train),
                          std::span<const model::Example>(val), hyper);
  return {phase, std::move(res.log), res.best_epoch};
}

Metrics evaluate(const model::Classifier<float>& m, const std::vector<model::Example>& test,
                 std::span<const FaultLabel> space) {
  const auto pred = model::predict(m, std::span<const model::Example>(test));
  std::vector<int> truth;
  truth.reserve(test.size());
  for (const auto& e : test) truth.push_back(e.label);
  return compute_metrics(pred, truth, space);
}

void finalize(ExperimentReport& r) {
  std::vector<double> acc;
  std::vector<double> base;
  for (const auto& t : r.trials) {
    acc.push_back(t.test_accuracy);
    if (t.baseline_accuracy) base.push_back(*t.baseline_accuracy);
  }
  r.test = summarize(acc);
  if (!base.empty()) {
    r.baseline = summarize(base);
    r.transfer_gain = r.test.mean - r.baseline->mean;
  }
  r.best_trial = 0;
  for (std::size_t t = 1; t < r.trials.size(); ++t) {
    if (r.trials[t].test_accuracy > r.trials[r.best_trial].test_accuracy) r.best_trial = t;
  }
}

std::string file_stem(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    if (c == '/' || c == '\\' || c == ' ' || c == ':') c = '_';
  }
  return s;
}

CorpusInfo write_corpus(const ExperimentPlan& plan, const std::vector<Segment>& segs,
                        std::span<const std::size_t> train, std::span<const std::size_t> test,
                        const RunOptions& opts) {
  const auto tpl = plan.template_path.empty() ? text::default_template()
                                              : text::load_template(plan.template_path);
  tpl.validate();
  auto render = [&](std::span<const std::size_t> idx) {
    std::vector<Segment> picked;
    picked.reserve(idx.size());
    for (std::size_t i : idx) picked.push_back(segs[i]);
    const auto fv = extract_features_batch(picked);
    std::vector<text::FinetuneRecord> recs;
    recs.reserve(idx.size());
    for (std::size_t k = 0; k < picked.size(); ++k) {
      recs.push_back(text::render_record(fv[k], picked[k].label, tpl));
    }
    return recs;
  };
  CorpusInfo info;
  info.train_path = opts.corpus_dir / (file_stem(plan.id) + "_train.jsonl");
  info.test_path = opts.corpus_dir / (file_stem(plan.id) + "_test.jsonl");
  info.train_lines = text::emit_corpus(render(train), info.train_path);
  info.test_lines = text::emit_corpus(render(test), info.test_path);
  return info;
}

void init_trials(ExperimentReport& r) {
  r.trials.resize(r.plan.trials);
  for (std::size_t t = 0; t < r.trials.size(); ++t) {
    r.trials[t].trial = t;
    r.trials[t].seed = r.plan.seed + t;
  }
}

// Shared tail of run_single and run_cross_condition.
void train_and_test(ExperimentReport& r, const std::vector<Segment>& segs,
                    const std::vector<std::size_t>& train, const std::vector<std::size_t>& val,
                    const std::vector<std::size_t>& test, const RunOptions& opts) {
  const auto& plan = r.plan;
  if (plan.emit_corpus) {
    r.corpus = write_corpus(plan, segs, concat({&train, &val}), test, opts);
    return;
  }
  const auto tr = examples(segs, train, r.label_space);
  const auto va = examples(segs, val, r.label_space);
  const auto te = examples(segs, test, r.label_space);
  init_trials(r);
  for_each_trial(r.trials, opts, [&](TrialResult& t) {
    const auto t0 = Clock::now();
    model::Classifier<float> m(trial_model(plan, r.label_space, t.seed));
    t.phases.push_back(fit(m, "train", tr, va, plan.train, t.seed));
    if (opts.model_sink) opts.model_sink(t, m);
    auto met = evaluate(m, te, r.label_space);
    t.test_accuracy = met.accuracy;
    t.confusion = std::move(met.confusion);
    t.wall_time_s = seconds_since(t0);
    log_line(opts, "plan=" + plan.id + " trial=" + std::to_string(t.trial) +
                       " seed=" + std::to_string(t.seed) +
                       " test_accuracy=" + std::to_string(t.test_accuracy));
  });
  finalize(r);
}

}  // namespace

std::vector<FaultLabel> union_label_space(const Catalog& data,
                                          const std::vector<std::string>& ids) {
  std::set<FaultLabel> all;
  for (const auto& id : ids) {
    const auto& ds = need(data, id);
    all.insert(ds.label_space.begin(), ds.label_space.end());
  }
  return {all.begin(), all.end()};
}

ExperimentReport run_single(const ExperimentPlan& plan, const Catalog& data,
                            const RunOptions& opts) {
  const auto t0 = Clock::now();
  ExperimentReport r;
  r.plan = plan;
  const auto& ds = need(data, plan.dataset);
  r.label_space = ds.label_space;
  std::vector<Segment> segs;
  const auto pool = append_segments(ds, plan.segmentation, segs);
  const auto sp = build_splits(segs, pool, {SplitMode::TrainValTest811, plan.seed, plan.balance});
  r.leakage = audit_leakage(segs, sp);
  r.split_sizes = {{"train", sp.train.size()}, {"val", sp.val.size()}, {"test", sp.test.size()}};
  train_and_test(r, segs, sp.train, sp.val, sp.test, opts);
  r.wall_time_s = seconds_since(t0);
  return r;
}

ExperimentReport run_cross_condition(const ExperimentPlan& plan, const Catalog& data,
                                     const RunOptions& opts) {
  const auto t0 = Clock::now();
  ExperimentReport r;
  r.plan = plan;
  const auto& ds = need(data, plan.dataset);
  r.label_space = ds.label_space;
  std::vector<Segment> segs;
  const auto pool = append_segments(ds, plan.segmentation, segs);

  auto in = [](const std::vector<std::string>& set, const std::string& c) {
    return std::find(set.begin(), set.end(), c) != set.end();
  };
  std::vector<std::size_t> train_pool, test_pool;
  std::map<std::string, std::size_t> per_condition;
  for (std::size_t i : pool) {
    const auto& c = segs[i].condition_id;
    ++per_condition[c];
    if (in(plan.train_conditions, c)) train_pool.push_back(i);
    if (in(plan.test_conditions, c)) test_pool.push_back(i);
  }
  for (const auto* set : {&plan.train_conditions, &plan.test_conditions}) {
    for (const auto& c : *set) {
      if (per_condition[c] == 0) {
        throw Error(ErrorCode::EmptyCondition,
                    "condition '" + c + "' has no segments in " + plan.dataset,
                    {{"condition", c}, {"dataset", plan.dataset}});
      }
    }
  }
  const auto sp = build_splits(segs, train_pool, {SplitMode::TrainVal81, plan.seed, plan.balance});
  const auto test = plan.balance ? balance_classes(segs, test_pool, mix(plan.seed, 0x7E57))
                                 : test_pool;
  const std::vector<std::size_t> groups[] = {sp.train, sp.val, test};
  r.leakage = count_overlaps(segs, groups);
  std::size_t crossed = 0;
  for (std::size_t i : test) crossed += in(plan.train_conditions, segs[i].condition_id);
  r.split_sizes = {{"train", sp.train.size()},
                   {"val", sp.val.size()},
                   {"test", test.size()},
                   {"test_from_train_conditions", crossed}};
  train_and_test(r, segs, sp.train, sp.val, test, opts);
  r.wall_time_s = seconds_since(t0);
  return r;
}

namespace {

ExperimentReport run_cross_dataset(const ExperimentPlan& plan, const Catalog& data,
                                   const RunOptions& opts, bool limited) {
  const auto t0 = Clock::now();
  ExperimentReport r;
  r.plan = plan;
  auto ids = plan.sources;
  ids.push_back(plan.target);
  r.label_space = union_label_space(data, ids);

  std::vector<Segment> segs;
  std::vector<std::size_t> p1_train, p1_val;
  for (std::size_t s = 0; s < plan.sources.size(); ++s) {
    const auto pool = append_segments(need(data, plan.sources[s]), plan.segmentation, segs);
    const auto sp = build_splits(segs, pool,
                                 {SplitMode::TrainValTest811, mix(plan.seed, s + 1), plan.balance});
    p1_train.insert(p1_train.end(), sp.train.begin(), sp.train.end());
    p1_val.insert(p1_val.end(), sp.val.begin(), sp.val.end());
  }
  const auto target_pool = append_segments(need(data, plan.target), plan.segmentation, segs);
  const auto tsp =
      build_splits(segs, target_pool, {SplitMode::TrainValTest811, plan.seed, plan.balance});

  const std::vector<std::size_t> groups[] = {p1_train, p1_val, tsp.train, tsp.val, tsp.test};
  r.leakage = count_overlaps(segs, groups);
  std::size_t from_target = 0;
  for (const auto* v : {&p1_train, &p1_val}) {
    for (std::size_t i : *v) from_target += segs[i].dataset_id == plan.target;
  }
  r.split_sizes = {{"phase1_train", p1_train.size()},
                   {"phase1_val", p1_val.size()},
                   {"phase1_from_target", from_target},
                   {"target_train", tsp.train.size()},
                   {"target_val", tsp.val.size()},
                   {"test", tsp.test.size()}};

  const auto seen = [&] {
    auto a = labels_of(segs, p1_train);
    auto b = labels_of(segs, tsp.train);
    a.insert(b.begin(), b.end());
    return a;
  }();
  for (FaultLabel l : labels_of(segs, tsp.test)) {
    if (!seen.count(l)) {
      throw Error(ErrorCode::LabelSpaceMismatch,
                  "target label '" + std::string(to_string(l)) + "' never appears in training",
                  {{"label", std::string(to_string(l))}, {"target", plan.target}});
    }
  }

  if (plan.emit_corpus) {
    auto train = concat({&p1_train, &p1_val, &tsp.train, &tsp.val});
    if (limited) {
      const auto sub = limited_subsample(segs, tsp.train, plan.limited_fraction, plan.seed);
      train = concat({&p1_train, &p1_val, &sub, &tsp.val});
    }
    r.corpus = write_corpus(plan, segs, train, tsp.test, opts);
    r.wall_time_s = seconds_since(t0);
    return r;
  }

  const auto ex_p1_train = examples(segs, p1_train, r.label_space);
  const auto ex_p1_val = examples(segs, p1_val, r.label_space);
  const auto ex_val = examples(segs, tsp.val, r.label_space);
  const auto ex_test = examples(segs, tsp.test, r.label_space);
  const auto ex_full_train = limited ? std::vector<model::Example>{}
                                     : examples(segs, tsp.train, r.label_space);

  init_trials(r);
  for_each_trial(r.trials, opts, [&](TrialResult& t) {
    const auto tt0 = Clock::now();
    const auto cfg = trial_model(plan, r.label_space, t.seed);
    const std::uint64_t phase2_seed = mix(t.seed, 0x2);

    // One subsample per trial, consumed by both arms.
    std::vector<std::size_t> subset;
    if (limited) subset = limited_subsample(segs, tsp.train, plan.limited_fraction, t.seed);

    // Transfer arm: sources, then the target.
    model::Classifier<float> transfer(cfg);
    t.phases.push_back(fit(transfer, "phase1", ex_p1_train, ex_p1_val, plan.train, t.seed));
    if (limited) {
      const std::vector<std::size_t> transfer_subset = subset;
      t.transfer_subset_hash = membership_hash(segs, transfer_subset);
      t.subset_size = transfer_subset.size();
      const auto ex = examples(segs, transfer_subset, r.label_space);
      t.phases.push_back(fit(transfer, "phase2", ex, ex_val, plan.train, phase2_seed));
    } else {
      t.phases.push_back(fit(transfer, "phase2", ex_full_train, ex_val, plan.train, phase2_seed));
    }
    if (opts.model_sink) opts.model_sink(t, transfer);
    auto met = evaluate(transfer, ex_test, r.label_space);
    t.test_accuracy = met.accuracy;
    t.confusion = std::move(met.confusion);

    // Baseline arm: the same target data from scratch.
    model::Classifier<float> scratch(cfg);
    if (limited) {
      const std::vector<std::size_t> baseline_subset = subset;
      t.baseline_subset_hash = membership_hash(segs, baseline_subset);
      const auto ex = examples(segs, baseline_subset, r.label_space);
      t.phases.push_back(fit(scratch, "baseline", ex, ex_val, plan.train, phase2_seed));
    } else {
      t.phases.push_back(fit(scratch, "baseline", ex_full_train, ex_val, plan.train, phase2_seed));
    }
    auto bmet = evaluate(scratch, ex_test, r.label_space);
    t.baseline_accuracy = bmet.accuracy;
    t.baseline_confusion = std::move(bmet.confusion);
    t.wall_time_s = seconds_since(tt0);
    log_line(opts, "plan=" + plan.id + " trial=" + std::to_string(t.trial) +
                       " seed=" + std::to_string(t.seed) +
                       " transfer_accuracy=" + std::to_string(t.test_accuracy) +
                       " baseline_accuracy=" + std::to_string(*t.baseline_accuracy));
  });
  finalize(r);
  r.wall_time_s = seconds_since(t0);
  return r;
}

}  // namespace

ExperimentReport run_cross_dataset_full(const ExperimentPlan& plan, const Catalog& data,
                                        const RunOptions& opts) {
  return run_cross_dataset(plan, data, opts, false);
}

ExperimentReport run_cross_dataset_limited(const ExperimentPlan& plan, const Catalog& data,
                                           const RunOptions& opts) {
  return run_cross_dataset(plan, data, opts, true);
}

ExperimentReport sweep_patch_stride(std::vector<GridCell> grid, const ExperimentPlan& base,
                                    const Catalog& data, const RunOptions& opts) {
  const auto t0 = Clock::now();
  if (grid.empty()) grid = table8_grid();
  ExperimentReport r;
  r.plan = base;
  r.plan.kind = PlanKind::Sweep;
  r.plan.grid = grid;
  r.label_space = need(data, base.dataset).label_space;
  for (const auto& cell : grid) {
    const auto c0 = Clock::now();
    ExperimentPlan p = base;
    p.kind = PlanKind::Single;
    p.grid.clear();
    p.emit_corpus = false;
    p.model.patch_len = cell.first;
    p.model.stride = cell.second;
    p.id = base.id + "/p" + std::to_string(cell.first) + "s" + std::to_string(cell.second);
    p.validate();
    auto sub = run_single(p, data, opts);
    SweepCell sc;
    sc.cell = cell;
    sc.chosen = cell == kChosenCell;
    for (const auto& t : sub.trials) sc.accuracies.push_back(t.test_accuracy);
    sc.accuracy = sub.test;
    sc.wall_time_s = seconds_since(c0);
    r.leakage += sub.leakage;
    if (r.split_sizes.empty()) r.split_sizes = sub.split_sizes;
    r.cells.push_back(std::move(sc));
    log_line(opts, "plan=" + base.id + " cell=(" + std::to_string(cell.first) + "," +
                       std::to_string(cell.second) + ") mean_accuracy=" +
                       std::to_string(r.cells.back().accuracy.mean));
  }
  r.wall_time_s = seconds_since(t0);
  return r;
}

ExperimentReport run_plan(const ExperimentPlan& plan, const Catalog& data,
                          const RunOptions& opts) {
  plan.validate();
  switch (plan.kind) {
    case PlanKind::Single: return run_single(plan, data, opts);
    case PlanKind::CrossCondition: return run_cross_condition(plan, data, opts);
    case PlanKind::CrossDatasetFull: return run_cross_dataset_full(plan, data, opts);
    case PlanKind::CrossDatasetLimited: return run_cross_dataset_limited(plan, data, opts);
    case PlanKind::Sweep: return sweep_patch_stride(plan.grid, plan, data, opts);
  }
  return run_single(plan, data, opts);
}

}  // namespace bdx::experiments

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

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "bdx/error.hpp"
#include "bdx/experiments/metrics.hpp"
#include "bdx/experiments/plan.hpp"
#include "bdx/experiments/protocols.hpp"
#include "bdx/experiments/report.hpp"
#include "bdx/experiments/splits.hpp"
#include "oracles.hpp"

using namespace bdx;
using namespace bdx::experiments;

namespace {

const std::filesystem::path kSource = BDX_SOURCE_DIR;

std::vector<Segment> fixture_segments(std::size_t windows_per_signal, std::size_t window,
                                      std::size_t step, std::size_t n_conditions = 1,
                                      std::uint64_t seed = 1) {
  FixtureDatasetSpec spec;
  spec.n_conditions = n_conditions;
  spec.length = window + (windows_per_signal - 1) * step;
  spec.seed = seed;
  std::vector<Segment> out;
  for (const auto& sig : fixture_dataset(spec)) {
    for (auto& s : segment_sliding_window(sig, {window, step})) out.push_back(std::move(s));
  }
  return out;
}

std::vector<oracle::Window> windows_of(const std::vector<Segment>& segs,
                                       const std::vector<std::size_t>& idx) {
  std::vector<oracle::Window> w;
  for (std::size_t i : idx) w.push_back({segs[i].origin.signal_id, segs[i].origin.start, segs[i].samples.size()});
  return w;
}

std::size_t brute_leakage(const std::vector<Segment>& segs, const Splits& sp) {
  const auto tr = windows_of(segs, sp.train), va = windows_of(segs, sp.val), te = windows_of(segs, sp.test);
  return oracle::overlapping_pairs(tr, va) + oracle::overlapping_pairs(tr, te) +
         oracle::overlapping_pairs(va, te);
}

std::map<FaultLabel, std::size_t> class_counts(const std::vector<Segment>& segs,
                                               const std::vector<std::size_t>& idx) {
  std::map<FaultLabel, std::size_t> m;
  for (std::size_t i : idx) ++m[segs[i].label];
  return m;
}

ingest::LoadedDataset fixture_loaded(const std::string& id, int variant, std::size_t n_conditions,
                                     std::size_t length, std::vector<FaultLabel> labels = {
                                         std::begin(kAllFaultLabels), std::end(kAllFaultLabels)}) {
  FixtureDatasetSpec spec;
  spec.dataset_id = id;
  spec.dataset_variant = variant;
  spec.n_conditions = n_conditions;
  spec.length = length;
  spec.labels = labels;
  spec.seed = static_cast<std::uint64_t>(variant) + 10;
  ingest::LoadedDataset ds;
  ds.dataset_id = id;
  ds.label_space = labels;
  ds.signals = fixture_dataset(spec);
  return ds;
}

ExperimentPlan tiny_plan(const std::string& id, PlanKind kind) {
  ExperimentPlan p;
  p.id = id;
  p.kind = kind;
  p.trials = 2;
  p.segmentation = {256, 128};
  p.model.window_len = 256;
  p.model.patch_len = 64;
  p.model.stride = 32;
  p.model.d_model = 16;
  p.model.n_heads = 2;
  p.model.n_layers = 1;
  p.train.epochs = 2;
  p.train.batch_size = 16;
  return p;
}

template <typename F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("no error thrown");
  return Error(ErrorCode::InvalidInput, "unreachable");
}

}  // namespace

TEST_CASE("8:1:1 splits of non-overlapping windows are exact") {
  const auto segs = fixture_segments(100, 256, 256);
  const auto sp = build_splits(segs, {SplitMode::TrainValTest811, 4, true});
  for (auto l : kAllFaultLabels) {
    CHECK(class_counts(segs, sp.train)[l] == 80);
    CHECK(class_counts(segs, sp.val)[l] == 10);
    CHECK(class_counts(segs, sp.test)[l] == 10);
  }
  CHECK(audit_leakage(segs, sp) == 0);
  const auto s82 = build_splits(segs, {SplitMode::TrainTest82, 4, true});
  CHECK(s82.val.empty());
  CHECK(s82.train.size() == 320);
  CHECK(s82.test.size() == 80);
  const auto s81 = build_splits(segs, {SplitMode::TrainVal81, 4, true});
  CHECK(s81.test.empty());
  // ninths of 100: the front block holds 11, the back block 12
  const auto v81 = class_counts(segs, s81.val);
  const std::size_t per = v81.at(FaultLabel::Normal);
  CHECK((per == 100 / 9 || per == 100 - 100 * 8 / 9));
  for (auto l : kAllFaultLabels) CHECK(v81.at(l) == per);
  CHECK(audit_leakage(segs, s81) == 0);
}

TEST_CASE("held-out blocks are contiguous in time") {
  const auto segs = fixture_segments(100, 256, 256);
  const auto sp = build_splits(segs, {SplitMode::TrainValTest811, 9, true});
  for (auto l : kAllFaultLabels) {
    std::vector<std::size_t> starts;
    for (std::size_t i : sp.test)
      if (segs[i].label == l) starts.push_back(segs[i].origin.start);
    std::sort(starts.begin(), starts.end());
    REQUIRE(starts.size() == 10);
    CHECK(starts.back() - starts.front() == 9 * 256);
  }
}

TEST_CASE("overlapping windows: purge leaves no shared samples") {
  for (std::size_t step : {std::size_t{64}, std::size_t{128}, std::size_t{200}}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto segs = fixture_segments(60, 256, step, 2, seed);
      for (auto mode : {SplitMode::TrainValTest811, SplitMode::TrainTest82, SplitMode::TrainVal81}) {
        const auto sp = build_splits(segs, {mode, seed, true});
        CHECK(brute_leakage(segs, sp) == 0);
        CHECK(audit_leakage(segs, sp) == 0);
        // every split stays class balanced
        for (const auto* part : {&sp.train, &sp.val, &sp.test}) {
          if (part->empty()) continue;
          std::set<std::size_t> sizes;
          for (const auto& [l, n] : class_counts(segs, *part)) sizes.insert(n);
          CHECK(sizes.size() == 1);
        }
      }
    }
  }
}

TEST_CASE("overlap counter matches brute force on arbitrary groups") {
  const auto segs = fixture_segments(30, 256, 96);
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::vector<std::size_t>> groups(3);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto g = rng() % 4;
      if (g < 3) groups[g].push_back(i);
    }
    std::size_t want = 0;
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = a + 1; b < 3; ++b)
        want += oracle::overlapping_pairs(windows_of(segs, groups[a]), windows_of(segs, groups[b]));
    CHECK(count_overlaps(segs, groups) == want);
  }
}

TEST_CASE("splits: seeds, class balance, small classes") {
  auto segs = fixture_segments(40, 256, 256);
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].label != FaultLabel::Normal || segs[i].origin.start < 25 * 256) pool.push_back(i);
  }
  const auto sp = build_splits(segs, pool, {SplitMode::TrainValTest811, 0, true});
  for (auto l : kAllFaultLabels) CHECK(class_counts(segs, sp.train)[l] == 20);
  const auto unbalanced = build_splits(segs, pool, {SplitMode::TrainValTest811, 0, false});
  CHECK(class_counts(segs, unbalanced.train)[FaultLabel::InnerRace] == 32);
  CHECK(build_splits(segs, pool, {SplitMode::TrainValTest811, 0, true}).train == sp.train);

  std::vector<std::size_t> tiny;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].label != FaultLabel::OuterRace || segs[i].origin.start < 5 * 256) tiny.push_back(i);
  }
  const auto e = error_of([&] { build_splits(segs, tiny, {SplitMode::TrainValTest811, 0, true}); });
  CHECK(e.code() == ErrorCode::ClassTooSmall);
  CHECK(e.field("label") == "outer");
  CHECK(e.field("count") == "5");

  const auto bal = balance_classes(segs, pool, 1);
  for (auto l : kAllFaultLabels) CHECK(class_counts(segs, bal)[l] == 25);
}

TEST_CASE("limited subsample follows largest-remainder quotas") {
  const auto segs = fixture_segments(60, 256, 256);
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < segs.size(); ++i)
      if (rng() % 3 != 0) pool.push_back(i);
    const double fraction = 0.05 + 0.9 * static_cast<double>(rng() % 1000) / 1000.0;
    std::vector<std::size_t> counts;
    const auto cc = class_counts(segs, pool);
    for (auto l : kAllFaultLabels) counts.push_back(cc.count(l) ? cc.at(l) : 0);
    const auto want = oracle::largest_remainder(counts, fraction);
    const auto sub = limited_subsample(segs, pool, fraction, rep);
    const auto got = class_counts(segs, sub);
    for (std::size_t c = 0; c < 4; ++c) CHECK((got.count(kAllFaultLabels[c]) ? got.at(kAllFaultLabels[c]) : 0) == want[c]);
    CHECK(std::includes(pool.begin(), pool.end(), sub.begin(), sub.end()));
    CHECK(limited_subsample(segs, pool, fraction, rep) == sub);
  }
  std::vector<std::size_t> all(segs.size());
  std::iota(all.begin(), all.end(), 0);
  CHECK(limited_subsample(segs, all, 0.1, 1) != limited_subsample(segs, all, 0.1, 2));
  CHECK(limited_subsample(segs, all, 0.1, 1).size() == 24);
  CHECK(error_of([&] { limited_subsample(segs, all, 0.001, 1); }).code() == ErrorCode::ClassTooSmall);
  CHECK(error_of([&] { limited_subsample(segs, all, 1.5, 1); }).code() == ErrorCode::InvalidConfig);
}

TEST_CASE("membership hash ignores order, sees content") {
  const auto segs = fixture_segments(10, 256, 256);
  const std::vector<std::size_t> a{1, 5, 9}, b{9, 1, 5}, c{1, 5, 8};
  CHECK(membership_hash(segs, a) == membership_hash(segs, b));
  CHECK(membership_hash(segs, a) != membership_hash(segs, c));
  CHECK(membership_hash(segs, a).size() == 16);
}

TEST_CASE("metrics") {
  const std::vector<FaultLabel> space{FaultLabel::InnerRace, FaultLabel::Normal, FaultLabel::OuterRace};
  const std::vector<int> pred{0, 1, 2, 2, 0, 1}, truth{0, 1, 2, 1, 0, 0};
  const auto m = compute_metrics(pred, truth, space);
  CHECK(m.accuracy == doctest::Approx(4.0 / 6.0));
  CHECK(m.confusion.at(1, 2) == 1);
  CHECK(m.confusion.at(0, 1) == 1);
  CHECK(m.confusion.row_sum(0) == 3);
  CHECK(m.confusion.total() == 6);
  CHECK(m.confusion.trace() == 4);
  CHECK(error_of([&] { compute_metrics(pred, std::vector<int>{0}, space); }).code() == ErrorCode::LengthMismatch);
  CHECK(error_of([&] { compute_metrics(std::vector<int>{3}, std::vector<int>{0}, space); }).code() ==
        ErrorCode::InvalidInput);

  const std::vector<double> acc{0.9, 1.0, 0.95};
  const auto s = summarize(acc);
  CHECK(s.mean == doctest::Approx(0.95));
  CHECK(s.plus() == doctest::Approx(0.05));
  CHECK(s.minus() == doctest::Approx(0.05));
  const std::vector<double> same(3, 0.1);
  CHECK(summarize(same).mean <= summarize(same).max);
}

TEST_CASE("patch/stride grid") {
  const auto g = table8_grid();
  CHECK(g.size() == 16);
  CHECK(std::set<GridCell>(g.begin(), g.end()).size() == 16);
  CHECK(std::find(g.begin(), g.end(), kChosenCell) != g.end());
  for (const auto& [patch, stride] : g) CHECK(stride < patch);
}

TEST_CASE("shipped plan files load and validate") {
  const auto cwru = load_plan_file(kSource / "plans" / "cross_cond_cwru.plan");
  REQUIRE(cwru.size() == 16);
  std::set<std::string> ids;
  for (const auto& p : cwru) {
    ids.insert(p.id);
    CHECK(p.kind == PlanKind::CrossCondition);
    CHECK(p.dataset == "CWRU");
    for (const auto& c : p.test_conditions)
      CHECK(std::find(p.train_conditions.begin(), p.train_conditions.end(), c) == p.train_conditions.end());
    CHECK(std::filesystem::path(p.datasets.at("CWRU")).is_absolute());
  }
  CHECK(ids.size() == 16);
  CHECK(load_plan_file(kSource / "plans" / "cross_cond_pu.plan").size() == 16);
  CHECK(load_plan_file(kSource / "plans" / "cross_cond_jnu.plan").size() == 3);
  CHECK(load_plan_file(kSource / "plans" / "cross_dataset_full.plan").size() == 4);
  const auto lim = load_plan_file(kSource / "plans" / "cross_dataset_limited.plan");
  REQUIRE(lim.size() == 4);
  for (const auto& p : lim) {
    CHECK(p.kind == PlanKind::CrossDatasetLimited);
    CHECK(p.limited_fraction == 0.10);
    CHECK(p.sources.size() == 3);
  }
  const auto sweep = load_plan_file(kSource / "plans" / "sweep_table8.plan");
  REQUIRE(sweep.size() == 1);
  CHECK(sweep[0].grid == table8_grid());
  CHECK(load_plan_file(kSource / "plans" / "single.plan").size() == 5);
}

TEST_CASE("plan parsing rejects bad input") {
  nlohmann::json j = {{"id", "x"}, {"kind", "single"}, {"dataset", "CWRU"}};
  CHECK_NOTHROW(plan_from_json(j).validate());
  auto bad = j;
  bad["epochs"] = 3;
  auto e = error_of([&] { plan_from_json(bad); });
  CHECK(e.code() == ErrorCode::PlanError);
  CHECK(e.field("plan") == "x");
  bad = j;
  bad["kind"] = "grid_search";
  CHECK(error_of([&] { plan_from_json(bad); }).code() == ErrorCode::PlanError);
  bad = j;
  bad["model"] = {{"n_heads", 5}};
  CHECK(error_of([&] { plan_from_json(bad); }).code() == ErrorCode::PlanError);
  bad = j;
  bad["train"] = {{"momentum", 0.9}};
  CHECK(error_of([&] { plan_from_json(bad); }).code() == ErrorCode::PlanError);

  auto cc = plan_from_json({{"id", "c"}, {"kind", "cross_condition"}, {"dataset", "PU"},
                            {"train_conditions", {0, 1}}, {"test_conditions", {1}}});
  CHECK(cc.train_conditions == std::vector<std::string>{"0", "1"});
  CHECK(error_of([&] { cc.validate(); }).code() == ErrorCode::PlanError);
  auto xd = plan_from_json({{"id", "d"}, {"kind", "cross_dataset_full"}, {"sources", {"A", "B"}}, {"target", "A"}});
  CHECK(error_of([&] { xd.validate(); }).code() == ErrorCode::PlanError);

  const auto round = plan_from_json(nlohmann::json::parse(to_json(cc).dump()));
  CHECK(to_json(round) == to_json(cc));

  oracle::TempDir dir("plans");
  std::ofstream(dir / "dup.plan") << R"({"plans":[{"id":"a","dataset":"X"},{"id":"a","dataset":"Y"}]})";
  CHECK(error_of([&] { load_plan_file(dir / "dup.plan"); }).code() == ErrorCode::PlanError);
  std::ofstream(dir / "extra.plan") << R"({"plans":[], "options":{}})";
  CHECK(error_of([&] { load_plan_file(dir / "extra.plan"); }).code() == ErrorCode::PlanError);
  std::ofstream(dir / "c.plan") << "// comment\n{\"plans\":[{\"dataset\":\"X\"}],\n"
                                   "\"defaults\":{\"trials\":4,\"datasets\":{\"X\":\"x/m.json\"}}}";
  const auto ps = load_plan_file(dir / "c.plan");
  REQUIRE(ps.size() == 1);
  CHECK(ps[0].id == "c-0");
  CHECK(ps[0].trials == 4);
  CHECK(ps[0].datasets.at("X") == (dir / "x" / "m.json").string());
  CHECK(error_of([&] { load_plan_file(dir / "none.plan"); }).code() == ErrorCode::PlanError);
}

TEST_CASE("single protocol: leakage-free, reproducible, serial equals parallel trials") {
  Catalog cat;
  cat["SYN"] = fixture_loaded("SYN", 0, 1, 256 + 59 * 128);
  auto plan = tiny_plan("tiny-single", PlanKind::Single);
  plan.dataset = "SYN";
  RunOptions serial;
  serial.parallel_trials = false;
  const auto r1 = run_plan(plan, cat, serial);
  CHECK(r1.leakage == 0);
  CHECK(r1.trials.size() == 2);
  CHECK(r1.trials[1].seed == 1);
  CHECK(r1.split_sizes.at("val") == 4 * 6);
  CHECK(r1.test.min <= r1.test.mean);
  CHECK(r1.test.mean <= r1.test.max);
  const auto r2 = run_plan(plan, cat, serial);
  CHECK(determinism_hash(r1) == determinism_hash(r2));
  RunOptions par;
  par.parallel_trials = true;
  CHECK(determinism_hash(run_plan(plan, cat, par)) == determinism_hash(r1));

  oracle::TempDir dir("report");
  const std::vector<ExperimentReport> reps{r1};
  write_report_json(reps, dir / "r.json");
  const auto j = nlohmann::json::parse(oracle::read_text(dir / "r.json"));
  CHECK(j["reports"][0]["determinism_hash"] == determinism_hash(r1));
  const auto rows = write_report_csv(reps, dir / "r.csv");
  std::size_t epochs = 0;
  for (const auto& t : r1.trials) epochs += t.phases.at(0).log.size();
  CHECK(rows >= 2 * epochs + 2);
  const auto csv = oracle::read_text(dir / "r.csv");
  CHECK(csv.rfind("plan_id,trial,epoch,metric,value\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == rows + 1);
  CHECK(summary_table(r1).find("tiny-single") != std::string::npos);
}

TEST_CASE("cross-condition protocol keeps conditions apart") {
  Catalog cat;
  cat["SYN"] = fixture_loaded("SYN", 0, 3, 256 + 29 * 128);
  auto plan = tiny_plan("tiny-cc", PlanKind::CrossCondition);
  plan.dataset = "SYN";
  plan.train_conditions = {"0", "2"};
  plan.test_conditions = {"1"};
  plan.trials = 1;
  const auto r = run_plan(plan, cat);
  CHECK(r.leakage == 0);
  CHECK(r.split_sizes.at("test_from_train_conditions") == 0);
  CHECK(r.split_sizes.at("test") == 4 * 30);

  plan.test_conditions = {"7"};
  const auto e = error_of([&] { run_plan(plan, cat); });
  CHECK(e.code() == ErrorCode::EmptyCondition);
  CHECK(e.field("condition") == "7");
}

TEST_CASE("limited cross-dataset protocol: both arms see the same subset") {
  Catalog cat;
  cat["A"] = fixture_loaded("A", 0, 1, 256 + 59 * 128);
  cat["B"] = fixture_loaded("B", 1, 1, 256 + 59 * 128,
                            {FaultLabel::InnerRace, FaultLabel::Normal, FaultLabel::OuterRace});
  cat["T"] = fixture_loaded("T", 2, 1, 256 + 59 * 128);
  auto plan = tiny_plan("tiny-limited", PlanKind::CrossDatasetLimited);
  plan.sources = {"A", "B"};
  plan.target = "T";
  plan.limited_fraction = 0.25;
  const auto r = run_plan(plan, cat);
  CHECK(r.leakage == 0);
  CHECK(r.split_sizes.at("phase1_from_target") == 0);
  REQUIRE(r.baseline.has_value());
  REQUIRE(r.transfer_gain.has_value());
  CHECK(*r.transfer_gain == doctest::Approx(r.test.mean - r.baseline->mean));
  CHECK(r.label_space.size() == 4);
  for (const auto& t : r.trials) {
    CHECK(t.transfer_subset_hash == t.baseline_subset_hash);
    CHECK(t.subset_size > 0);
    CHECK(t.phases.size() == 3);
  }
  CHECK(r.trials[0].transfer_subset_hash != r.trials[1].transfer_subset_hash);
}

TEST_CASE("plans naming absent datasets fail before training") {
  Catalog cat;
  cat["A"] = fixture_loaded("A", 0, 1, 256 + 29 * 128);
  auto plan = tiny_plan("tiny-missing", PlanKind::CrossDatasetFull);
  plan.sources = {"A", "B"};
  plan.target = "T";
  const auto e = error_of([&] { run_plan(plan, cat); });
  CHECK(e.code() == ErrorCode::PlanError);
}

TEST_CASE("sweep runs every cell and stars the chosen one") {
  Catalog cat;
  cat["SYN"] = fixture_loaded("SYN", 0, 1, 256 + 29 * 128);
  auto plan = tiny_plan("tiny-sweep", PlanKind::Sweep);
  plan.dataset = "SYN";
  plan.trials = 1;
  plan.train.epochs = 1;
  const std::vector<GridCell> grid{{64, 32}, {128, 8}, {32, 16}};
  const auto r = sweep_patch_stride(grid, plan, cat);
  REQUIRE(r.cells.size() == 3);
  CHECK(r.cells[1].chosen);
  CHECK_FALSE(r.cells[0].chosen);
  CHECK(r.leakage == 0);
  CHECK(summary_table(r).find('*') != std::string::npos);
}

TEST_CASE("corpus emission instead of training") {
  Catalog cat;
  cat["SYN"] = fixture_loaded("SYN", 0, 1, 256 + 29 * 128);
  auto plan = tiny_plan("tiny/corpus", PlanKind::Single);
  plan.dataset = "SYN";
  plan.emit_corpus = true;
  oracle::TempDir dir("corpus");
  RunOptions opts;
  opts.corpus_dir = dir.path();
  const auto r = run_plan(plan, cat, opts);
  REQUIRE(r.corpus.has_value());
  CHECK(r.trials.empty());
  CHECK(r.corpus->train_path.filename() == "tiny_corpus_train.jsonl");
  CHECK(r.corpus->test_lines == r.split_sizes.at("test"));
  CHECK(r.corpus->train_lines == r.split_sizes.at("train") + r.split_sizes.at("val"));
}

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

#include "bdx/experiments/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bdx/csv.hpp"
#include "bdx/error.hpp"

namespace bdx::experiments {

namespace {

using ojson = nlohmann::ordered_json;

ojson confusion_json(const ConfusionMatrix& cm) {
  ojson rows = ojson::array();
  for (std::size_t i = 0; i < cm.size(); ++i) {
    ojson row = ojson::array();
    for (std::size_t j = 0; j < cm.size(); ++j) row.push_back(cm.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ojson summary_json(const Summary& s) {
  return {{"mean", s.mean}, {"plus", s.plus()}, {"minus", s.minus()},
          {"min", s.min},   {"max", s.max}};
}

ojson labels_json(const std::vector<FaultLabel>& labels) {
  ojson out = ojson::array();
  for (auto l : labels) out.push_back(std::string(to_string(l)));
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write file", {{"path", path.string()}});
  return out;
}

}  // namespace

ojson report_to_json(const ExperimentReport& r, bool include_wall_time) {
  ojson j;
  j["plan"] = to_json(r.plan);
  j["label_space"] = labels_json(r.label_space);
  j["split_sizes"] = r.split_sizes;
  j["leakage"] = r.leakage;
  ojson trials = ojson::array();
  for (const auto& t : r.trials) {
    ojson jt;
    jt["trial"] = t.trial;
    jt["seed"] = t.seed;
    ojson phases = ojson::array();
    for (const auto& ph : t.phases) {
      ojson epochs = ojson::array();
      for (const auto& e : ph.log) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"val_accuracy", e.val_accuracy}});
      }
      phases.push_back({{"phase", ph.phase}, {"best_epoch", ph.best_epoch}, {"epochs", epochs}});
    }
    jt["phases"] = std::move(phases);
    jt["test_accuracy"] = t.test_accuracy;
    jt["confusion"] = confusion_json(t.confusion);
    if (t.baseline_accuracy) {
      jt["baseline_accuracy"] = *t.baseline_accuracy;
      jt["baseline_confusion"] = confusion_json(*t.baseline_confusion);
    }
    if (!t.transfer_subset_hash.empty()) {
      jt["subset_size"] = t.subset_size;
      jt["transfer_subset_hash"] = t.transfer_subset_hash;
      jt["baseline_subset_hash"] = t.baseline_subset_hash;
    }
    if (include_wall_time) jt["wall_time_s"] = t.wall_time_s;
    trials.push_back(std::move(jt));
  }
  j["trials"] = std::move(trials);
  if (!r.trials.empty()) {
    j["test_accuracy"] = summary_json(r.test);
    if (r.baseline) j["baseline_accuracy"] = summary_json(*r.baseline);
    if (r.transfer_gain) j["transfer_gain"] = *r.transfer_gain;
    j["best_trial"] = r.best_trial;
    j["best_confusion"] = confusion_json(r.trials[r.best_trial].confusion);
  }
  if (!r.cells.empty()) {
    ojson cells = ojson::array();
    for (const auto& c : r.cells) {
      ojson jc;
      jc["patch_len"] = c.cell.first;
      jc["stride"] = c.cell.second;
      jc["chosen"] = c.chosen;
      jc["accuracies"] = c.accuracies;
      jc["accuracy"] = summary_json(c.accuracy);
      if (include_wall_time) jc["wall_time_s"] = c.wall_time_s;
      cells.push_back(std::move(jc));
    }
    j["cells"] = std::move(cells);
  }
  if (r.corpus) {
    j["corpus"] = {{"train_path", r.corpus->train_path.generic_string()},
                   {"test_path", r.corpus->test_path.generic_string()},
                   {"train_lines", r.corpus->train_lines},
                   {"test_lines", r.corpus->test_lines}};
  }
  if (include_wall_time) j["wall_time_s"] = r.wall_time_s;
  return j;
}

std::string determinism_hash(const ExperimentReport& report) {
  return fnv1a_hex(report_to_json(report, false).dump());
}

void write_report_json(std::span<const ExperimentReport> reports,
                       const std::filesystem::path& path) {
  ojson j;
  j["reports"] = ojson::array();
  for (const auto& r : reports) {
    auto jr = report_to_json(r);
    jr["determinism_hash"] = determinism_hash(r);
    j["reports"].push_back(std::move(jr));
  }
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

std::size_t write_report_csv(std::span<const ExperimentReport> reports,
                             const std::filesystem::path& path) {
  auto out = open_out(path);
  const std::string header[] = {"plan_id", "trial", "epoch", "metric", "value"};
  write_csv_row(out, header);
  std::size_t rows = 0;
  auto row = [&](const std::string& id, const std::string& trial, const std::string& epoch,
                 const std::string& metric, double v) {
    const std::string f[] = {id, trial, epoch, metric, format_double(v)};
    write_csv_row(out, f);
    ++rows;
  };
  for (const auto& r : reports) {
    for (const auto& t : r.trials) {
      const auto trial = std::to_string(t.trial);
      for (const auto& ph : t.phases) {
        for (const auto& e : ph.log) {
          const auto ep = std::to_string(e.epoch);
          row(r.plan.id, trial, ep, ph.phase + ".train_loss", e.train_loss);
          row(r.plan.id, trial, ep, ph.phase + ".val_accuracy", e.val_accuracy);
        }
      }
      row(r.plan.id, trial, "", "test_accuracy", t.test_accuracy);
      if (t.baseline_accuracy) row(r.plan.id, trial, "", "baseline_accuracy", *t.baseline_accuracy);
    }
    for (const auto& c : r.cells) {
      const auto id = r.plan.id + "/p" + std::to_string(c.cell.first) + "s" +
                      std::to_string(c.cell.second);
      for (std::size_t t = 0; t < c.accuracies.size(); ++t) {
        row(id, std::to_string(t), "", "test_accuracy", c.accuracies[t]);
      }
      row(id, "", "", "wall_time_s", c.wall_time_s);
    }
  }
  return rows;
}

std::string summary_table(const ExperimentReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "plan: " << r.plan.id << " (" << to_string(r.plan.kind) << ")\n";
  os << "label space:";
  for (auto l : r.label_space) os << ' ' << to_string(l);
  os << '\n';
  os << "splits:";
  for (const auto& [k, v] : r.split_sizes) os << ' ' << k << '=' << v;
  os << '\n';
  os << "leakage: " << r.leakage << '\n';
  if (r.corpus) {
    os << "corpus: " << r.corpus->train_path.string() << " (" << r.corpus->train_lines
       << " lines), " << r.corpus->test_path.string() << " (" << r.corpus->test_lines
       << " lines)\n";
  }
  if (!r.trials.empty()) {
    const bool paired = r.baseline.has_value();
    os << (paired ? "trial  seed        transfer  baseline\n" : "trial  seed        accuracy\n");
    for (const auto& t : r.trials) {
      os << std::left << std::setw(7) << t.trial << std::setw(12) << t.seed << std::right
         << std::setw(8) << t.test_accuracy;
      if (t.baseline_accuracy) os << "  " << std::setw(8) << *t.baseline_accuracy;
      os << '\n';
    }
    os << "accuracy: " << r.test.mean << " +" << r.test.plus() << "/-" << r.test.minus() << '\n';
    if (paired) {
      os << "baseline: " << r.baseline->mean << " +" << r.baseline->plus() << "/-"
         << r.baseline->minus() << '\n';
      os << "transfer gain: " << *r.transfer_gain << '\n';
    }
  }
  if (!r.cells.empty()) {
    os << "patch  stride  accuracy                   time_s\n";
    for (const auto& c : r.cells) {
      std::ostringstream acc;
      acc << std::fixed << std::setprecision(4) << c.accuracy.mean << " +" << c.accuracy.plus()
          << "/-" << c.accuracy.minus();
      os << std::left << std::setw(7) << c.cell.first << std::setw(8) << c.cell.second
         << std::setw(27) << acc.str() << std::right << std::setprecision(1) << c.wall_time_s
         << std::setprecision(4) << (c.chosen ? "  *" : "") << '\n';
    }
  }
  return os.str();
}

std::size_t export_embeddings(const model::Classifier<float>& model,
                              std::span<const Segment> segments,
                              const std::filesystem::path& path) {
  std::vector<std::span<const double>> windows;
  windows.reserve(segments.size());
  for (const auto& s : segments) windows.push_back(s.samples);
  const auto emb =
      model::embed_batch(model, std::span<const std::span<const double>>(windows));
  auto out = open_out(path);
  const std::size_t d = model.config().d_model;
  std::vector<std::string> f;
  for (std::size_t k = 0; k < d; ++k) f.push_back("e" + std::to_string(k));
  for (const char* c : {"label", "dataset_id", "condition_id", "signal_id", "start"}) f.push_back(c);
  write_csv_row(out, f);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    f.clear();
    for (std::size_t k = 0; k < d; ++k) {
      f.push_back(format_double(static_cast<double>(emb[i](static_cast<Eigen::Index>(k)))));
    }
    const auto& s = segments[i];
    f.push_back(std::string(to_string(s.label)));
    f.push_back(s.dataset_id);
    f.push_back(s.condition_id);
    f.push_back(s.origin.signal_id);
    f.push_back(std::to_string(s.origin.start));
    write_csv_row(out, f);
  }
  if (!out) throw Error(ErrorCode::Io, "embedding write failed", {{"path", path.string()}});
  return segments.size();
}

}  // namespace bdx::experiments

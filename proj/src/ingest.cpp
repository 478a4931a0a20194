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

#include "bdx/ingest.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bdx/csv.hpp"
#include "bdx/error.hpp"

namespace bdx::ingest {

namespace {

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

bool parse_number(const std::string& cell, double& out) {
  const std::string t = trim(cell);
  if (t.empty()) return false;
  const char* b = t.data();
  const char* e = t.data() + t.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

Signal make_signal(std::vector<double> samples, double rate, const SignalMeta& meta) {
  Signal s;
  s.id = meta.id;
  s.samples = std::move(samples);
  s.sample_rate_hz = rate;
  s.dataset_id = meta.dataset_id;
  s.condition_id = meta.condition_id;
  s.label = meta.label;
  s.validate();
  return s;
}

}  // namespace

Signal load_csv(const std::filesystem::path& path, const std::string& column,
                double sample_rate_hz, const SignalMeta& meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open CSV", {{"path", path.string()}});

  std::vector<std::string> rec;
  std::size_t row = 0;
  std::size_t col = 0;
  bool col_resolved = false;
  std::vector<double> samples;

  auto resolve_by_index = [&](std::size_t width) {
    std::size_t idx = 0;
    if (!column.empty()) {
      auto [ptr, ec] = std::from_chars(column.data(), column.data() + column.size(), idx);
      if (ec != std::errc() || ptr != column.data() + column.size()) {
        throw Error(ErrorCode::MissingColumn, "CSV has no header; column '" + column +
                                                  "' must be a 0-based index",
                    {{"path", path.string()}, {"column", column}});
      }
    }
    if (idx >= width) {
      throw Error(ErrorCode::MissingColumn, "CSV column index out of range",
                  {{"path", path.string()}, {"column", column}});
    }
    col = idx;
    col_resolved = true;
  };

  while (read_csv_record(in, rec)) {
    ++row;
    if (rec.size() == 1 && trim(rec[0]).empty()) continue;
    if (row == 1) {
      bool numeric = true;
      double tmp;
      for (const auto& c : rec) numeric = numeric && parse_number(c, tmp);
      if (!numeric) {
        auto it = std::find_if(rec.begin(), rec.end(),
                               [&](const std::string& h) { return trim(h) == column; });
        if (it != rec.end()) {
          col = static_cast<std::size_t>(it - rec.begin());
          col_resolved = true;
        } else {
          resolve_by_index(rec.size());
        }
        continue;
      }
      resolve_by_index(rec.size());
    }
    if (!col_resolved) resolve_by_index(rec.size());
    double v = 0.0;
    if (col >= rec.size() || !parse_number(rec[col], v)) {
      throw Error(ErrorCode::NonNumericCell,
                  "non-numeric cell at row " + std::to_string(row),
                  {{"path", path.string()}, {"row", std::to_string(row)}});
    }
    samples.push_back(v);
  }
  if (samples.empty()) {
    throw Error(ErrorCode::InvalidInput, "CSV column has no samples",
                {{"path", path.string()}});
  }
  return make_signal(std::move(samples), sample_rate_hz, meta);
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open file", {{"path", path.string()}});
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Signal load_raw(const std::filesystem::path& path, ElementType type, ByteOrder order,
                double sample_rate_hz, const SignalMeta& meta) {
  const auto bytes = read_file(path);
  const std::size_t width = type == ElementType::F64 ? 8 : 4;
  if (bytes.size() % width != 0 || bytes.empty()) {
    throw Error(ErrorCode::SizeMismatch, "raw file size is not a multiple of the element size",
                {{"path", path.string()}, {"bytes", std::to_string(bytes.size())},
                 {"element", std::to_string(width)}});
  }
  std::vector<double> samples(bytes.size() / width);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < width; ++b) {
      const std::size_t src = order == ByteOrder::Little ? b : width - 1 - b;
      v |= static_cast<std::uint64_t>(bytes[i * width + src]) << (8 * b);
    }
    samples[i] = type == ElementType::F64
                     ? std::bit_cast<double>(v)
                     : static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(v)));
  }
  return make_signal(std::move(samples), sample_rate_hz, meta);
}

void write_raw(const std::filesystem::path& path, std::span<const double> samples,
               ElementType type, ByteOrder order) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write raw file", {{"path", path.string()}});
  const std::size_t width = type == ElementType::F64 ? 8 : 4;
  std::vector<char> buf(samples.size() * width);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::uint64_t v = type == ElementType::F64
                                ? std::bit_cast<std::uint64_t>(samples[i])
                                : std::bit_cast<std::uint32_t>(static_cast<float>(samples[i]));
    for (std::size_t b = 0; b < width; ++b) {
      const std::size_t dst = order == ByteOrder::Little ? b : width - 1 - b;
      buf[i * width + dst] = static_cast<char>((v >> (8 * b)) & 0xFF);
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::Io, "raw write failed", {{"path", path.string()}});
}

// ---- manifests ----------------------------------------------------------------

std::vector<FaultLabel> default_label_space(const std::string& dataset_id) {
  std::string up = dataset_id;
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (up == "MFPT" || up == "PU") {
    return {FaultLabel::InnerRace, FaultLabel::Normal, FaultLabel::OuterRace};
  }
  return {std::begin(kAllFaultLabels), std::end(kAllFaultLabels)};
}

namespace {

FileFormat format_from(const std::string& fmt, const std::filesystem::path& p,
                       std::size_t entry) {
  std::string f = fmt;
  if (f.empty()) {
    f = p.extension().string();
    if (!f.empty() && f[0] == '.') f.erase(0, 1);
  }
  std::transform(f.begin(), f.end(), f.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (f == "csv" || f == "txt") return FileFormat::Csv;
  if (f == "mat") return FileFormat::Mat;
  if (f == "raw" || f == "bin" || f == "f64" || f == "f32") return FileFormat::Raw;
  throw Error(ErrorCode::ManifestError, "cannot infer file format",
              {{"entry", std::to_string(entry)}, {"path", p.string()}});
}

std::string format_name(FileFormat f) {
  switch (f) {
    case FileFormat::Csv: return "csv";
    case FileFormat::Raw: return "raw";
    case FileFormat::Mat: return "mat";
  }
  return "csv";
}

}  // namespace

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest", {{"path", path.string()}});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ManifestError, std::string("manifest is not valid JSON: ") + e.what(),
                {{"path", path.string()}});
  }
  const auto base = path.parent_path();
  DatasetManifest m;
  try {
    m.dataset_id = j.at("dataset_id").get<std::string>();
    if (j.contains("labels")) {
      for (const auto& l : j.at("labels")) {
        auto label = parse_fault_label(l.get<std::string>());
        if (!label) {
          throw Error(ErrorCode::ManifestError, "unknown label in label space",
                      {{"path", path.string()}, {"label", l.get<std::string>()}});
        }
        m.label_space.push_back(*label);
      }
      std::sort(m.label_space.begin(), m.label_space.end());
      m.label_space.erase(std::unique(m.label_space.begin(), m.label_space.end()),
                          m.label_space.end());
    } else {
      m.label_space = default_label_space(m.dataset_id);
    }
    const auto& entries = j.contains("entries") ? j.at("entries") : nlohmann::json::array();
    std::vector<std::pair<std::string, std::string>> seen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const std::map<std::string, std::string> where = {{"entry", std::to_string(i)},
                                                        {"path", path.string()}};
      ManifestEntry me;
      try {
        std::filesystem::path p = e.at("path").get<std::string>();
        me.path = p.is_absolute() ? p : base / p;
        me.format = format_from(e.value("format", std::string()), me.path, i);
        me.variable = e.value("variable", std::string());
        me.sample_rate_hz = e.at("sample_rate_hz").get<double>();
        me.condition_id = e.contains("condition_id")
                              ? (e.at("condition_id").is_string()
                                     ? e.at("condition_id").get<std::string>()
                                     : e.at("condition_id").dump())
                              : std::string("0");
        const auto label_text = e.at("label").get<std::string>();
        auto label = parse_fault_label(label_text);
        if (!label) {
          throw Error(ErrorCode::ManifestLabelError, "unknown fault label '" + label_text + "'",
                      where);
        }
        me.label = *label;
        const auto dtype = e.value("dtype", std::string("f64"));
        if (dtype == "f64") {
          me.dtype = ElementType::F64;
        } else if (dtype == "f32") {
          me.dtype = ElementType::F32;
        } else {
          throw Error(ErrorCode::ManifestError, "dtype must be f32 or f64", where);
        }
        const auto order = e.value("byte_order", std::string("little"));
        if (order == "little") {
          me.byte_order = ByteOrder::Little;
        } else if (order == "big") {
          me.byte_order = ByteOrder::Big;
        } else {
          throw Error(ErrorCode::ManifestError, "byte_order must be little or big", where);
        }
      } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::ManifestError,
                    "manifest entry " + std::to_string(i) + ": " + ex.what(), where);
      }
      if (!(me.sample_rate_hz > 0.0)) {
        throw Error(ErrorCode::ManifestError, "sample_rate_hz must be positive", where);
      }
      if (!std::binary_search(m.label_space.begin(), m.label_space.end(), me.label)) {
        auto fields = where;
        fields["label"] = std::string(to_string(me.label));
        throw Error(ErrorCode::ManifestLabelError,
                    "label '" + std::string(to_string(me.label)) +
                        "' is outside the label space of " + m.dataset_id,
                    fields);
      }
      const std::pair<std::string, std::string> key{me.path.lexically_normal().string(),
                                                    me.variable};
      if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
        throw Error(ErrorCode::ManifestError, "duplicate (path, variable) entry", where);
      }
      seen.push_back(key);
      m.entries.push_back(std::move(me));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ManifestError, std::string("manifest: ") + e.what(),
                {{"path", path.string()}});
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["dataset_id"] = manifest.dataset_id;
  j["labels"] = nlohmann::ordered_json::array();
  for (auto l : manifest.label_space) j["labels"].push_back(std::string(to_string(l)));
  j["entries"] = nlohmann::ordered_json::array();
  const auto base = path.parent_path();
  for (const auto& e : manifest.entries) {
    nlohmann::ordered_json je;
    je["path"] = e.path.lexically_proximate(base.empty() ? "." : base).generic_string();
    je["format"] = format_name(e.format);
    je["variable"] = e.variable;
    je["sample_rate_hz"] = e.sample_rate_hz;
    je["condition_id"] = e.condition_id;
    je["label"] = std::string(to_string(e.label));
    if (e.format == FileFormat::Raw) {
      je["dtype"] = e.dtype == ElementType::F64 ? "f64" : "f32";
      je["byte_order"] = e.byte_order == ByteOrder::Little ? "little" : "big";
    }
    j["entries"].push_back(std::move(je));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write manifest", {{"path", path.string()}});
  out << j.dump(2) << '\n';
}

LoadedDataset load_dataset(const DatasetManifest& manifest) {
  LoadedDataset ds;
  ds.dataset_id = manifest.dataset_id;
  ds.label_space = manifest.label_space;
  if (manifest.entries.empty()) {
    ds.warnings.push_back("manifest for " + manifest.dataset_id + " has no entries");
    return ds;
  }
  std::vector<std::string> failures;
  std::string first_index;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    SignalMeta meta;
    meta.dataset_id = manifest.dataset_id;
    meta.condition_id = e.condition_id;
    meta.label = e.label;
    meta.id = manifest.dataset_id + "#" + std::to_string(i) + ":" +
              e.path.filename().string() + (e.variable.empty() ? "" : ":" + e.variable);
    try {
      switch (e.format) {
        case FileFormat::Csv:
          ds.signals.push_back(load_csv(e.path, e.variable, e.sample_rate_hz, meta));
          break;
        case FileFormat::Raw:
          ds.signals.push_back(load_raw(e.path, e.dtype, e.byte_order, e.sample_rate_hz, meta));
          break;
        case FileFormat::Mat:
          ds.signals.push_back(load_mat_v5(e.path, e.variable, e.sample_rate_hz, meta));
          break;
      }
    } catch (const Error& err) {
      if (first_index.empty()) first_index = std::to_string(i);
      failures.push_back("entry " + std::to_string(i) + ": " + err.structured());
    }
  }
  if (!failures.empty()) {
    std::ostringstream msg;
    msg << failures.size() << " manifest entr" << (failures.size() == 1 ? "y" : "ies")
        << " failed";
    for (const auto& f : failures) msg << "; " << f;
    throw Error(ErrorCode::ManifestError, msg.str(),
                {{"entry", first_index}, {"failed", std::to_string(failures.size())}});
  }
  return ds;
}

LoadedDataset load_manifest(const std::filesystem::path& path) {
  return load_dataset(read_manifest(path));
}

}  // namespace bdx::ingest

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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bdx/signal.hpp"

namespace bdx::ingest {

struct SignalMeta {
  std::string id;
  std::string dataset_id;
  std::string condition_id;
  FaultLabel label = FaultLabel::Normal;
};

// One numeric column of a CSV file. `column` is a header name, or a 0-based
// index ("" means column 0). A header row is detected when the first record
// has a non-numeric cell. NonNumericCell carries the 1-based file row.
Signal load_csv(const std::filesystem::path& path, const std::string& column,
                double sample_rate_hz, const SignalMeta& meta);

enum class ElementType { F32, F64 };
enum class ByteOrder { Little, Big };

Signal load_raw(const std::filesystem::path& path, ElementType type, ByteOrder order,
                double sample_rate_hz, const SignalMeta& meta);
void write_raw(const std::filesystem::path& path, std::span<const double> samples,
               ElementType type, ByteOrder order);

// ---- MAT-file Level 5 subset ----------------------------------------------

struct MatArray {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool single = false;             // mxSINGLE_CLASS
  bool big_endian = false;
  std::vector<double> data;        // column-major
};

// Every supported variable in the file, in file order. Unsupported arrays
// (complex, sparse, cell, struct, char, integer classes, >2-D) are skipped
// and their names returned in `skipped`.
struct MatContents {
  std::vector<MatArray> arrays;
  std::vector<std::string> skipped;
  bool big_endian = false;
};

// Throws BadMagic, UnsupportedElement{type}, CorruptElement{offset}.
MatContents parse_mat_v5(std::span<const std::uint8_t> bytes);
// Throws VariableNotFound{name, found} in addition, or UnsupportedElement when
// the named variable exists but is outside the supported subset.
MatArray find_mat_variable(std::span<const std::uint8_t> bytes, const std::string& name);

Signal load_mat_v5(const std::filesystem::path& path, const std::string& variable,
                   double sample_rate_hz, const SignalMeta& meta);

// ---- manifests --------------------------------------------------------------

enum class FileFormat { Csv, Raw, Mat };

struct ManifestEntry {
  std::filesystem::path path;  // resolved against the manifest directory
  FileFormat format = FileFormat::Csv;
  std::string variable;        // MAT variable or CSV column
  double sample_rate_hz = 0.0;
  std::string condition_id;
  FaultLabel label = FaultLabel::Normal;
  ElementType dtype = ElementType::F64;
  ByteOrder byte_order = ByteOrder::Little;
};

struct DatasetManifest {
  std::string dataset_id;
  std::vector<FaultLabel> label_space;  // canonical order
  std::vector<ManifestEntry> entries;
};

// Four classes for CWRU/JNU-like sets, three (no rolling element) for
// MFPT/PU; unknown ids get all four.
std::vector<FaultLabel> default_label_space(const std::string& dataset_id);

// JSON manifest:
//   {"dataset_id": "CWRU", "labels": ["ball", ...] (optional),
//    "entries": [{"path", "format" (csv|raw|mat, else from extension),
//                 "variable", "sample_rate_hz", "condition_id", "label",
//                 "dtype" (f32|f64), "byte_order" (little|big)}]}
// Throws ManifestError / ManifestLabelError with the entry index.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct LoadedDataset {
  std::string dataset_id;
  std::vector<FaultLabel> label_space;
  std::vector<Signal> signals;  // manifest order
  std::vector<std::string> warnings;
};

// Loads every entry; failures are collected and rethrown as one
// ManifestError listing each failing entry index.
LoadedDataset load_dataset(const DatasetManifest& manifest);
LoadedDataset load_manifest(const std::filesystem::path& path);

}  // namespace bdx::ingest

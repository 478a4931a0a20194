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

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bdx/features.hpp"
#include "bdx/signal.hpp"

namespace bdx::text {

// One instruction-tuning example. Serialized with exactly the keys
// instruction, input, output, history (in that order).
struct FinetuneRecord {
  std::string instruction;
  std::string input;
  std::string output;
  std::vector<std::pair<std::string, std::string>> history;

  bool operator==(const FinetuneRecord&) const = default;
};

inline constexpr std::string_view kValuePlaceholder = "{value}";

struct PromptTemplate {
  std::string instruction;
  // Phrase i renders feature p(i+1); each must contain {value} exactly once.
  // The rendered input is the plain concatenation of the 24 phrases.
  std::array<std::string, kNumFeatures> phrases;
  std::map<FaultLabel, std::string> outputs;
  std::string undefined_text = "undefined";
  int significant_digits = 6;

  // Throws TemplateIncomplete naming the first missing piece.
  void validate() const;
};

// English template shaped like the reference record.
PromptTemplate default_template();

// Reads a template from JSON. Keys: instruction, phrases (24 strings), outputs
// (label token -> text), optional undefined, significant_digits.
PromptTemplate load_template(const std::filesystem::path& path);

// Fixed notation with `digits` significant digits when 1e-3 <= |v| < 1e6,
// scientific with digits-1 fractional digits otherwise; 0 prints as "0".
std::string format_feature_value(double v, int digits = 6);

FinetuneRecord render_record(const FeatureVector& fv, FaultLabel label,
                             const PromptTemplate& tpl);

// Compact JSON object on one line, UTF-8, fixed key order.
std::string to_json_line(const FinetuneRecord& rec);
// Throws MalformedLine / MissingKey with the supplied line number.
FinetuneRecord from_json_line(const std::string& line, std::size_t line_no = 1);

std::size_t emit_corpus(std::span<const FinetuneRecord> records,
                        const std::filesystem::path& path);
std::vector<FinetuneRecord> parse_corpus(const std::filesystem::path& path);

}  // namespace bdx::text

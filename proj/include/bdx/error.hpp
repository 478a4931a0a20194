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

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bdx {

enum class ErrorCode {
  InvalidConfig,
  InvalidInput,
  SignalTooShort,
  EmptyInput,
  ShapeMismatch,
  OddDimension,
  RankTooLarge,
  TemplateIncomplete,
  MalformedLine,
  MissingKey,
  Io,
  MissingColumn,
  NonNumericCell,
  SizeMismatch,
  BadMagic,
  UnsupportedElement,
  VariableNotFound,
  CorruptElement,
  ManifestError,
  ManifestLabelError,
  EmptyDataset,
  DivergedLoss,
  VersionMismatch,
  CorruptFile,
  ClassTooSmall,
  EmptyCondition,
  LabelSpaceMismatch,
  LengthMismatch,
  PlanError,
};

std::string_view error_code_name(ErrorCode code);

// Every failure in the library is reported as an Error. The fields map carries
// machine-readable context (line numbers, offsets, key names) that the CLI
// prints as key=value pairs.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::map<std::string, std::string> fields = {})
      : std::runtime_error(message), code_(code), fields_(std::move(fields)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::map<std::string, std::string>& fields() const noexcept {
    return fields_;
  }
  std::string field(const std::string& key) const {
    auto it = fields_.find(key);
    return it == fields_.end() ? std::string() : it->second;
  }

  // "error=<Code> msg=\"...\" k=v ..." on a single line.
  std::string structured() const;

 private:
  ErrorCode code_;
  std::map<std::string, std::string> fields_;
};

}  // namespace bdx

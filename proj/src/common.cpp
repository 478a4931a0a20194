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

#include <omp.h>

#include <cstdlib>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "bdx/error.hpp"
#include "bdx/parallel.hpp"

namespace bdx {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OddDimension: return "OddDimension";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::TemplateIncomplete: return "TemplateIncomplete";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedElement: return "UnsupportedElement";
    case ErrorCode::VariableNotFound: return "VariableNotFound";
    case ErrorCode::CorruptElement: return "CorruptElement";
    case ErrorCode::ManifestError: return "ManifestError";
    case ErrorCode::ManifestLabelError: return "ManifestLabelError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::EmptyCondition: return "EmptyCondition";
    case ErrorCode::LabelSpaceMismatch: return "LabelSpaceMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::PlanError: return "PlanError";
  }
  return "Unknown";
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string Error::structured() const {
  std::ostringstream os;
  os << "error=" << error_code_name(code_) << " msg=" << quote(what());
  for (const auto& [k, v] : fields_) {
    os << ' ' << k << '=';
    if (v.find_first_of(" \"=") != std::string::npos) {
      os << quote(v);
    } else {
      os << v;
    }
  }
  return os.str();
}

void set_num_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

}  // namespace bdx
